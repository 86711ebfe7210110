#include <cmath>

#include "doctest.h"
#include "fipp/hjb_validator.hpp"
#include "test_helpers.hpp"

using namespace fipp;
using namespace fipp::testing;

namespace {

ConstraintSet wide_box(int n = 1, double w = 10.0) {
    return ConstraintSet::box(Vec::Constant(n, -w), Vec::Constant(n, w));
}

PiField affine_field(double a, const Vec& sigma) {
    PiField F;
    F.value = [a, sigma](double, const Vec& y, double z) { return a + sigma.dot(y) + z; };
    F.affine = true;
    F.sigma = sigma;
    return F;
}

} // namespace

TEST_CASE("factor generator on reference fields") {
    SUBCASE("constants are annihilated") {
        auto s = market1(0.05, 0.04, 0.02, 0.09, 0.4);
        add_atom(s, 0.0, 0.5, 1.0);
        const auto F = generic_field([](double, const Vec&, double) { return 5.0; });
        CHECK(operator_AY(s, F, 0.0, s.y0, 0.0) == 0.0);
    }

    SUBCASE("affine field rides the drift") {
        const auto s = market1(0.0, 0.0, 0.0, 0.0, 1.0); // b^Y = 1
        const auto F = affine_field(0.0, vec({1.0}));
        CHECK(operator_AY(s, F, 0.0, s.y0, 0.0) == 1.0);
    }

    SUBCASE("large factor marks enter untruncated") {
        auto s = market1(0.0, 0.0);
        add_atom(s, 0.0, 2.0, 0.5); // |v| > truncation radius
        const auto F = affine_field(0.0, vec({1.0}));
        CHECK(std::abs(operator_AY(s, F, 0.0, s.y0, 0.0) - 1.0) < 1e-14);
    }

    SUBCASE("finite differences track an analytic generator") {
        auto s = market1(0.0, 0.0, 0.0, 0.09, 0.4);
        add_atom(s, 0.0, 0.5, 1.0);
        const auto F = generic_field(
            [](double, const Vec& y, double z) { return std::sin(y[0]) + z; });
        const Vec y = vec({0.3});
        const double exact = 0.4 * std::cos(0.3) - 0.5 * 0.09 * std::sin(0.3) +
                             1.0 * (std::sin(0.8) - std::sin(0.3) - 0.5 * std::cos(0.3));
        CHECK(std::abs(operator_AY(s, F, 0.0, y, 0.0) - exact) < 1e-6);
    }
}

TEST_CASE("default verification grid") {
    const auto s = bs_factor(); // tr c^Y = 0.09, half-width 0.9
    const auto grid = default_grid(s);
    CHECK(grid.size() == 3 * 21 * 3);
    double ymin = 1e9, ymax = -1e9;
    bool t_ok = true;
    for (const auto& gp : grid) {
        ymin = std::min(ymin, gp.y[0]);
        ymax = std::max(ymax, gp.y[0]);
        t_ok = t_ok && (gp.t == 0.0 || gp.t == 0.5 || gp.t == 1.0);
    }
    CHECK(t_ok);
    CHECK(std::abs(ymin - (-0.9)) < 1e-12);
    CHECK(std::abs(ymax - 0.9) < 1e-12);
}

TEST_CASE("explicit solution satisfies the forward equation on the grid") {
    const auto s = bs_factor();
    const PowerParams pp{0.5, 0.0};
    const TiltParams tilt{vec({1.0 / 3.0})};
    const auto C = wide_box();
    const auto sol = make_tilted_solution(s, pp, tilt, C);
    const auto grid = default_grid(s);

    const auto r = hjb_residual(s, pp, field_from(sol), sol.g, C, grid);
    CHECK(r.max_abs < 1e-8);
    CHECK(r.max_identity_gap < 1e-10);
    REQUIRE(r.points.size() == grid.size());

    // shifting the clock drift by 0.01 moves the residual by exactly that
    const DriftFieldFn g_off = [&sol](double t, const Vec& y) {
        return sol.g(t, y) + 0.01;
    };
    const auto r2 = hjb_residual(s, pp, field_from(sol), g_off, C, grid);
    for (const double v : r2.residual) CHECK(std::abs(v - 0.01) < 1e-8);
}

TEST_CASE("monotone-mode solution and a wrong candidate") {
    const auto s = market1(0.05, 0.04);
    const PowerParams pp{0.5, 0.0};
    const auto C = wide_box();
    const auto sol = make_tilted_solution(s, pp, TiltParams{Vec::Zero(1)}, C);
    const auto grid = default_grid(s);

    const auto good = hjb_residual(s, pp, field_from(sol), sol.g, C, grid);
    CHECK(good.max_abs < 1e-8);
    CHECK(good.max_identity_gap < 1e-10);

    // a stalled clock leaves the full objective in the residual; the check
    // reports it instead of repairing the candidate
    const auto bad = hjb_residual(
        s, pp, field_from(sol), [](double, const Vec&) { return 0.0; }, C, grid);
    CHECK(std::abs(bad.max_abs - 0.03125) < 1e-10);
    CHECK(std::abs(bad.rms - 0.03125) < 1e-10);
}

TEST_CASE("degenerate market has an identically zero residual") {
    const auto s = market1(0.0, 0.0);
    const PowerParams pp{0.5, 0.0};
    const auto C = wide_box();
    const auto sol = make_tilted_solution(s, pp, TiltParams{Vec::Zero(1)}, C);
    const auto r = hjb_residual(s, pp, field_from(sol), sol.g, C, default_grid(s));
    CHECK(r.max_abs == 0.0);
    CHECK(r.rms == 0.0);
}
