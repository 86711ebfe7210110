#include <cmath>

#include "doctest.h"
#include "fipp/fipp_engine.hpp"
#include "fipp/rng.hpp"
#include "test_helpers.hpp"

using namespace fipp;
using namespace fipp::testing;

namespace {

ConstraintSet wide_box(int n = 1, double w = 10.0) {
    return ConstraintSet::box(Vec::Constant(n, -w), Vec::Constant(n, w));
}

} // namespace

TEST_CASE("solution drift of the tilted factor example") {
    // sup Phi = 0.1225 at sigma = 1/3; c^Y = 0.09, b^Y = 0:
    // Psi = -0.5*0.1225 - 0.5*(1/9)*0.09 = -0.06625
    const auto s = bs_factor();
    const PowerParams pp{0.5, 0.0};
    const Vec sigma = vec({1.0 / 3.0});
    const double psi = psi_sigma(s, pp, sigma, 0.0, s.y0, wide_box());
    CHECK(std::abs(psi - (-0.06625)) < 1e-12);
}

TEST_CASE("factor-jump compensator in the solution drift") {
    // all coefficients zero, one factor atom v=1 at rate 1, strategy pinned at
    // the origin: Psi = -(e - 2)
    auto s = market1(0.0, 0.0);
    add_atom(s, 0.0, 1.0, 1.0);
    const PowerParams pp{0.5, 0.0};
    const double psi =
        psi_sigma(s, pp, vec({1.0}), 0.0, s.y0, ConstraintSet::singleton_origin(1));
    CHECK(std::abs(psi - (-(std::exp(1.0) - 2.0))) < 1e-14);
}

TEST_CASE("solution drift and driver cancel to the factor drift term") {
    // Psi^sigma + f(Z=sigma, W=sigma'v) = -sigma'b^Y, identically
    std::vector<FactorMarketSpec> markets;
    markets.push_back(bs_factor());
    {
        auto s = market1(0.08, 0.03, 0.02, 0.05, 0.4);
        add_atom(s, 0.3, 0.5, 0.7);
        add_atom(s, -0.2, -0.4, 0.5);
        markets.push_back(s);
    }
    {
        auto s = market1(0.1, 0.0);
        add_atom(s, 1.0, 2.0, 0.25); // large factor mark
        markets.push_back(s);
    }

    const PowerParams pp{0.5, 0.0};
    const auto C = wide_box(1, 3.0);
    const Philox rng(301, 0);
    std::uint64_t draw = 0;
    for (const auto& s : markets) {
        const Vec bY = s.drift_Y(0.0, s.y0);
        for (int trial = 0; trial < 40; ++trial) {
            const double t = rng.u01(draw++);
            const Vec y = vec({-1.0 + 2.0 * rng.u01(draw++)});
            const Vec sigma = vec({-1.0 + 2.0 * rng.u01(draw++)});
            const JumpTiltFn W = [&sigma](const Vec& v) { return sigma.dot(v); };
            const double psi = psi_sigma(s, pp, sigma, t, y, C);
            const double f = driver_f(s, pp, t, y, sigma, W, C);
            CHECK(std::abs(psi + f + sigma.dot(bY)) < 1e-12);
        }
    }
}

TEST_CASE("time-monotone mode") {
    const PowerParams pp{0.5, 0.0};

    SUBCASE("constant-coefficient value") {
        const auto s = market1(0.05, 0.04);
        CHECK(std::abs(time_monotone_f(s, pp, s.y0, wide_box()) - 0.03125) < 1e-12);
    }

    SUBCASE("sign follows the exponent") {
        const auto s = market1(0.05, 0.04);
        CHECK(time_monotone_f(s, pp, s.y0, wide_box()) >= 0.0);
        const PowerParams neg{-1.0, 0.0};
        CHECK(time_monotone_f(s, neg, s.y0, wide_box()) <= 0.0);
    }

    SUBCASE("diffusive factor is rejected") {
        const auto s = market1(0.05, 0.04, 0.0, 0.09);
        CHECK_THROWS_AS(time_monotone_f(s, pp, s.y0, wide_box()), std::invalid_argument);
    }

    SUBCASE("factor jumps are rejected") {
        auto s = market1(0.05, 0.04);
        add_atom(s, 0.0, 1.0, 1.0);
        CHECK_THROWS_AS(time_monotone_f(s, pp, s.y0, wide_box()), std::invalid_argument);
    }
}

TEST_CASE("closed-form seed utility solves its PDE") {
    // h = 1e-4 balances truncation (~h^2) against second-difference roundoff (~eps/h^2)
    for (const double p : {0.5, -1.0, 0.3}) {
        for (const double x : {0.5, 1.0, 2.0}) {
            for (const double tau : {0.1, 1.0, 3.0}) {
                CHECK(std::abs(g_function_pde_residual(x, tau, p, 1e-4)) < 1e-6);
            }
        }
    }
}

TEST_CASE("seed utility composed with the monotone clock reproduces the level") {
    for (const double p : {0.5, -1.0, 0.3}) {
        for (const double pi0 : {-0.5, 0.0, 0.7}) {
            const double x = 1.3;
            const double tau = -(2.0 * (1.0 - p) / p) * pi0;
            const double direct = (std::pow(x, p) / p) * std::exp(pi0);
            CHECK(std::abs(g_function(x, tau, p) - direct) < 1e-12);
        }
    }
}

TEST_CASE("time-monotone construction on a driftless factor") {
    const auto s = market1(0.05, 0.04);
    const PowerParams pp{0.5, 0.0};
    const auto bundle = simulate_paths(s, {1.0, 0.01, 3, 11, 1});
    const auto r = construct_time_monotone(s, pp, wide_box(), bundle, vec({1.0, 2.0}));

    REQUIRE(r.pi0.size() == 3);
    REQUIRE(r.pi0[0].size() == static_cast<std::size_t>(bundle.steps + 1));
    for (int i = 0; i < 3; ++i) {
        CHECK(r.pi0[i][0] == 0.0);
        CHECK(std::abs(r.pi0[i][bundle.steps] - (-0.03125)) < 1e-12);
        // U_0(1) = 2, U_1(1) = 2 e^{-0.03125}
        CHECK(std::abs(r.U[i][0][0] - 2.0) < 1e-12);
        CHECK(std::abs(r.U[i][bundle.steps][0] - 2.0 * std::exp(-0.03125)) < 1e-12);
        // power scaling in wealth: U(2) = 2^p U(1)
        CHECK(std::abs(r.U[i][bundle.steps][1] -
                       std::sqrt(2.0) * r.U[i][bundle.steps][0]) < 1e-12);
    }

    CHECK_THROWS_AS(construct_time_monotone(s, pp, wide_box(), bundle, vec({-1.0, 2.0})),
                    std::invalid_argument);
}

TEST_CASE("tilted construction integrates the log-level exactly") {
    const PowerParams pp{0.5, 0.1};
    const TiltParams tilt{vec({1.0 / 3.0})};

    SUBCASE("diffusive factor") {
        const auto s = bs_factor();
        const auto b = simulate_paths(s, {1.0, 0.02, 5, 17, 1});
        const auto r = construct_tilted_fipp(s, pp, tilt, wide_box(), b);
        const double psi = psi_sigma(s, pp, tilt.sigma, 0.0, s.y0, wide_box());
        for (int i = 0; i < b.n_paths; ++i) {
            const double expected =
                pp.D0 + psi * b.T + tilt.sigma.dot(b.y_at(i, b.steps) - s.y0);
            CHECK(std::abs(r.pi_paths[i][b.steps] - expected) < 1e-12);
        }
    }

    SUBCASE("factor jumps flow through the level") {
        auto s = market1(0.05, 0.04, 0.0, 0.01, 0.2);
        add_atom(s, 0.0, 0.5, 2.0);
        const auto b = simulate_paths(s, {1.0, 0.02, 4, 23, 1});
        const auto r = construct_tilted_fipp(s, pp, tilt, wide_box(), b);
        const double psi = psi_sigma(s, pp, tilt.sigma, 0.0, s.y0, wide_box());
        bool saw_jump = false;
        for (int i = 0; i < b.n_paths; ++i) {
            saw_jump = saw_jump || !b.jumps[i].empty();
            const double expected =
                pp.D0 + psi * b.T + tilt.sigma.dot(b.y_at(i, b.steps) - s.y0);
            CHECK(std::abs(r.pi_paths[i][b.steps] - expected) < 1e-12);
        }
        CHECK(saw_jump); // rate 2 over unit horizon: some path must jump
    }
}

TEST_CASE("zero tilt reduces the solution to the monotone mode") {
    const auto s = market1(0.05, 0.04);
    const PowerParams pp{0.5, 0.0};
    const auto sol = make_tilted_solution(s, pp, TiltParams{Vec::Zero(1)}, wide_box());
    CHECK(std::abs(sol.g(0.0, s.y0) - (-0.03125)) < 1e-12);
    CHECK(std::abs(sol.strategy(0.0, s.y0)[0] - 2.5) < 1e-8);
    CHECK(sol.pi(0.3, s.y0, -0.5) == -0.5);
    CHECK(sol.jump_diff(vec({2.0})) == 0.0);
}

TEST_CASE("finite-variation part accumulates the objective") {
    const PowerParams pp{0.5, 0.0};
    const std::vector<double> phi(5, 0.0625);
    const auto V = finite_variation_drift(pp, phi, 0.25);
    REQUIRE(V.size() == 5);
    for (int k = 0; k < 5; ++k)
        CHECK(std::abs(V[k] - (-0.5 * 0.0625 * 0.25 * k)) < 1e-15);
}

TEST_CASE("projection formula for the diffusion subcase") {
    const auto s = bs_factor();
    const PowerParams pp{0.5, 0.0};
    const Vec st = vec({0.1});             // noise tilt sigma^Y' sigma
    const TiltParams tilt{vec({1.0 / 3.0})}; // the matching factor tilt

    SUBCASE("unconstrained value") {
        const Vec pi = optimal_strategy_projection(s, pp, st, 0.0, s.y0, wide_box());
        CHECK(std::abs(pi[0] - 3.5) < 1e-8);
    }

    SUBCASE("agreement with the direct optimizer across constraint shapes") {
        std::vector<ConstraintSet> sets;
        sets.push_back(ConstraintSet::box(vec({0.0}), vec({1.0})));
        sets.push_back(ConstraintSet::ball(vec({0.0}), 2.0));
        sets.push_back(
            ConstraintSet::halfspaces(mat({{1.0}, {-1.0}}), vec({0.5, 1.0}), false));
        for (const auto& C : sets) {
            const Vec via_proj = optimal_strategy_projection(s, pp, st, 0.0, s.y0, C);
            const auto via_opt = maximize_phi(s, pp, tilt, 0.0, s.y0, C);
            REQUIRE(via_opt.status == OptimizeResult::Status::Ok);
            CHECK(std::abs(via_proj[0] - via_opt.pi_star[0]) < 1e-6);
        }
    }

    SUBCASE("jumps are out of scope") {
        auto sj = bs_factor();
        add_atom(sj, 0.5, 0.0, 1.0);
        CHECK_THROWS_AS(optimal_strategy_projection(sj, pp, st, 0.0, sj.y0, wide_box()),
                        std::invalid_argument);
    }

    SUBCASE("unspanned asset diffusion is detected") {
        auto sb = market1(0.05, 0.05, 0.06, 0.09); // c^R != (c^{RY}/sigma^Y)^2
        const auto msg = thrown_message([&] {
            optimal_strategy_projection(sb, pp, st, 0.0, sb.y0, wide_box());
        });
        CHECK(message_mentions(msg, "not spanned"));
    }
}

TEST_CASE("pathwise residual of the constructed solution vanishes") {
    const PowerParams pp{0.5, 0.0};
    const TiltParams tilt{vec({1.0 / 3.0})};

    SUBCASE("diffusive factor") {
        const auto s = bs_factor();
        const auto b = simulate_paths(s, {1.0, 0.01, 20, 31, 1});
        const auto r = construct_tilted_fipp(s, pp, tilt, wide_box(), b);
        const auto stats = bsde_residual(s, pp, tilt, wide_box(), b, r.pi_paths);
        CHECK(stats.max_abs < 1e-12);
        CHECK(stats.rms < 1e-12);
        REQUIRE(stats.per_path_rms.size() == 20);
    }

    SUBCASE("small factor jumps cancel against the compensator") {
        auto s = market1(0.05, 0.04, 0.0, 0.01, 0.2);
        add_atom(s, 0.0, 0.5, 2.0);
        const auto b = simulate_paths(s, {1.0, 0.01, 10, 37, 1});
        const auto r = construct_tilted_fipp(s, pp, tilt, wide_box(), b);
        const auto stats = bsde_residual(s, pp, tilt, wide_box(), b, r.pi_paths);
        CHECK(stats.max_abs < 1e-12);
    }

    SUBCASE("mismatched level grid is rejected") {
        const auto s = bs_factor();
        const auto b = simulate_paths(s, {1.0, 0.01, 4, 31, 1});
        std::vector<std::vector<double>> bad(4, std::vector<double>(b.steps)); // one short
        CHECK_THROWS_AS(bsde_residual(s, pp, tilt, wide_box(), b, bad),
                        std::invalid_argument);
    }
}
