#include <doctest.h>

#include "fipp/market_model.hpp"
#include "test_helpers.hpp"

#include <cstdlib>

using namespace fipp;
using namespace fipp::testing;

TEST_CASE("effective drift subtracts only small-jump compensation") {
    auto s = market1(0.10, 0.04);
    add_atom(s, vec({0.2}), vec({0.0}), 2.0);  // |u| <= 1: compensated
    add_atom(s, vec({3.0}), vec({0.0}), 0.5);  // |u| > 1: not compensated
    const Vec be = effective_drift_R(s, 0.0, s.y0);
    CHECK(be[0] == doctest::Approx(0.10 - 2.0 * 0.2).epsilon(1e-14));

    auto sy = market1(0.0, 0.0, 0.0, 0.0, 1.0);
    add_atom(sy, vec({0.0}), vec({-0.5}), 4.0);
    const Vec bye = effective_drift_Y(sy, 0.0, sy.y0);
    CHECK(bye[0] == doctest::Approx(1.0 + 4.0 * 0.5).epsilon(1e-14));
}

TEST_CASE("joint covariance assembles symmetric blocks") {
    auto s = bs_factor();
    const Mat j = joint_covariance(s, 0.0, s.y0);
    REQUIRE(j.rows() == 2);
    CHECK(j(0, 0) == doctest::Approx(0.04));
    CHECK(j(0, 1) == doctest::Approx(0.06));
    CHECK(j(1, 0) == doctest::Approx(0.06));
    CHECK(j(1, 1) == doctest::Approx(0.09));
    CHECK((j - j.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance factor reproduces the matrix and rejects indefinite input") {
    const Mat S = mat({{0.04, 0.06}, {0.06, 0.09}});
    const Mat A = covariance_factor(S, "test");
    CHECK(((A * A.transpose()) - S).cwiseAbs().maxCoeff() < 1e-12);

    const Mat bad = mat({{1.0, 0.0}, {0.0, -0.5}});
    CHECK_THROWS_AS(covariance_factor(bad, "test"), std::invalid_argument);
}

TEST_CASE("spec validation flags bad fields by name") {
    auto s = market1(0.05, -0.04);
    const std::vector<std::pair<double, Vec>> probes = {{0.0, s.y0}};
    CHECK_THROWS_AS(validate_spec(s, 0.5, probes), std::invalid_argument);
    CHECK(message_mentions(thrown_message([&] { validate_spec(s, 0.5, probes); }), "cov_R"));

    auto s2 = market1(0.05, 0.04);
    add_atom(s2, vec({0.0}), vec({0.0}), 1.0); // atom at the origin
    CHECK_THROWS_AS(validate_spec(s2, 0.5, probes), std::invalid_argument);

    auto s3 = market1(0.05, 0.04);
    add_atom(s3, vec({0.5}), vec({0.0}), -1.0); // negative rate
    CHECK_THROWS_AS(validate_spec(s3, 0.5, probes), std::invalid_argument);
}

TEST_CASE("tail moment sum over big jumps") {
    auto s = market1(0.05, 0.04);
    add_atom(s, vec({3.0}), vec({0.0}), 1.0);
    add_atom(s, vec({0.5}), vec({0.0}), 2.0);
    const auto rep = validate_spec(s, 0.5, {{0.0, s.y0}});
    CHECK(rep.af_value == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    REQUIRE(rep.tail_atoms.size() == 1);
    CHECK(rep.tail_atoms[0] == 0);
    CHECK(rep.total_rate == doctest::Approx(3.0));
}

TEST_CASE("marginal measures drop origin projections and merge equal marks") {
    JumpMeasure m;
    JumpAtom a1;
    a1.u = vec({1.0});
    a1.v = vec({0.0});
    a1.rate = 1.0;
    JumpAtom a2;
    a2.u = vec({1.0});
    a2.v = vec({2.0});
    a2.rate = 0.5;
    m.atoms = {a1, a2};

    const auto mr = marginal_jump_measure(m, Marginal::R);
    REQUIRE(mr.atoms.size() == 1);
    CHECK(mr.atoms[0].rate == doctest::Approx(1.5));

    const auto my = marginal_jump_measure(m, Marginal::Y);
    REQUIRE(my.atoms.size() == 1);
    CHECK(my.atoms[0].rate == doctest::Approx(0.5));
}

TEST_CASE("zero market paths stay at the origin") {
    auto s = market1(0.0, 0.0);
    SimParams sp;
    sp.T = 1.0;
    sp.dt = 0.1;
    sp.n_paths = 3;
    sp.seed = 7;
    const auto b = simulate_paths(s, sp);
    for (int path = 0; path < b.n_paths; ++path) {
        CHECK(b.y_at(path, b.steps).cwiseAbs().maxCoeff() == 0.0);
        for (int k = 0; k < b.steps; ++k) CHECK(b.dRc_at(path, k)[0] == 0.0);
        CHECK(b.jumps[path].empty());
    }
}

TEST_CASE("pure drift factor integrates exactly") {
    auto s = market1(0.0, 0.0, 0.0, 0.0, 0.7);
    SimParams sp;
    sp.T = 2.0;
    sp.dt = 0.25;
    sp.n_paths = 2;
    sp.seed = 3;
    const auto b = simulate_paths(s, sp);
    CHECK(b.y_at(0, b.steps)[0] == doctest::Approx(1.4).epsilon(1e-12));
}

TEST_CASE("gaussian moments of the simulated factor") {
    auto s = market1(0.0, 0.0, 0.0, 0.09);
    SimParams sp;
    sp.T = 1.0;
    sp.dt = 0.05;
    sp.n_paths = 4000;
    sp.seed = 11;
    const auto b = simulate_paths(s, sp);
    double mean = 0.0, m2 = 0.0;
    for (int path = 0; path < b.n_paths; ++path) mean += b.y_at(path, b.steps)[0];
    mean /= b.n_paths;
    for (int path = 0; path < b.n_paths; ++path) {
        const double d = b.y_at(path, b.steps)[0] - mean;
        m2 += d * d;
    }
    m2 /= b.n_paths - 1;
    CHECK(std::abs(mean) < 3.0 * 0.3 / std::sqrt(4000.0));
    CHECK(m2 == doctest::Approx(0.09).epsilon(0.10));
}

TEST_CASE("jump counts match the Poisson clock rate") {
    auto s = market1(0.0, 0.0);
    add_atom(s, vec({0.1}), vec({0.0}), 30.0);
    add_atom(s, vec({-0.1}), vec({0.0}), 20.0);
    SimParams sp;
    sp.T = 1.0;
    sp.dt = 0.01;
    sp.n_paths = 400;
    sp.seed = 5;
    const auto b = simulate_paths(s, sp);
    double total = 0.0, atom0 = 0.0;
    for (const auto& js : b.jumps) {
        total += static_cast<double>(js.size());
        for (const auto& j : js) atom0 += j.atom == 0 ? 1.0 : 0.0;
    }
    const double per_path = total / 400.0;
    CHECK(per_path == doctest::Approx(50.0).epsilon(0.05));
    CHECK(atom0 / total == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("factor jumps land in the node values") {
    auto s = market1(0.0, 0.0);
    add_atom(s, vec({0.0}), vec({1.0}), 5.0);
    SimParams sp;
    sp.T = 1.0;
    sp.dt = 0.125;
    sp.n_paths = 8;
    sp.seed = 2;
    const auto b = simulate_paths(s, sp);
    // drift_Y is the truncated-drift characteristic: the small mark v=1 is
    // compensated at -rate*v between jumps, so y_T = N_jumps - 5*T exactly.
    for (int path = 0; path < b.n_paths; ++path) {
        const double jumps = static_cast<double>(b.jumps[path].size());
        CHECK(b.y_at(path, b.steps)[0] == doctest::Approx(jumps - 5.0).epsilon(1e-12));
    }
}

TEST_CASE("large factor marks are not compensated") {
    auto s = market1(0.0, 0.0);
    add_atom(s, vec({0.0}), vec({2.0}), 5.0); // |v| = 2 > truncation radius
    SimParams sp;
    sp.T = 1.0;
    sp.dt = 0.125;
    sp.n_paths = 8;
    sp.seed = 2;
    const auto b = simulate_paths(s, sp);
    for (int path = 0; path < b.n_paths; ++path) {
        const double jumps = static_cast<double>(b.jumps[path].size());
        CHECK(b.y_at(path, b.steps)[0] == doctest::Approx(2.0 * jumps).epsilon(1e-12));
    }
}

TEST_CASE("identical seeds reproduce bundles bit for bit") {
    auto s = bs_factor();
    add_atom(s, vec({0.2}), vec({0.1}), 3.0);
    SimParams sp;
    sp.T = 1.0;
    sp.dt = 0.02;
    sp.n_paths = 16;
    sp.seed = 99;
    const auto b1 = simulate_paths(s, sp);
    const auto b2 = simulate_paths(s, sp);
    CHECK(b1.y == b2.y);
    CHECK(b1.dRc == b2.dRc);
    CHECK(b1.dYc == b2.dYc);

    sp.seed = 100;
    const auto b3 = simulate_paths(s, sp);
    CHECK(b1.y != b3.y);
}

TEST_CASE("thread count does not change the sample") {
    auto s = bs_factor();
    add_atom(s, vec({0.2}), vec({0.1}), 3.0);
    SimParams sp;
    sp.T = 0.5;
    sp.dt = 0.025;
    sp.n_paths = 64;
    sp.seed = 42;

    setenv("FIPP_THREADS", "1", 1);
    const auto serial = simulate_paths(s, sp);
    unsetenv("FIPP_THREADS");
    const auto parallel = simulate_paths(s, sp);

    CHECK(serial.y == parallel.y);
    CHECK(serial.dRc == parallel.dRc);
    CHECK(serial.dYc == parallel.dYc);
}

TEST_CASE("refined Gaussian grid aggregates to the coarse one") {
    auto s = bs_factor();
    add_atom(s, vec({0.2}), vec({0.1}), 4.0);
    SimParams coarse;
    coarse.T = 1.0;
    coarse.dt = 0.1;
    coarse.n_paths = 6;
    coarse.seed = 17;
    coarse.refine = 2;
    SimParams fine = coarse;
    fine.dt = 0.05;
    fine.refine = 1;

    const auto bc = simulate_paths(s, coarse);
    const auto bf = simulate_paths(s, fine);

    // constant covariance: each coarse continuous increment is exactly the sum
    // of its two fine halves, and the jump clock is grid-independent
    for (int path = 0; path < bc.n_paths; ++path) {
        for (int k = 0; k < bc.steps; ++k) {
            const double sum = bf.dYc_at(path, 2 * k)[0] + bf.dYc_at(path, 2 * k + 1)[0];
            CHECK(bc.dYc_at(path, k)[0] == doctest::Approx(sum).epsilon(1e-12));
        }
        CHECK(bc.jumps[path].size() == bf.jumps[path].size());
        for (std::size_t i = 0; i < bc.jumps[path].size(); ++i)
            CHECK(bc.jumps[path][i].atom == bf.jumps[path][i].atom);
    }
}

TEST_CASE("streaming simulator reports pre and post jump states") {
    auto s = market1(0.0, 0.0);
    add_atom(s, vec({0.0}), vec({0.5}), 8.0);
    const PathSimulator sim(s, 1.0, 0.1, 1, 23);
    sim.run(0, false, [&](const PathSimulator::Step& st) {
        const double dv = st.y_post[0] - st.y_pre[0];
        CHECK(dv == doctest::Approx(0.5 * static_cast<double>(st.atoms->size()))
                        .epsilon(1e-12));
    });
}

TEST_CASE("simulator rejects state-dependent jump rates and a misaligned grid") {
    auto s = market1(0.0, 0.0);
    JumpAtom a;
    a.u = vec({0.1});
    a.v = vec({0.0});
    a.rate = 1.0;
    a.rate_fn = [](double, const Vec&) { return 1.0; };
    s.jumps.atoms.push_back(a);
    CHECK_THROWS_AS(PathSimulator(s, 1.0, 0.1, 1, 0), std::invalid_argument);

    auto s2 = market1(0.0, 0.0);
    CHECK_THROWS_AS(PathSimulator(s2, 1.0, 0.3, 1, 0), std::invalid_argument);
}
