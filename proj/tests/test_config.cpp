#include <cstdint>

#include "doctest.h"
#include "fipp/config.hpp"
#include "test_helpers.hpp"

using namespace fipp;
using namespace fipp::testing;
using nlohmann::json;

namespace {

json minimal_market() {
    return json::parse(R"({
      "market": {
        "n": 1, "d": 1, "y0": [0.0],
        "drift_R": {"family": "constant", "value": [0.05]},
        "drift_Y": {"family": "constant", "value": [0.0]},
        "cov_R":  {"family": "constant_cov", "value": [[0.04]]},
        "cov_RY": {"family": "constant_cov", "value": [[0.0]]},
        "cov_Y":  {"family": "constant_cov", "value": [[0.0]]}
      },
      "constraint": {"type": "box", "lo": [-10.0], "hi": [10.0]},
      "power": {"p": 0.5}
    })");
}

} // namespace

TEST_CASE("experiment parses with defaults filled in") {
    const auto e = parse_experiment(minimal_market());
    CHECK(e.market.n == 1);
    CHECK(e.market.d == 1);
    CHECK(e.market.constant_coefficients);
    CHECK(e.market.drift_R(0.0, e.market.y0)[0] == 0.05);
    CHECK(e.market.cov_R(0.0, e.market.y0)(0, 0) == 0.04);
    CHECK(e.power.p == 0.5);
    CHECK(e.power.D0 == 0.0);
    CHECK(e.tilt.sigma.size() == 1);
    CHECK(e.tilt.sigma[0] == 0.0);
    CHECK(e.sim.n_paths == 100000);
    CHECK(e.sim.dt == 0.01);
    CHECK(e.sim.T == 1.0);
    CHECK(e.sim.antithetic);
    CHECK(e.constraint.kind == ConstraintKind::Box);
}

TEST_CASE("state-dependent drift family") {
    auto j = minimal_market();
    j["market"]["drift_Y"] = {{"family", "affine_drift"},
                              {"base", {0.1}},
                              {"slope", {{-0.5}}}};
    const auto e = parse_experiment(j);
    CHECK(!e.market.constant_coefficients);
    const Vec y = Vec::Constant(1, 2.0);
    CHECK(e.market.drift_Y(0.0, y)[0] == 0.1 - 0.5 * 2.0);
    CHECK(e.market.drift_R(0.0, y)[0] == 0.05); // the constant part is untouched
}

TEST_CASE("schema violations name the offending field") {
    SUBCASE("missing covariance block") {
        auto j = minimal_market();
        j["market"].erase("cov_R");
        const auto msg = thrown_message([&] { parse_experiment(j); });
        CHECK(message_mentions(msg, "market.cov_R"));
    }

    SUBCASE("negative jump rate") {
        auto j = minimal_market();
        j["market"]["jumps"] = {{{"u", {0.5}}, {"v", {0.0}}, {"rate", -1.0}}};
        const auto msg = thrown_message([&] { parse_experiment(j); });
        CHECK(message_mentions(msg, "market.jumps[0].rate"));
    }

    SUBCASE("exponent outside the power range") {
        auto j = minimal_market();
        j["power"]["p"] = 1.5;
        const auto msg = thrown_message([&] { parse_experiment(j); });
        CHECK(message_mentions(msg, "power.p"));
    }

    SUBCASE("unknown coefficient family") {
        auto j = minimal_market();
        j["market"]["cov_R"]["family"] = "stochastic_vol";
        const auto msg = thrown_message([&] { parse_experiment(j); });
        CHECK(message_mentions(msg, "market.cov_R.family"));
        CHECK(message_mentions(msg, "stochastic_vol"));
    }

    SUBCASE("constraint that excludes the origin") {
        auto j = minimal_market();
        j["constraint"] = {{"type", "box"}, {"lo", {0.5}}, {"hi", {1.0}}};
        const auto msg = thrown_message([&] { parse_experiment(j); });
        CHECK(message_mentions(msg, "constraint"));
    }

    SUBCASE("dimension mismatch in a matrix block") {
        auto j = minimal_market();
        j["market"]["cov_R"]["value"] = {{0.04, 0.0}};
        const auto msg = thrown_message([&] { parse_experiment(j); });
        CHECK(message_mentions(msg, "market.cov_R.value"));
    }
}

TEST_CASE("content hash primitives") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hash_hex(0) == "0000000000000000");
    CHECK(hash_hex(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hash_hex(fnv1a64("")).size() == 16);
}

TEST_CASE("simulation block converts to path-generation parameters") {
    auto j = minimal_market();
    j["sim"] = {{"T", 2.0}, {"dt", 0.05}, {"n_paths", 500}, {"seed", 42}, {"refine", 2}};
    const auto e = parse_experiment(j);
    const auto sp = to_sim_params(e);
    CHECK(sp.T == 2.0);
    CHECK(sp.dt == 0.05);
    CHECK(sp.n_paths == 500);
    CHECK(sp.seed == 42);
    CHECK(sp.refine == 2);
}

#ifdef FIPP_CONFIG_DIR
TEST_CASE("bundled experiment files load and validate") {
    const std::string dir = FIPP_CONFIG_DIR;
    for (const char* name : {"merton.cfg", "bs_tilt.cfg", "jump_single_atom.cfg",
                             "time_monotone.cfg", "unbounded_cone.cfg",
                             "bs_affine_drift.cfg"}) {
        CAPTURE(name);
        const auto e = load_experiment(dir + "/" + name);
        CHECK(e.config_hash.size() == 16);
        CHECK_NOTHROW(validate_spec(e.market, e.power.p, {{0.0, e.market.y0}}));
    }
}

TEST_CASE("a bad covariance file parses but fails market validation") {
    const std::string dir = FIPP_CONFIG_DIR;
    const auto e = load_experiment(dir + "/bad_cov.cfg");
    const auto msg = thrown_message(
        [&] { validate_spec(e.market, e.power.p, {{0.0, e.market.y0}}); });
    CHECK(message_mentions(msg, "cov_R"));
}
#endif
