#pragma once

#include "fipp/mc_validator.hpp"

#include <json.hpp>

namespace fipp {

// everything one experiment file describes: market, constraint, preference
// parameters, tilt, and simulation defaults
struct Experiment {
    FactorMarketSpec market;
    ConstraintSet constraint;
    PowerParams power;
    TiltParams tilt;
    MartingaleParams sim;
    std::string config_hash; // fnv1a-64 of the file bytes, hex
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

// Throws std::invalid_argument with a path-to-field message
// (e.g. "market.cov_R.value: row 0 has 2 entries, expected 1") on any
// schema violation.
Experiment parse_experiment(const nlohmann::json& j);
Experiment load_experiment(const std::string& path);

SimParams to_sim_params(const Experiment& e);

} // namespace fipp
