#pragma once

#include "fipp/config.hpp"
#include "fipp/hjb_validator.hpp"

namespace fipp::report {

nlohmann::json vec_json(const Vec& v);
nlohmann::json optimize_json(const OptimizeResult& r);
nlohmann::json attainment_json(const AttainmentResult& r);
nlohmann::json validation_json(const ValidationReport& r);
nlohmann::json martingale_json(const MartingaleReport& r);
nlohmann::json bsde_json(const ResidualStats& r);
nlohmann::json hjb_json(const ResidualField& r);

// wraps a result body with {"schema": 1, "kind", "config_hash", "seed"}
nlohmann::json artifact(const std::string& kind, const std::string& config_hash,
                        std::uint64_t seed, nlohmann::json body);

// deterministic renderings: identical input -> identical bytes
std::string render_json(const nlohmann::json& j);
std::string render_csv(const nlohmann::json& j); // flattened "key,value" rows

// columnar path export: t, path_id, Y_1..Y_d, dR_1..dR_n, jump_flag
std::string bundle_csv(const PathBundle& b);
// residual field export: t, y_1..y_d, z, residual
std::string residual_csv(const ResidualField& f);

} // namespace fipp::report
