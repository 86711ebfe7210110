#pragma once

#include "fipp/fipp_engine.hpp"

namespace fipp {

struct AdmissibilityViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using StrategyFn = std::function<Vec(double, const Vec&)>;

// Discrete stochastic-exponential wealth along materialized paths:
//   X_{k+1} = X_k exp(pi'(b_eff dt + dR^c) - pi'c^R pi dt / 2) * prod (1 + pi'u)
// X absorbs at zero when 1 + pi'u = 0; 1 + pi'u < 0 throws AdmissibilityViolation.
std::vector<std::vector<double>> wealth_path(const FactorMarketSpec& s, const PathBundle& b,
                                             const StrategyFn& strategy, double x0);

enum class Verdict { MartingaleConsistent, SupermartingaleConsistent, Violation };

const char* verdict_name(Verdict v);

struct MartingaleParams {
    double x0 = 1.0;
    double T = 1.0;
    double dt = 0.01;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    bool antithetic = true;
    int refine = 1;
    double z_threshold = 3.0;
};

struct MartingaleReport {
    double u0 = 0.0;   // U_0(x0)
    double mean = 0.0; // sample mean of U_T(X_T)
    double se = 0.0;
    double z = 0.0;
    double excess_kurtosis = 0.0;
    std::size_t n_samples = 0;
    std::size_t absorbed = 0;
    bool antithetic = false;
    Verdict verdict = Verdict::Violation;
};

// Streams per-path samples S_i = (X_T^p / p) e^{Pi_T} without materializing
// bundles, pairing each path with its Gaussian mirror when antithetic is set,
// and tests mean(S) against U_0(x0). The strategy defaults to the solution's
// pointwise optimizer; pass an override to probe suboptimal controls.
MartingaleReport martingale_test(const FactorMarketSpec& s, const FippSolution& sol,
                                 const MartingaleParams& mp,
                                 const StrategyFn& strategy_override = {});

} // namespace fipp
