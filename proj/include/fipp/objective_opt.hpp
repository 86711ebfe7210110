#pragma once

#include <optional>

#include "fipp/constraint_geometry.hpp"
#include "fipp/market_model.hpp"

namespace fipp {

// power-utility exponent p in (-inf,0) or (0,1) and initial log-level D0
struct PowerParams {
    double p = 0.5;
    double D0 = 0.0;
};

// factor tilt sigma (dim d): drift correction c^{RY} sigma and jump factor
// e^{sigma'v} per atom
struct TiltParams {
    Vec sigma;
};

// The concave local objective frozen at one evaluation point, with a general
// (Z, W) tilt: drift b^R + c^{RY}Z and per-atom multiplier wfac = e^{W(v)}.
struct TiltedObjective {
    double p = 0.5;
    Vec b_eff;
    Mat cR;
    struct Atom {
        Vec u;
        double rate;
        double wfac;
        bool small_u; // |u| <= truncation radius
    };
    std::vector<Atom> atoms;
    double truncation_radius = 1.0;
    double lipschitz_hint = 0.0; // curvature scale used for the initial step
};

using JumpTiltFn = std::function<double(const Vec&)>; // W(v)

TiltedObjective make_objective(const FactorMarketSpec& s, const PowerParams& pp,
                               double t, const Vec& y, const Vec& Z, const JumpTiltFn& W);
TiltedObjective make_objective(const FactorMarketSpec& s, const PowerParams& pp,
                               const TiltParams& tilt, double t, const Vec& y);

LocalCharacteristics local_characteristics(const TiltedObjective& obj);
LocalCharacteristics make_local_characteristics(const FactorMarketSpec& s, const PowerParams& pp,
                                                const TiltParams& tilt, double t, const Vec& y);

// objective value assuming budget feasibility; -infinity can occur on the
// budget boundary when p < 0
double objective_value(const TiltedObjective& obj, const Vec& pi);
// analytic gradient; throws std::domain_error on the budget boundary
Vec objective_gradient(const TiltedObjective& obj, const Vec& pi);

// nullopt signals NotInBudget (distinct from -infinity)
std::optional<double> phi_value(const FactorMarketSpec& s, const PowerParams& pp,
                                const TiltParams& tilt, double t, const Vec& y, const Vec& pi);
Vec phi_gradient(const FactorMarketSpec& s, const PowerParams& pp, const TiltParams& tilt,
                 double t, const Vec& y, const Vec& pi);

// compensated small-jump and tail integrals (I1, I2); their sum is the jump
// part of the objective
std::pair<double, double> jump_integrals(const FactorMarketSpec& s, const PowerParams& pp,
                                         const TiltParams& tilt, double t, const Vec& y,
                                         const Vec& pi);

struct OptimizeResult {
    enum class Status { Ok, NotAttained, IterationLimit };
    Status status = Status::Ok;
    Vec pi_star;
    double value = 0.0;
    double gap = 0.0; // fixed-point residual |pi - P(pi + step*grad)|
    int iterations = 0;
    std::optional<Vec> witness; // set when status == NotAttained
};

// Projected-gradient ascent with Armijo backtracking over C intersected with
// the budget set (step shrinking toward the previous iterate when an atom
// constraint would be crossed; domain shrinkage 1e-9 when p < 0). Unbounded C
// goes through attainment_check first.
OptimizeResult maximize_objective(const TiltedObjective& obj, const ConstraintSet& C);
OptimizeResult maximize_phi(const FactorMarketSpec& s, const PowerParams& pp,
                            const TiltParams& tilt, double t, const Vec& y,
                            const ConstraintSet& C);

} // namespace fipp
