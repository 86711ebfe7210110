#pragma once

#include "fipp/objective_opt.hpp"

namespace fipp {

// Explicit power forward performance solution: log-level
//   Pi(t,y,z) = D0 + sigma'(y - y0) + z,
// auxiliary drift g(t,y) = Psi^sigma(t,y), and the pointwise optimal strategy.
// U_t(x) = (x^p/p) exp(Pi(t, Y_t, Z_t)) with dZ = g dt along the factor path.
struct FippSolution {
    PowerParams params;
    Vec sigma;
    Vec y0;

    std::function<double(double, const Vec&)> g;
    std::function<Vec(double, const Vec&)> strategy;

    double pi(double t, const Vec& y, double z) const {
        (void)t;
        return params.D0 + sigma.dot(y - y0) + z;
    }
    // Pi(t, y+v, z) - Pi(t, y, z), exact by the affine structure
    double jump_diff(const Vec& v) const { return sigma.dot(v); }
    Vec grad_y() const { return sigma; }
};

// drift functional of the tilted solution:
//   Psi = -p sup Phi - sigma'c^Y sigma / 2 - sigma'b^Y - sum rate (e^{sigma'v} - 1 - sigma'v)
double psi_sigma(const FactorMarketSpec& s, const PowerParams& pp, const Vec& sigma,
                 double t, const Vec& y, const ConstraintSet& C);

// BSDE driver at a general (Z, W):
//   f = Z'c^Y Z / 2 + p sup Phi^{Z,W} - sum rate (W(v) + 1 - e^{W(v)})
double driver_f(const FactorMarketSpec& s, const PowerParams& pp, double t, const Vec& y,
                const Vec& Z, const JumpTiltFn& W, const ConstraintSet& C);

// time-monotone mode: requires a finite-variation factor (zero c^Y, no factor
// jumps); f(y) = p sup of the untilted objective, sign(p) f >= 0
double time_monotone_f(const FactorMarketSpec& s, const PowerParams& pp, const Vec& y,
                       const ConstraintSet& C);

// solution of dG/dt = |dG/dx|^2 / (2 d2G/dx2) with power datum:
// G(x,tau) = (x^p/p) exp(p tau / (2(p-1)))
double g_function(double x, double tau, double p);
// finite-difference residual of the PDE at (x, tau)
double g_function_pde_residual(double x, double tau, double p, double h = 1e-5);

struct TimeMonotoneResult {
    std::vector<std::vector<double>> pi0; // per path, per node: log-level Pi^0
    // U[path][node][j] = U_{t_node}(x_grid[j])
    std::vector<std::vector<std::vector<double>>> U;
    Vec x_grid;
};

TimeMonotoneResult construct_time_monotone(const FactorMarketSpec& s, const PowerParams& pp,
                                           const ConstraintSet& C, const PathBundle& b,
                                           const Vec& wealth_grid);

struct TiltedFippResult {
    FippSolution solution;
    std::vector<std::vector<double>> pi_paths; // log-level at nodes, per path
};

// Builds the explicit solution and integrates its log-level along each bundle
// path (trapezoid in time, left-limit factor states).
TiltedFippResult construct_tilted_fipp(const FactorMarketSpec& s, const PowerParams& pp,
                                       const TiltParams& tilt, const ConstraintSet& C,
                                       const PathBundle& b);

FippSolution make_tilted_solution(const FactorMarketSpec& s, const PowerParams& pp,
                                  const TiltParams& tilt, const ConstraintSet& C);

// additive finite-variation part: V_k = V0 - p * trapezoid of the phi samples
std::vector<double> finite_variation_drift(const PowerParams& pp,
                                           const std::vector<double>& phi_samples, double dt,
                                           double V0 = 0.0);

// Diffusion-subcase optimal strategy via the projection formula: the image
// sigma^R' pi* is the projection of (lambda + sigma_tilde)/(1-p) onto
// sigma^R' C. Requires a jump-free market whose diffusion is spanned by the
// factor Brownian motions. Independent route from maximize_phi.
Vec optimal_strategy_projection(const FactorMarketSpec& s, const PowerParams& pp,
                                const Vec& sigma_tilde, double t, const Vec& y,
                                const ConstraintSet& C);

struct ResidualStats {
    double rms = 0.0;
    double max_abs = 0.0;
    std::vector<double> per_path_rms;
};

// Pathwise BSDE residual of a log-level path against the driver:
//   r_k = dPi_k + f dt - sigma'dY^c_k - sum_jumps sigma'v + dt sum_atoms rate sigma'v
ResidualStats bsde_residual(const FactorMarketSpec& s, const PowerParams& pp,
                            const TiltParams& tilt, const ConstraintSet& C,
                            const PathBundle& b,
                            const std::vector<std::vector<double>>& pi_paths);

} // namespace fipp
