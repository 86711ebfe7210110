#pragma once

#include "fipp/fipp_engine.hpp"

namespace fipp {

// Candidate log-level field Pi(t, y, z). Affine fields (Pi = a + sigma'y + z)
// carry exact derivatives; anything else is differentiated by central
// differences with step h = h_rel * (1 + |coordinate|).
struct PiField {
    std::function<double(double, const Vec&, double)> value;
    bool affine = false;
    Vec sigma; // gradient in y when affine
    double fd_h_rel = 1e-4;
};

PiField field_from(const FippSolution& sol);
PiField generic_field(std::function<double(double, const Vec&, double)> value,
                      double fd_h_rel = 1e-4);

struct FieldDerivs {
    double value = 0.0;
    double dt = 0.0;
    double dz = 0.0;
    Vec grad_y;
    Mat hess_y;
    std::vector<double> jump_diff; // F(t, y+v_a, z) - F(t, y, z), per atom
};

FieldDerivs field_derivs(const FactorMarketSpec& s, const PiField& F, double t, const Vec& y,
                         double z);

// A^Y F = D_yF'b^Y + tr(D^2F c^Y)/2 + sum_a rate_a (F(y+v_a) - F(y) - D_yF'v_a 1{|v_a|<=r})
double operator_AY(const FactorMarketSpec& s, const PiField& F, double t, const Vec& y,
                   double z);
double operator_AY(const FactorMarketSpec& s, double t, const Vec& y, const FieldDerivs& d);

struct GridPoint {
    double t = 0.0;
    Vec y;
    double z = 0.0;
};

// t in {0, 1/2, 1}; y swept coordinate-wise around y0 with half-width
// 3 sqrt(tr c^Y), 21 points per axis; z in {-1, 0, 1}
std::vector<GridPoint> default_grid(const FactorMarketSpec& s);

using DriftFieldFn = std::function<double(double, const Vec&)>;

struct ResidualField {
    std::vector<GridPoint> points;
    std::vector<double> residual;       // log-level form
    std::vector<double> gamma_residual; // e^{-Pi} * exponential-form residual
    double max_abs = 0.0;
    double rms = 0.0;
    double max_identity_gap = 0.0; // max |residual - gamma_residual|
};

// Forward-equation residual of the pair (Pi, g) at each grid point:
//   r = dPi/dt + g dPi/dz + A^Y Pi + f(t, y, D_yPi, Pi(y+.) - Pi(y))
// and the same residual routed through Gamma = e^Pi; both use one shared
// derivative bundle. This verifies candidates, it never solves the equation.
ResidualField hjb_residual(const FactorMarketSpec& s, const PowerParams& pp, const PiField& F,
                           const DriftFieldFn& g, const ConstraintSet& C,
                           const std::vector<GridPoint>& grid);

} // namespace fipp
