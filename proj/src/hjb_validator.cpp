#include "fipp/hjb_validator.hpp"
#include "fipp/parallel.hpp"

#include <cmath>

namespace fipp {

PiField field_from(const FippSolution& sol) {
    PiField f;
    f.affine = true;
    f.sigma = sol.sigma;
    const FippSolution s = sol;
    f.value = [s](double t, const Vec& y, double z) { return s.pi(t, y, z); };
    return f;
}

PiField generic_field(std::function<double(double, const Vec&, double)> value, double fd_h_rel) {
    PiField f;
    f.value = std::move(value);
    f.fd_h_rel = fd_h_rel;
    return f;
}

FieldDerivs field_derivs(const FactorMarketSpec& s, const PiField& F, double t, const Vec& y,
                         double z) {
    FieldDerivs d;
    d.value = F.value(t, y, z);
    d.jump_diff.resize(s.jumps.atoms.size());
    for (std::size_t a = 0; a < s.jumps.atoms.size(); ++a) {
        const Vec& v = s.jumps.atoms[a].v;
        d.jump_diff[a] = F.affine ? F.sigma.dot(v) : F.value(t, y + v, z) - d.value;
    }
    if (F.affine) {
        d.dt = 0.0;
        d.dz = 1.0;
        d.grad_y = F.sigma;
        d.hess_y = Mat::Zero(s.d, s.d);
        return d;
    }

    const double h = F.fd_h_rel;
    const double ht = h * (1.0 + std::abs(t));
    const double hz = h * (1.0 + std::abs(z));
    d.dt = (F.value(t + ht, y, z) - F.value(t - ht, y, z)) / (2.0 * ht);
    d.dz = (F.value(t, y, z + hz) - F.value(t, y, z - hz)) / (2.0 * hz);

    d.grad_y.resize(s.d);
    d.hess_y.resize(s.d, s.d);
    Vec hy(s.d);
    for (int i = 0; i < s.d; ++i) hy[i] = h * (1.0 + std::abs(y[i]));

    for (int i = 0; i < s.d; ++i) {
        Vec yp = y, ym = y;
        yp[i] += hy[i];
        ym[i] -= hy[i];
        const double fp = F.value(t, yp, z);
        const double fm = F.value(t, ym, z);
        d.grad_y[i] = (fp - fm) / (2.0 * hy[i]);
        d.hess_y(i, i) = (fp - 2.0 * d.value + fm) / (hy[i] * hy[i]);
    }
    for (int i = 0; i < s.d; ++i) {
        for (int j = i + 1; j < s.d; ++j) {
            Vec ypp = y, ypm = y, ymp = y, ymm = y;
            ypp[i] += hy[i];
            ypp[j] += hy[j];
            ypm[i] += hy[i];
            ypm[j] -= hy[j];
            ymp[i] -= hy[i];
            ymp[j] += hy[j];
            ymm[i] -= hy[i];
            ymm[j] -= hy[j];
            const double cross = (F.value(t, ypp, z) - F.value(t, ypm, z) -
                                  F.value(t, ymp, z) + F.value(t, ymm, z)) /
                                 (4.0 * hy[i] * hy[j]);
            d.hess_y(i, j) = cross;
            d.hess_y(j, i) = cross;
        }
    }
    return d;
}

double operator_AY(const FactorMarketSpec& s, double t, const Vec& y, const FieldDerivs& d) {
    double acc = d.grad_y.dot(s.drift_Y(t, y));
    acc += 0.5 * (d.hess_y * s.cov_Y(t, y)).trace();
    for (std::size_t a = 0; a < s.jumps.atoms.size(); ++a) {
        const auto& atom = s.jumps.atoms[a];
        if (atom.v.size() == 0 || atom.v.lpNorm<Eigen::Infinity>() == 0.0) continue;
        double term = d.jump_diff[a];
        if (atom.v.norm() <= s.truncation_radius) term -= d.grad_y.dot(atom.v);
        acc += atom.rate_at(t, y) * term;
    }
    return acc;
}

double operator_AY(const FactorMarketSpec& s, const PiField& F, double t, const Vec& y,
                   double z) {
    return operator_AY(s, t, y, field_derivs(s, F, t, y, z));
}

std::vector<GridPoint> default_grid(const FactorMarketSpec& s) {
    const double half = 3.0 * std::sqrt(std::max(0.0, s.cov_Y(0.0, s.y0).trace()));
    std::vector<GridPoint> grid;
    const int ny = 21;
    for (double t : {0.0, 0.5, 1.0}) {
        for (int axis = 0; axis < s.d; ++axis) {
            for (int i = 0; i < ny; ++i) {
                const double off =
                    half * (2.0 * static_cast<double>(i) / (ny - 1) - 1.0);
                Vec y = s.y0;
                y[axis] += off;
                for (double z : {-1.0, 0.0, 1.0}) grid.push_back({t, y, z});
            }
        }
    }
    return grid;
}

ResidualField hjb_residual(const FactorMarketSpec& s, const PowerParams& pp, const PiField& F,
                           const DriftFieldFn& g, const ConstraintSet& C,
                           const std::vector<GridPoint>& grid) {
    ResidualField out;
    out.points = grid;
    out.residual.assign(grid.size(), 0.0);
    out.gamma_residual.assign(grid.size(), 0.0);

    par::parallel_for(grid.size(), [&](std::size_t idx) {
        const GridPoint& gp = grid[idx];
        const FieldDerivs d = field_derivs(s, F, gp.t, gp.y, gp.z);

        // jump tilt read off the field; atoms are matched by their mark
        const auto W = [&](const Vec& v) -> double {
            for (std::size_t a = 0; a < s.jumps.atoms.size(); ++a) {
                const Vec& va = s.jumps.atoms[a].v;
                if (va.size() == v.size() && (va - v).lpNorm<Eigen::Infinity>() == 0.0)
                    return d.jump_diff[a];
            }
            return F.affine ? F.sigma.dot(v) : F.value(gp.t, gp.y + v, gp.z) - d.value;
        };

        TiltedObjective obj = make_objective(s, pp, gp.t, gp.y, d.grad_y, W);
        OptimizeResult opt = maximize_objective(obj, C);
        if (opt.status == OptimizeResult::Status::NotAttained)
            throw std::runtime_error("objective supremum not attained at a grid point; "
                                     "residual undefined there");
        const double sup = opt.value;

        const Mat cY = s.cov_Y(gp.t, gp.y);
        double comp = 0.0; // sum rate (W + 1 - e^W) over factor atoms
        for (std::size_t a = 0; a < s.jumps.atoms.size(); ++a) {
            const auto& atom = s.jumps.atoms[a];
            if (atom.v.size() == 0 || atom.v.lpNorm<Eigen::Infinity>() == 0.0) continue;
            const double w = d.jump_diff[a];
            comp += atom.rate_at(gp.t, gp.y) * (w + 1.0 - std::exp(w));
        }
        const double f_val = 0.5 * d.grad_y.dot(cY * d.grad_y) + pp.p * sup - comp;
        const double a_y = operator_AY(s, gp.t, gp.y, d);
        const double gval = g(gp.t, gp.y);
        out.residual[idx] = d.dt + gval * d.dz + a_y + f_val;

        // exponential form from the same bundle, exact chain rule
        const double G = std::exp(d.value);
        const double Gt = G * d.dt;
        const double Gz = G * d.dz;
        const Vec Ggrad = G * d.grad_y;
        const Mat Ghess = G * (d.hess_y + d.grad_y * d.grad_y.transpose());
        double a_g = Ggrad.dot(s.drift_Y(gp.t, gp.y));
        a_g += 0.5 * (Ghess * cY).trace();
        for (std::size_t a = 0; a < s.jumps.atoms.size(); ++a) {
            const auto& atom = s.jumps.atoms[a];
            if (atom.v.size() == 0 || atom.v.lpNorm<Eigen::Infinity>() == 0.0) continue;
            double term = G * (std::exp(d.jump_diff[a]) - 1.0);
            if (atom.v.norm() <= s.truncation_radius) term -= Ggrad.dot(atom.v);
            a_g += atom.rate_at(gp.t, gp.y) * term;
        }
        const double res_gamma = Gt + gval * Gz + a_g + pp.p * G * sup;
        out.gamma_residual[idx] = std::exp(-d.value) * res_gamma;
    });

    double ss = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.max_abs = std::max(out.max_abs, std::abs(out.residual[i]));
        ss += out.residual[i] * out.residual[i];
        out.max_identity_gap =
            std::max(out.max_identity_gap, std::abs(out.residual[i] - out.gamma_residual[i]));
    }
    out.rms = grid.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(grid.size()));
    return out;
}

} // namespace fipp
