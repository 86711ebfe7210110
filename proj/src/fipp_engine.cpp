#include "fipp/fipp_engine.hpp"
#include "fipp/parallel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fipp {

namespace {

double sup_phi_or_throw(const FactorMarketSpec& s, const PowerParams& pp, const Vec& Z,
                        const JumpTiltFn& W, double t, const Vec& y, const ConstraintSet& C) {
    TiltedObjective obj = make_objective(s, pp, t, y, Z, W);
    OptimizeResult r = maximize_objective(obj, C);
    if (r.status == OptimizeResult::Status::NotAttained) {
        std::string pt = "(t=" + std::to_string(t) + ", y=[";
        for (Eigen::Index i = 0; i < y.size(); ++i)
            pt += (i ? "," : "") + std::to_string(y[i]);
        pt += "])";
        throw std::runtime_error("objective supremum not attained over the constraint set "
                                 "at " + pt + "; drift functional undefined");
    }
    return r.value;
}

double compensator_gap(const FactorMarketSpec& s, double t, const Vec& y, const JumpTiltFn& W) {
    // sum over factor-jump atoms of rate * (W(v) + 1 - e^{W(v)})
    double acc = 0.0;
    for (const auto& a : s.jumps.atoms) {
        if (a.v.size() == 0 || a.v.lpNorm<Eigen::Infinity>() == 0.0) continue;
        const double w = W(a.v);
        acc += a.rate_at(t, y) * (w + 1.0 - std::exp(w));
    }
    return acc;
}

} // namespace

double driver_f(const FactorMarketSpec& s, const PowerParams& pp, double t, const Vec& y,
                const Vec& Z, const JumpTiltFn& W, const ConstraintSet& C) {
    const Mat cY = s.cov_Y(t, y);
    const double quad = 0.5 * Z.dot(cY * Z);
    const double sup = sup_phi_or_throw(s, pp, Z, W, t, y, C);
    return quad + pp.p * sup - compensator_gap(s, t, y, W);
}

double psi_sigma(const FactorMarketSpec& s, const PowerParams& pp, const Vec& sigma,
                 double t, const Vec& y, const ConstraintSet& C) {
    const Vec sig = sigma;
    const JumpTiltFn W = [&sig](const Vec& v) { return sig.dot(v); };
    const Mat cY = s.cov_Y(t, y);
    const double sup = sup_phi_or_throw(s, pp, sigma, W, t, y, C);

    double jump_term = 0.0;
    for (const auto& a : s.jumps.atoms) {
        if (a.v.size() == 0 || a.v.lpNorm<Eigen::Infinity>() == 0.0) continue;
        const double w = sigma.dot(a.v);
        jump_term += a.rate_at(t, y) * (std::exp(w) - 1.0 - w);
    }
    return -pp.p * sup - 0.5 * sigma.dot(cY * sigma) - sigma.dot(s.drift_Y(t, y)) - jump_term;
}

double time_monotone_f(const FactorMarketSpec& s, const PowerParams& pp, const Vec& y,
                       const ConstraintSet& C) {
    const Mat cY = s.cov_Y(0.0, y);
    if (cY.cwiseAbs().maxCoeff() > 1e-14)
        throw std::invalid_argument("time-monotone mode requires a finite-variation factor "
                                    "(cov_Y must vanish)");
    for (const auto& a : s.jumps.atoms)
        if (a.v.size() > 0 && a.v.lpNorm<Eigen::Infinity>() > 0.0)
            throw std::invalid_argument("time-monotone mode requires a finite-variation factor "
                                        "(no factor jump marks)");
    const Vec Z = Vec::Zero(s.d);
    const JumpTiltFn W = [](const Vec&) { return 0.0; };
    return pp.p * sup_phi_or_throw(s, pp, Z, W, 0.0, y, C);
}

double g_function(double x, double tau, double p) {
    return std::pow(x, p) / p * std::exp(p * tau / (2.0 * (p - 1.0)));
}

double g_function_pde_residual(double x, double tau, double p, double h) {
    const double ht = h;
    const double hx = h * (1.0 + std::abs(x));
    const double gt = (g_function(x, tau + ht, p) - g_function(x, tau - ht, p)) / (2.0 * ht);
    const double gp = g_function(x + hx, tau, p);
    const double gm = g_function(x - hx, tau, p);
    const double g0 = g_function(x, tau, p);
    const double gx = (gp - gm) / (2.0 * hx);
    const double gxx = (gp - 2.0 * g0 + gm) / (hx * hx);
    return gt - gx * gx / (2.0 * gxx);
}

namespace {

// y just before the jumps of step k, reconstructed from the node after them
Vec pre_jump_state(const PathBundle& b, std::size_t path, std::size_t k,
                   const FactorMarketSpec& s, std::size_t& jump_cursor) {
    Vec y = b.y_at(path, k + 1);
    const auto& js = b.jumps[path];
    std::size_t c = jump_cursor;
    bool jumped = false;
    while (c < js.size() && static_cast<std::size_t>(js[c].step) == k) {
        y -= s.jumps.atoms[js[c].atom].v;
        jumped = true;
        ++c;
    }
    jump_cursor = c;
    (void)jumped;
    return y;
}

bool step_has_jump(const PathBundle& b, std::size_t path, std::size_t k, std::size_t cursor) {
    const auto& js = b.jumps[path];
    return cursor < js.size() && static_cast<std::size_t>(js[cursor].step) == k;
}

} // namespace

TimeMonotoneResult construct_time_monotone(const FactorMarketSpec& s, const PowerParams& pp,
                                           const ConstraintSet& C, const PathBundle& b,
                                           const Vec& wealth_grid) {
    for (Eigen::Index j = 0; j < wealth_grid.size(); ++j)
        if (!(wealth_grid[j] > 0.0))
            throw std::invalid_argument("wealth grid must be strictly positive");

    TimeMonotoneResult out;
    out.x_grid = wealth_grid;
    const std::size_t n_paths = static_cast<std::size_t>(b.n_paths);
    out.pi0.assign(n_paths, {});
    out.U.assign(n_paths, {});

    const std::size_t steps = static_cast<std::size_t>(b.steps);
    const double dt = b.dt;
    const bool constant = s.constant_coefficients;
    const double f_const = constant ? time_monotone_f(s, pp, b.y_at(0, 0), C) : 0.0;

    par::parallel_for(n_paths, [&](std::size_t path) {
        std::vector<double>& lvl = out.pi0[path];
        lvl.resize(steps + 1);
        lvl[0] = pp.D0;
        double f_left = constant ? f_const : time_monotone_f(s, pp, b.y_at(path, 0), C);
        for (std::size_t k = 0; k < steps; ++k) {
            const double f_right =
                constant ? f_const : time_monotone_f(s, pp, b.y_at(path, k + 1), C);
            lvl[k + 1] = lvl[k] - 0.5 * dt * (f_left + f_right);
            f_left = f_right;
        }
        auto& u = out.U[path];
        u.resize(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k) {
            u[k].resize(static_cast<std::size_t>(wealth_grid.size()));
            const double e = std::exp(lvl[k]);
            for (Eigen::Index j = 0; j < wealth_grid.size(); ++j)
                u[k][static_cast<std::size_t>(j)] =
                    std::pow(wealth_grid[j], pp.p) / pp.p * e;
        }
    });
    return out;
}

FippSolution make_tilted_solution(const FactorMarketSpec& s, const PowerParams& pp,
                                  const TiltParams& tilt, const ConstraintSet& C) {
    if (tilt.sigma.size() != s.d)
        throw std::invalid_argument("tilt dimension does not match the factor dimension");
    FippSolution sol;
    sol.params = pp;
    sol.sigma = tilt.sigma;
    sol.y0 = s.y0;

    if (s.constant_coefficients) {
        const double psi0 = psi_sigma(s, pp, tilt.sigma, 0.0, s.y0, C);
        const Vec pi0 = maximize_phi(s, pp, tilt, 0.0, s.y0, C).pi_star;
        sol.g = [psi0](double, const Vec&) { return psi0; };
        sol.strategy = [pi0](double, const Vec&) { return pi0; };
    } else {
        const FactorMarketSpec sc = s;
        const PowerParams ppc = pp;
        const TiltParams tc = tilt;
        const ConstraintSet Cc = C;
        sol.g = [sc, ppc, tc, Cc](double t, const Vec& y) {
            return psi_sigma(sc, ppc, tc.sigma, t, y, Cc);
        };
        sol.strategy = [sc, ppc, tc, Cc](double t, const Vec& y) {
            return maximize_phi(sc, ppc, tc, t, y, Cc).pi_star;
        };
    }
    return sol;
}

TiltedFippResult construct_tilted_fipp(const FactorMarketSpec& s, const PowerParams& pp,
                                       const TiltParams& tilt, const ConstraintSet& C,
                                       const PathBundle& b) {
    TiltedFippResult out;
    out.solution = make_tilted_solution(s, pp, tilt, C);
    const std::size_t n_paths = static_cast<std::size_t>(b.n_paths);
    out.pi_paths.assign(n_paths, {});

    const std::size_t steps = static_cast<std::size_t>(b.steps);
    const double dt = b.dt;
    const Vec sigma = tilt.sigma;
    const bool constant = s.constant_coefficients;
    const double psi_const = constant ? out.solution.g(0.0, s.y0) : 0.0;

    par::parallel_for(n_paths, [&](std::size_t path) {
        std::vector<double>& lvl = out.pi_paths[path];
        lvl.resize(steps + 1);
        lvl[0] = pp.D0;
        std::size_t cursor = 0;
        double psi_left =
            constant ? psi_const : psi_sigma(s, pp, sigma, 0.0, b.y_at(path, 0), C);
        Vec y_prev = b.y_at(path, 0);
        for (std::size_t k = 0; k < steps; ++k) {
            const double t1 = static_cast<double>(k + 1) * dt;
            const bool jumped = step_has_jump(b, path, k, cursor);
            const Vec y_pre = constant ? Vec() : pre_jump_state(b, path, k, s, cursor);
            if (constant) {
                // advance the cursor past this step's jumps
                const auto& js = b.jumps[path];
                while (cursor < js.size() && static_cast<std::size_t>(js[cursor].step) == k)
                    ++cursor;
            }
            const double psi_right =
                constant ? psi_const : psi_sigma(s, pp, sigma, t1, y_pre, C);
            const Vec y_next = b.y_at(path, k + 1);
            lvl[k + 1] = lvl[k] + 0.5 * dt * (psi_left + psi_right) + sigma.dot(y_next - y_prev);
            y_prev = y_next;
            if (constant || !jumped)
                psi_left = psi_right;
            else
                psi_left = psi_sigma(s, pp, sigma, t1, y_next, C);
        }
    });
    return out;
}

std::vector<double> finite_variation_drift(const PowerParams& pp,
                                           const std::vector<double>& phi_samples, double dt,
                                           double V0) {
    if (phi_samples.empty()) return {};
    std::vector<double> v(phi_samples.size());
    v[0] = V0;
    for (std::size_t k = 0; k + 1 < phi_samples.size(); ++k)
        v[k + 1] = v[k] - pp.p * 0.5 * dt * (phi_samples[k] + phi_samples[k + 1]);
    return v;
}

Vec optimal_strategy_projection(const FactorMarketSpec& s, const PowerParams& pp,
                                const Vec& sigma_tilde, double t, const Vec& y,
                                const ConstraintSet& C) {
    if (!s.jumps.atoms.empty())
        throw std::invalid_argument("projection formula requires a jump-free market");
    if (sigma_tilde.size() != s.d)
        throw std::invalid_argument("tilt dimension does not match the factor dimension");

    const Mat cY = s.cov_Y(t, y);
    Eigen::LLT<Mat> lltY(cY);
    if (lltY.info() != Eigen::Success)
        throw std::invalid_argument("projection formula requires a nondegenerate factor "
                                    "covariance");
    const Mat sigY = lltY.matrixL();

    const Mat cRY = s.cov_RY(t, y);
    // sigma^R solves sigma^R sigma^Y' = c^{RY}
    const Mat sigR = sigY.triangularView<Eigen::Lower>()
                         .solve(cRY.transpose())
                         .transpose();
    const Mat cR = s.cov_R(t, y);
    const double scale = 1.0 + cR.cwiseAbs().maxCoeff();
    if (((sigR * sigR.transpose()) - cR).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::invalid_argument("asset diffusion is not spanned by the factor noise; "
                                    "projection formula unavailable");

    Eigen::LLT<Mat> lltR(cR);
    if (lltR.info() != Eigen::Success)
        throw std::invalid_argument("projection formula requires a nondegenerate asset "
                                    "covariance");
    const Vec b = s.drift_R(t, y);
    const Vec lambda = sigR.transpose() * lltR.solve(b);
    const Vec target = (lambda + sigma_tilde) / (1.0 - pp.p);

    if (s.n == 1) {
        const Vec row = sigR.row(0).transpose();
        const double a = row.squaredNorm();
        double hat = row.dot(target) / a;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        switch (C.kind) {
        case ConstraintKind::Box:
            lo = C.lo[0];
            hi = C.hi[0];
            break;
        case ConstraintKind::Ball:
            lo = C.center[0] - C.radius;
            hi = C.center[0] + C.radius;
            break;
        case ConstraintKind::SingletonOrigin:
            lo = hi = 0.0;
            break;
        case ConstraintKind::Simplex:
            lo = 0.0;
            hi = C.scale;
            break;
        case ConstraintKind::Halfspaces:
            for (Eigen::Index j = 0; j < C.A.rows(); ++j) {
                const double aj = C.A(j, 0);
                if (aj > 0.0)
                    hi = std::min(hi, C.b_rhs[j] / aj);
                else if (aj < 0.0)
                    lo = std::max(lo, C.b_rhs[j] / aj);
            }
            break;
        }
        Vec pi(1);
        pi[0] = std::min(std::max(hat, lo), hi);
        return pi;
    }

    // minimize |sigma^R' pi - target|^2 over C by projected gradient
    Eigen::SelfAdjointEigenSolver<Mat> es(cR);
    const double gamma = 1.0 / es.eigenvalues().maxCoeff();
    const Vec pull = sigR * target;
    Vec pi = project(C, Vec::Zero(s.n));
    for (int it = 0; it < 200000; ++it) {
        const Vec grad = cR * pi - pull;
        const Vec next = project(C, pi - gamma * grad);
        if ((next - pi).norm() <= 1e-15 * (1.0 + pi.norm())) {
            pi = next;
            break;
        }
        pi = next;
    }
    return pi;
}

ResidualStats bsde_residual(const FactorMarketSpec& s, const PowerParams& pp,
                            const TiltParams& tilt, const ConstraintSet& C,
                            const PathBundle& b,
                            const std::vector<std::vector<double>>& pi_paths) {
    const std::size_t n_paths = static_cast<std::size_t>(b.n_paths);
    const std::size_t steps = static_cast<std::size_t>(b.steps);
    if (pi_paths.size() != n_paths)
        throw std::invalid_argument("log-level paths do not match the bundle grid");
    for (const auto& pth : pi_paths)
        if (pth.size() != steps + 1)
            throw std::invalid_argument("log-level paths do not match the bundle grid");

    const Vec sigma = tilt.sigma;
    const JumpTiltFn W = [&sigma](const Vec& v) { return sigma.dot(v); };
    const double dt = b.dt;
    const bool constant = s.constant_coefficients;

    double f_const = 0.0;
    double comp_const = 0.0;
    if (constant) {
        f_const = driver_f(s, pp, 0.0, s.y0, sigma, W, C);
        for (const auto& a : s.jumps.atoms)
            if (a.v.size() > 0) comp_const += a.rate * sigma.dot(a.v);
    }

    ResidualStats stats;
    stats.per_path_rms.assign(n_paths, 0.0);
    std::vector<double> maxima(n_paths, 0.0);

    par::parallel_for(n_paths, [&](std::size_t path) {
        const auto& lvl = pi_paths[path];
        std::size_t cursor = 0;
        double ss = 0.0;
        double mx = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double t0 = static_cast<double>(k) * dt;
            const Vec y = b.y_at(path, k);
            double f = f_const;
            double comp = comp_const;
            if (!constant) {
                f = driver_f(s, pp, t0, y, sigma, W, C);
                comp = 0.0;
                for (const auto& a : s.jumps.atoms)
                    if (a.v.size() > 0) comp += a.rate_at(t0, y) * sigma.dot(a.v);
            }
            double jump_sum = 0.0;
            const auto& js = b.jumps[path];
            while (cursor < js.size() && static_cast<std::size_t>(js[cursor].step) == k) {
                jump_sum += sigma.dot(s.jumps.atoms[js[cursor].atom].v);
                ++cursor;
            }
            const double r = (lvl[k + 1] - lvl[k]) + f * dt - sigma.dot(b.dYc_at(path, k)) -
                             jump_sum + dt * comp;
            ss += r * r;
            mx = std::max(mx, std::abs(r));
        }
        stats.per_path_rms[path] = std::sqrt(ss / static_cast<double>(steps));
        maxima[path] = mx;
    });

    double total = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        total += stats.per_path_rms[i] * stats.per_path_rms[i];
        stats.max_abs = std::max(stats.max_abs, maxima[i]);
    }
    stats.rms = std::sqrt(total / static_cast<double>(n_paths));
    return stats;
}

} // namespace fipp
