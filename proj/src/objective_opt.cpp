#include "fipp/objective_opt.hpp"

#include <cmath>

namespace fipp {

namespace {

void check_power(const PowerParams& pp) {
    if (pp.p == 0.0 || pp.p >= 1.0 || !std::isfinite(pp.p))
        throw std::invalid_argument("power: p must lie in (-inf,0) or (0,1)");
}

double min_budget_slack(const TiltedObjective& obj, const Vec& pi) {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& a : obj.atoms)
        if (a.rate > 0.0) s = std::min(s, 1.0 + pi.dot(a.u));
    return s;
}

// largest theta in [0,1] keeping every atom slack of (1-theta)*from + theta*to
// at or above floor; slacks are affine in theta
double budget_step_limit(const TiltedObjective& obj, const Vec& from, const Vec& to,
                         double floor_slack) {
    double theta = 1.0;
    for (const auto& a : obj.atoms) {
        if (a.rate <= 0.0) continue;
        const double s0 = 1.0 + from.dot(a.u);
        const double s1 = 1.0 + to.dot(a.u);
        if (s1 >= floor_slack) continue;
        if (s0 <= s1) return 0.0; // cannot improve along this segment
        theta = std::min(theta, (s0 - floor_slack) / (s0 - s1));
    }
    return std::max(theta, 0.0);
}

} // namespace

TiltedObjective make_objective(const FactorMarketSpec& s, const PowerParams& pp,
                               double t, const Vec& y, const Vec& Z, const JumpTiltFn& W) {
    check_power(pp);
    TiltedObjective obj;
    obj.p = pp.p;
    obj.truncation_radius = s.truncation_radius;
    obj.cR = s.cov_R(t, y);
    obj.b_eff = s.drift_R(t, y);
    if (Z.size()) obj.b_eff.noalias() += s.cov_RY(t, y) * Z;
    double jump_curv = 0.0;
    for (const auto& a : s.jumps.atoms) {
        const double rate = a.rate_at(t, y);
        if (a.u.norm() == 0.0) continue; // pure factor jump: no R-side contribution
        TiltedObjective::Atom oa;
        oa.u = a.u;
        oa.rate = rate;
        oa.wfac = W ? std::exp(W(a.v)) : 1.0;
        oa.small_u = a.u.norm() <= s.truncation_radius;
        jump_curv += rate * oa.wfac * a.u.squaredNorm();
        obj.atoms.push_back(std::move(oa));
    }
    double lam_max = 0.0;
    if (obj.cR.size()) {
        Eigen::SelfAdjointEigenSolver<Mat> es(obj.cR, Eigen::EigenvaluesOnly);
        lam_max = std::max(0.0, es.eigenvalues().maxCoeff());
    }
    obj.lipschitz_hint = (1.0 - pp.p) * (lam_max + jump_curv);
    return obj;
}

TiltedObjective make_objective(const FactorMarketSpec& s, const PowerParams& pp,
                               const TiltParams& tilt, double t, const Vec& y) {
    const Vec sigma = tilt.sigma.size() ? tilt.sigma : Vec::Zero(s.d);
    return make_objective(s, pp, t, y, sigma,
                          [&sigma](const Vec& v) { return sigma.dot(v); });
}

LocalCharacteristics local_characteristics(const TiltedObjective& obj) {
    LocalCharacteristics ch;
    ch.cR = obj.cR;
    ch.truncation_radius = obj.truncation_radius;
    ch.b = obj.b_eff;
    for (const auto& a : obj.atoms) {
        if (a.small_u) ch.b.noalias() += a.rate * (a.wfac - 1.0) * a.u;
        ch.atoms.push_back({a.u, a.rate * a.wfac});
    }
    return ch;
}

LocalCharacteristics make_local_characteristics(const FactorMarketSpec& s, const PowerParams& pp,
                                                const TiltParams& tilt, double t, const Vec& y) {
    return local_characteristics(make_objective(s, pp, tilt, t, y));
}

double objective_value(const TiltedObjective& obj, const Vec& pi) {
    const double p = obj.p;
    double val = pi.dot(obj.b_eff);
    if (obj.cR.size()) val += 0.5 * (p - 1.0) * pi.dot(obj.cR * pi);
    for (const auto& a : obj.atoms) {
        if (a.rate <= 0.0) continue;
        const double q = 1.0 + pi.dot(a.u);
        double term = (std::pow(q, p) - 1.0) / p * a.wfac;
        if (a.small_u) term -= pi.dot(a.u);
        val += a.rate * term;
    }
    return val;
}

Vec objective_gradient(const TiltedObjective& obj, const Vec& pi) {
    const double p = obj.p;
    Vec g = obj.b_eff;
    if (obj.cR.size()) g.noalias() += (p - 1.0) * (obj.cR * pi);
    for (const auto& a : obj.atoms) {
        if (a.rate <= 0.0) continue;
        const double q = 1.0 + pi.dot(a.u);
        if (q < 0.0) throw std::domain_error("objective_gradient: pi outside the budget set");
        if (q == 0.0) throw std::domain_error("objective_gradient: budget boundary");
        g.noalias() += a.rate * (std::pow(q, p - 1.0) * a.wfac - (a.small_u ? 1.0 : 0.0)) * a.u;
    }
    return g;
}

std::optional<double> phi_value(const FactorMarketSpec& s, const PowerParams& pp,
                                const TiltParams& tilt, double t, const Vec& y, const Vec& pi) {
    const auto obj = make_objective(s, pp, tilt, t, y);
    if (min_budget_slack(obj, pi) < 0.0) return std::nullopt;
    return objective_value(obj, pi);
}

Vec phi_gradient(const FactorMarketSpec& s, const PowerParams& pp, const TiltParams& tilt,
                 double t, const Vec& y, const Vec& pi) {
    const auto obj = make_objective(s, pp, tilt, t, y);
    if (min_budget_slack(obj, pi) < 0.0)
        throw std::domain_error("phi_gradient: pi outside the budget set");
    return objective_gradient(obj, pi);
}

std::pair<double, double> jump_integrals(const FactorMarketSpec& s, const PowerParams& pp,
                                         const TiltParams& tilt, double t, const Vec& y,
                                         const Vec& pi) {
    const auto obj = make_objective(s, pp, tilt, t, y);
    double i1 = 0.0, i2 = 0.0;
    for (const auto& a : obj.atoms) {
        if (a.rate <= 0.0) continue;
        const double q = 1.0 + pi.dot(a.u);
        const double core = (std::pow(q, obj.p) - 1.0) / obj.p * a.wfac;
        if (a.small_u)
            i1 += a.rate * (core - pi.dot(a.u));
        else
            i2 += a.rate * core;
    }
    return {i1, i2};
}

OptimizeResult maximize_objective(const TiltedObjective& obj, const ConstraintSet& C) {
    OptimizeResult res;
    if (!constraint_is_bounded(C)) {
        const auto att = attainment_check(local_characteristics(obj), C);
        if (att.status == Attainment::Inconclusive) {
            res.status = OptimizeResult::Status::NotAttained;
            res.witness = att.witness;
            return res;
        }
    }

    const double floor_slack = obj.p < 0.0 ? 1e-9 : 0.0;
    const double gamma0 = obj.lipschitz_hint > 0.0 ? 1.0 / obj.lipschitz_hint : 1.0;

    Vec pi = Vec::Zero(C.n);
    double val = objective_value(obj, pi);
    double gamma = gamma0;
    const int max_iter = 200000;

    auto move_from = [&](const Vec& from, const Vec& grad, double step) {
        Vec cand = project(C, from + step * grad);
        const double theta = budget_step_limit(obj, from, cand, floor_slack);
        if (theta < 1.0) cand = from + theta * (cand - from);
        return cand;
    };

    int it = 0;
    for (; it < max_iter; ++it) {
        Vec g;
        try {
            g = objective_gradient(obj, pi);
        } catch (const std::domain_error&) {
            break; // pinned on the budget boundary (p in (0,1)); value is final
        }

        // Armijo backtracking on the projected step
        Vec cand;
        double cand_val = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            cand = move_from(pi, g, gamma);
            cand_val = objective_value(obj, cand);
            const double decrease = g.dot(cand - pi);
            if (cand_val >= val + 1e-4 * decrease && std::isfinite(cand_val)) {
                accepted = true;
                break;
            }
            gamma *= 0.5;
        }
        if (!accepted) break;

        const double move = (cand - pi).norm();
        pi = cand;
        val = cand_val;
        gamma = std::min(gamma * 2.0, gamma0 * 1e6);

        if (move <= 1e-14 * (1.0 + pi.norm())) {
            ++it;
            break;
        }
    }

    // fixed-point residual at the reference step
    double gap = 0.0;
    try {
        const Vec g = objective_gradient(obj, pi);
        gap = (pi - move_from(pi, g, gamma0)).norm();
        // polish: a few extra fixed-step iterations if the residual is loose
        int polish = 0;
        while (gap > 1e-12 * (1.0 + pi.norm()) && polish++ < 2000) {
            const Vec nxt = move_from(pi, objective_gradient(obj, pi), gamma0);
            if ((nxt - pi).norm() == 0.0) break;
            const double nval = objective_value(obj, nxt);
            if (!(nval >= val - 1e-15 * std::abs(val))) break;
            pi = nxt;
            val = nval;
            gap = (pi - move_from(pi, objective_gradient(obj, pi), gamma0)).norm();
        }
    } catch (const std::domain_error&) {
        gap = 0.0; // boundary-pinned
    }

    // deterministic tie-break: drop the null-investment component when feasible
    const auto ch = local_characteristics(obj);
    std::vector<Vec> rows;
    if (ch.cR.size())
        for (int i = 0; i < ch.cR.rows(); ++i) rows.push_back(ch.cR.row(i).transpose());
    for (const auto& a : ch.atoms)
        if (a.rate > 0.0) rows.push_back(a.u);
    rows.push_back(ch.b);
    Mat M(static_cast<int>(rows.size()), C.n);
    for (std::size_t i = 0; i < rows.size(); ++i) M.row(static_cast<int>(i)) = rows[i].transpose();
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thr = (sv.size() ? sv[0] : 0.0) * 1e-10 + 1e-14;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > thr) ++rank;
    if (rank < C.n) {
        const Mat N = svd.matrixV().rightCols(C.n - rank);
        const Vec cand = pi - N * (N.transpose() * pi);
        if (contains(C, cand, 1e-10) && min_budget_slack(obj, cand) >= floor_slack) {
            const double cval = objective_value(obj, cand);
            if (std::abs(cval - val) <= 1e-9 * std::max(1.0, std::abs(val))) pi = cand;
        }
    }

    res.status = it >= max_iter ? OptimizeResult::Status::IterationLimit
                                : OptimizeResult::Status::Ok;
    res.pi_star = pi;
    res.value = val;
    res.gap = gap;
    res.iterations = it;
    return res;
}

OptimizeResult maximize_phi(const FactorMarketSpec& s, const PowerParams& pp,
                            const TiltParams& tilt, double t, const Vec& y,
                            const ConstraintSet& C) {
    return maximize_objective(make_objective(s, pp, tilt, t, y), C);
}

} // namespace fipp
