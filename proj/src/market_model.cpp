#include "fipp/market_model.hpp"

#include <sstream>

#include "fipp/parallel.hpp"

namespace fipp {

namespace {

std::string point_str(double t, const Vec& y) {
    std::ostringstream os;
    os << "(t=" << t << ", y=[";
    for (int i = 0; i < y.size(); ++i) os << (i ? "," : "") << y[i];
    os << "])";
    return os.str();
}

} // namespace

Vec effective_drift_R(const FactorMarketSpec& s, double t, const Vec& y) {
    Vec b = s.drift_R(t, y);
    for (const auto& a : s.jumps.atoms)
        if (a.u.norm() <= s.truncation_radius) b.noalias() -= a.rate_at(t, y) * a.u;
    return b;
}

Vec effective_drift_Y(const FactorMarketSpec& s, double t, const Vec& y) {
    Vec b = s.drift_Y(t, y);
    for (const auto& a : s.jumps.atoms)
        if (a.v.norm() <= s.truncation_radius) b.noalias() -= a.rate_at(t, y) * a.v;
    return b;
}

Mat joint_covariance(const FactorMarketSpec& s, double t, const Vec& y) {
    const int n = s.n, d = s.d;
    Mat S(n + d, n + d);
    S.topLeftCorner(n, n) = s.cov_R(t, y);
    S.topRightCorner(n, d) = s.cov_RY(t, y);
    S.bottomLeftCorner(d, n) = S.topRightCorner(n, d).transpose();
    S.bottomRightCorner(d, d) = s.cov_Y(t, y);
    return S;
}

Mat covariance_factor(const Mat& S, const std::string& where) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (es.info() != Eigen::Success)
        throw std::invalid_argument(where + ": eigendecomposition failed");
    Vec lam = es.eigenvalues();
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] < -1e-10 * scale)
            throw std::invalid_argument(where + ": not positive semidefinite (eigenvalue " +
                                        std::to_string(lam[i]) + ")");
        lam[i] = std::max(lam[i], 0.0);
    }
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

ValidationReport validate_spec(const FactorMarketSpec& s, double p,
                               const std::vector<std::pair<double, Vec>>& probes) {
    if (s.n <= 0 || s.d <= 0) throw std::invalid_argument("spec: n and d must be positive");
    if (s.y0.size() != s.d) throw std::invalid_argument("spec: y0 has wrong dimension");
    if (!(s.truncation_radius > 0.0))
        throw std::invalid_argument("spec: truncation_radius must be positive");
    if (p == 0.0 || p >= 1.0)
        throw std::invalid_argument("power: p must lie in (-inf,0) or (0,1)");

    ValidationReport rep;
    rep.total_rate = 0.0;
    for (std::size_t k = 0; k < s.jumps.atoms.size(); ++k) {
        const auto& a = s.jumps.atoms[k];
        if (a.u.size() != s.n || a.v.size() != s.d)
            throw std::invalid_argument("jumps: atom " + std::to_string(k) +
                                        " has wrong mark dimension");
        if (!(a.rate >= 0.0) || !std::isfinite(a.rate))
            throw std::invalid_argument("jumps: atom " + std::to_string(k) +
                                        " has negative or non-finite rate");
        if (a.u.norm() == 0.0 && a.v.norm() == 0.0)
            throw std::invalid_argument("jumps: atom " + std::to_string(k) + " sits at the origin");
        rep.total_rate += a.rate;
        if (a.u.norm() > s.truncation_radius) {
            rep.tail_atoms.push_back(static_cast<int>(k));
            if (p > 0.0) rep.af_value += a.rate * std::pow(a.u.norm(), p);
        }
        if (a.v.norm() > s.truncation_radius)
            rep.big_factor_atoms.push_back(static_cast<int>(k));
    }
    if (!std::isfinite(rep.total_rate))
        throw std::invalid_argument("jumps: total rate is not finite");

    for (const auto& [t, y] : probes) {
        const Vec bR = s.drift_R(t, y);
        const Vec bY = s.drift_Y(t, y);
        if (bR.size() != s.n) throw std::invalid_argument("drift_R: wrong dimension at " + point_str(t, y));
        if (bY.size() != s.d) throw std::invalid_argument("drift_Y: wrong dimension at " + point_str(t, y));
        if (!bR.allFinite()) throw std::invalid_argument("drift_R: non-finite at " + point_str(t, y));
        if (!bY.allFinite()) throw std::invalid_argument("drift_Y: non-finite at " + point_str(t, y));

        const Mat cR = s.cov_R(t, y);
        const Mat cY = s.cov_Y(t, y);
        for (int i = 0; i < s.n && i < cR.rows(); ++i)
            if (cR(i, i) < 0.0)
                throw std::invalid_argument("cov_R: negative variance (entry " +
                                            std::to_string(i) + ") at " + point_str(t, y));
        for (int i = 0; i < s.d && i < cY.rows(); ++i)
            if (cY(i, i) < 0.0)
                throw std::invalid_argument("cov_Y: negative variance (entry " +
                                            std::to_string(i) + ") at " + point_str(t, y));

        const Mat S = joint_covariance(s, t, y);
        if (S.rows() != s.n + s.d)
            throw std::invalid_argument("covariance: wrong dimension at " + point_str(t, y));
        if (!S.allFinite())
            throw std::invalid_argument("covariance: non-finite at " + point_str(t, y));
        const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("covariance: not symmetric at " + point_str(t, y));

        Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
        const double lam_min = es.eigenvalues().minCoeff();
        const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (lam_min < -1e-10 * scale)
            throw std::invalid_argument("covariance: not PSD at " + point_str(t, y));
        rep.probes.push_back({t, y, lam_min});
    }
    return rep;
}

JumpMeasure marginal_jump_measure(const JumpMeasure& m, Marginal side) {
    JumpMeasure out;
    for (const auto& a : m.atoms) {
        const Vec& mark = (side == Marginal::R) ? a.u : a.v;
        if (mark.norm() == 0.0) continue;
        bool merged = false;
        for (auto& b : out.atoms) {
            const Vec& bm = (side == Marginal::R) ? b.u : b.v;
            if (bm.size() == mark.size() && bm == mark) {
                b.rate += a.rate;
                merged = true;
                break;
            }
        }
        if (!merged) {
            JumpAtom na;
            na.u = (side == Marginal::R) ? a.u : Vec();
            na.v = (side == Marginal::Y) ? a.v : Vec();
            na.rate = a.rate;
            out.atoms.push_back(std::move(na));
        }
    }
    return out;
}

PathSimulator::PathSimulator(const FactorMarketSpec& s, double T, double dt, int refine,
                             std::uint64_t seed)
    : spec_(s), T_(T), dt_(dt), refine_(refine), seed_(seed) {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("simulate: T and dt must be positive");
    const double k = T / dt;
    steps_ = static_cast<int>(std::lround(k));
    if (std::abs(k - steps_) > 1e-9 * std::max(1.0, k))
        throw std::invalid_argument("simulate: T must be an integer multiple of dt");
    if (refine < 1) throw std::invalid_argument("simulate: refine must be >= 1");
    for (const auto& a : s.jumps.atoms)
        if (a.rate_fn)
            throw std::invalid_argument("simulate: state-dependent jump rates are not supported");
    lambda_tot_ = s.jumps.total_rate();
    double c = 0.0;
    for (const auto& a : s.jumps.atoms) rate_cumsum_.push_back(c += a.rate);
    if (s.constant_coefficients) {
        cached_factor_ = covariance_factor(joint_covariance(s, 0.0, s.y0), "joint covariance");
        has_cached_factor_ = true;
    }
}

PathBundle simulate_paths(const FactorMarketSpec& s, const SimParams& params) {
    PathSimulator sim(s, params.T, params.dt, params.refine, params.seed);
    PathBundle b;
    b.T = params.T;
    b.dt = params.dt;
    b.steps = sim.steps();
    b.n_paths = params.n_paths;
    b.n = s.n;
    b.d = s.d;
    b.seed = params.seed;
    b.refine = params.refine;
    const std::size_t K = b.steps;
    b.y.assign(static_cast<std::size_t>(b.n_paths) * (K + 1) * s.d, 0.0);
    b.dRc.assign(static_cast<std::size_t>(b.n_paths) * K * s.n, 0.0);
    b.dYc.assign(static_cast<std::size_t>(b.n_paths) * K * s.d, 0.0);
    b.jumps.assign(b.n_paths, {});

    par::parallel_for(b.n_paths, [&](std::int64_t p) {
        double* yrow = b.y.data() + static_cast<std::size_t>(p) * (K + 1) * s.d;
        double* rrow = b.dRc.data() + static_cast<std::size_t>(p) * K * s.n;
        double* crow = b.dYc.data() + static_cast<std::size_t>(p) * K * s.d;
        Eigen::Map<Vec>(yrow, s.d) = s.y0;
        sim.run(static_cast<std::uint32_t>(p), false, [&](const PathSimulator::Step& st) {
            Eigen::Map<Vec>(rrow + static_cast<std::size_t>(st.k) * s.n, s.n) = st.dRc;
            Eigen::Map<Vec>(crow + static_cast<std::size_t>(st.k) * s.d, s.d) = st.dYc;
            Eigen::Map<Vec>(yrow + static_cast<std::size_t>(st.k + 1) * s.d, s.d) = st.y_post;
            for (int a : *st.atoms) b.jumps[p].push_back({st.k, a});
        });
    });
    return b;
}

} // namespace fipp
