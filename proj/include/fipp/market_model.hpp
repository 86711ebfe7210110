#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fipp/rng.hpp"

namespace fipp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using DriftFn = std::function<Vec(double, const Vec&)>;
using CovFn = std::function<Mat(double, const Vec&)>;
using RateFn = std::function<double(double, const Vec&)>;

// One atom of the joint jump measure: excess returns jump by u (dim n) while
// the factor jumps by v (dim d), at Poisson intensity `rate`. A state-dependent
// rate hook exists for evaluation-side ops; the simulator requires constant rates.
struct JumpAtom {
    Vec u;
    Vec v;
    double rate = 0.0;
    RateFn rate_fn;
    double rate_at(double t, const Vec& y) const { return rate_fn ? rate_fn(t, y) : rate; }
};

struct JumpMeasure {
    std::vector<JumpAtom> atoms;
    double total_rate() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.rate;
        return s;
    }
};

// Local-characteristics description of the market: drift/covariance fields for
// the n excess returns and the d factors, plus the finite-activity jump measure.
// drift_R and drift_Y are the truncated-drift characteristics (truncation
// |jump| <= truncation_radius), so the simulator subtracts the compensator of
// the truncated jumps from the between-jump drift.
struct FactorMarketSpec {
    int n = 0;
    int d = 0;
    DriftFn drift_R;
    DriftFn drift_Y;
    CovFn cov_R;   // n x n
    CovFn cov_RY;  // n x d
    CovFn cov_Y;   // d x d
    JumpMeasure jumps;
    double truncation_radius = 1.0;
    Vec y0;
    bool constant_coefficients = false; // config hint; enables factor caching
};

// drift minus the truncated-jump compensator: what the path actually drifts at
// between jumps
Vec effective_drift_R(const FactorMarketSpec& s, double t, const Vec& y);
Vec effective_drift_Y(const FactorMarketSpec& s, double t, const Vec& y);

Mat joint_covariance(const FactorMarketSpec& s, double t, const Vec& y);

// A with A A^T = S, via symmetric eigendecomposition; eigenvalues below
// -1e-10*scale are a hard error, small negatives are clamped to zero
Mat covariance_factor(const Mat& S, const std::string& where);

struct ProbeResult {
    double t = 0.0;
    Vec y;
    double min_eigenvalue = 0.0;
};

struct ValidationReport {
    std::vector<ProbeResult> probes;
    double af_value = 0.0;             // sum_{|u|>1} rate*|u|^p, reported for p in (0,1)
    std::vector<int> tail_atoms;       // atoms with |u| > truncation radius
    std::vector<int> big_factor_atoms; // atoms with |v| > truncation radius (informational)
    double total_rate = 0.0;
};

// Checks dimensions, symmetry and positive semidefiniteness of the joint
// covariance at each probe point, jump-measure sanity (no origin atom,
// nonnegative rates, finite total rate), and reports the tail-moment sum.
// Hard failures throw std::invalid_argument naming the field and probe point.
ValidationReport validate_spec(const FactorMarketSpec& s, double p,
                               const std::vector<std::pair<double, Vec>>& probes);

// marginal on the R side (project to u) or the Y side (project to v):
// drops atoms whose projection is the origin and merges equal projections
enum class Marginal { R, Y };
JumpMeasure marginal_jump_measure(const JumpMeasure& m, Marginal side);

struct SimParams {
    double T = 1.0;
    double dt = 0.01;
    int n_paths = 1;
    std::uint64_t seed = 0;
    int refine = 1; // Gaussian draws are generated at dt/refine and aggregated
};

// Materialized Euler paths on the coarse grid. Node values are post-jump.
struct PathBundle {
    double T = 0.0;
    double dt = 0.0;
    int steps = 0;
    int n_paths = 0;
    int n = 0;
    int d = 0;
    std::uint64_t seed = 0;
    int refine = 1;

    std::vector<double> y;   // n_paths * (steps+1) * d
    std::vector<double> dRc; // n_paths * steps * n
    std::vector<double> dYc; // n_paths * steps * d

    struct StepJump {
        int step;
        int atom;
    };
    std::vector<std::vector<StepJump>> jumps; // per path, ordered by step

    Eigen::Map<const Vec> y_at(int path, int k) const {
        return {y.data() + (static_cast<std::size_t>(path) * (steps + 1) + k) * d, d};
    }
    Eigen::Map<const Vec> dRc_at(int path, int k) const {
        return {dRc.data() + (static_cast<std::size_t>(path) * steps + k) * n, n};
    }
    Eigen::Map<const Vec> dYc_at(int path, int k) const {
        return {dYc.data() + (static_cast<std::size_t>(path) * steps + k) * d, d};
    }
};

PathBundle simulate_paths(const FactorMarketSpec& s, const SimParams& params);

// Streaming single-path simulator; used by simulate_paths and by the Monte
// Carlo validator (which never materializes bundles).
class PathSimulator {
public:
    PathSimulator(const FactorMarketSpec& s, double T, double dt, int refine,
                  std::uint64_t seed);

    int steps() const { return steps_; }
    double dt() const { return dt_; }

    struct Step {
        int k = 0;
        double t0 = 0.0;       // step start time
        Vec bR_eff, bY_eff;    // effective drifts at (t0, y_prev)
        Vec dRc, dYc;          // continuous increments over the step
        Vec y_prev;            // factor at t0 (post-jump node)
        Vec y_pre;             // factor at step end before jumps
        Vec y_post;            // factor at step end after jumps
        const std::vector<int>* atoms = nullptr; // atom indices applied this step
    };

    // visit(step) is called once per step in order; negate_gaussians flips the
    // sign of every Gaussian draw (antithetic variates), stream_id addresses
    // the RNG stream (normally the path index).
    template <class Visitor>
    void run(std::uint32_t stream_id, bool negate_gaussians, Visitor&& visit) const;

private:
    const FactorMarketSpec& spec_;
    double T_, dt_;
    int steps_, refine_;
    std::uint64_t seed_;
    double lambda_tot_ = 0.0;
    std::vector<double> rate_cumsum_;
    Mat cached_factor_; // valid when spec_.constant_coefficients
    bool has_cached_factor_ = false;
};

template <class Visitor>
void PathSimulator::run(std::uint32_t stream_id, bool negate_gaussians, Visitor&& visit) const {
    const int n = spec_.n, d = spec_.d, m = refine_;
    const int dim = n + d;
    const int pairs = (dim + 1) / 2;
    const double sqrt_dt = std::sqrt(dt_);
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));

    Philox gauss(seed_, stream_id, 0);
    Philox jstream(seed_, stream_id, 1);

    Step st;
    st.bR_eff.resize(n);
    st.bY_eff.resize(d);
    st.dRc.resize(n);
    st.dYc.resize(d);
    st.y_prev = spec_.y0;
    st.y_pre.resize(d);
    st.y_post.resize(d);

    Vec z(dim), dw(dim);
    std::vector<int> atoms;
    st.atoms = &atoms;

    std::uint64_t jump_idx = 0;
    double next_tau = std::numeric_limits<double>::infinity();
    if (lambda_tot_ > 0.0) next_tau = jstream.exp1(2 * jump_idx) / lambda_tot_;

    for (int k = 0; k < steps_; ++k) {
        st.k = k;
        st.t0 = k * dt_;
        const double t1 = (k + 1) * dt_;

        z.setZero();
        for (int j = 0; j < m; ++j) {
            const std::uint64_t f = static_cast<std::uint64_t>(k) * m + j;
            for (int q = 0; q < pairs; ++q) {
                const auto [z0, z1] = gauss.normal_pair(f * pairs + q);
                z[2 * q] += z0;
                if (2 * q + 1 < dim) z[2 * q + 1] += z1;
            }
        }
        if (m > 1) z *= inv_sqrt_m;
        if (negate_gaussians) z = -z;

        if (has_cached_factor_) {
            dw.noalias() = cached_factor_ * z;
        } else {
            dw.noalias() = covariance_factor(joint_covariance(spec_, st.t0, st.y_prev),
                                             "joint covariance") * z;
        }
        dw *= sqrt_dt;
        st.dRc = dw.head(n);
        st.dYc = dw.tail(d);

        st.bR_eff = effective_drift_R(spec_, st.t0, st.y_prev);
        st.bY_eff = effective_drift_Y(spec_, st.t0, st.y_prev);

        st.y_pre = st.y_prev + st.bY_eff * dt_ + st.dYc;

        atoms.clear();
        st.y_post = st.y_pre;
        while (next_tau <= t1) {
            const double usel = jstream.u01(2 * jump_idx + 1);
            const double target = usel * lambda_tot_;
            int a = 0;
            while (a + 1 < static_cast<int>(rate_cumsum_.size()) && rate_cumsum_[a] < target) ++a;
            atoms.push_back(a);
            st.y_post += spec_.jumps.atoms[a].v;
            ++jump_idx;
            next_tau += jstream.exp1(2 * jump_idx) / lambda_tot_;
        }

        visit(st);
        st.y_prev = st.y_post;
    }
}

} // namespace fipp
