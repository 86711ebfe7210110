#include "fipp/mc_validator.hpp"
#include "fipp/parallel.hpp"

#include <atomic>
#include <cmath>

namespace fipp {

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::MartingaleConsistent: return "martingale-consistent";
    case Verdict::SupermartingaleConsistent: return "supermartingale-consistent";
    case Verdict::Violation: return "violation";
    }
    return "violation";
}

namespace {

constexpr double kBudgetTol = 1e-12;

// multiplicative wealth update over one step; returns false once absorbed
bool apply_step(double& log_x, const Vec& pi, const Vec& bR_eff, const Vec& dRc,
                const Mat& cR, double dt, const FactorMarketSpec& s,
                const std::vector<int>& atoms) {
    log_x += pi.dot(bR_eff) * dt + pi.dot(dRc) - 0.5 * pi.dot(cR * pi) * dt;
    for (int a : atoms) {
        const double q = 1.0 + pi.dot(s.jumps.atoms[a].u);
        if (q < -kBudgetTol)
            throw AdmissibilityViolation("strategy leaves the budget set: 1 + pi'u = " +
                                         std::to_string(q) + " at a jump");
        if (q <= kBudgetTol) return false; // wealth hits zero and absorbs
        log_x += std::log(q);
    }
    return true;
}

} // namespace

std::vector<std::vector<double>> wealth_path(const FactorMarketSpec& s, const PathBundle& b,
                                             const StrategyFn& strategy, double x0) {
    if (!(x0 > 0.0)) throw std::invalid_argument("initial wealth must be positive");
    const std::size_t n_paths = static_cast<std::size_t>(b.n_paths);
    const std::size_t steps = static_cast<std::size_t>(b.steps);
    std::vector<std::vector<double>> out(n_paths);

    par::parallel_for(n_paths, [&](std::size_t path) {
        auto& xs = out[path];
        xs.resize(steps + 1);
        xs[0] = x0;
        double log_x = std::log(x0);
        bool alive = true;
        std::size_t cursor = 0;
        std::vector<int> atoms;
        for (std::size_t k = 0; k < steps; ++k) {
            if (!alive) {
                xs[k + 1] = 0.0;
                continue;
            }
            const double t0 = static_cast<double>(k) * b.dt;
            const Vec y = b.y_at(path, k);
            const Vec pi = strategy(t0, y);
            atoms.clear();
            const auto& js = b.jumps[path];
            while (cursor < js.size() && static_cast<std::size_t>(js[cursor].step) == k) {
                atoms.push_back(js[cursor].atom);
                ++cursor;
            }
            alive = apply_step(log_x, pi, effective_drift_R(s, t0, y), b.dRc_at(path, k),
                               s.cov_R(t0, y), b.dt, s, atoms);
            xs[k + 1] = alive ? std::exp(log_x) : 0.0;
        }
    });
    return out;
}

MartingaleReport martingale_test(const FactorMarketSpec& s, const FippSolution& sol,
                                 const MartingaleParams& mp,
                                 const StrategyFn& strategy_override) {
    if (!(mp.x0 > 0.0)) throw std::invalid_argument("initial wealth must be positive");
    if (mp.n_paths == 0) throw std::invalid_argument("n_paths must be positive");

    const PathSimulator sim(s, mp.T, mp.dt, mp.refine, mp.seed);
    const StrategyFn strat = strategy_override ? strategy_override : sol.strategy;
    const double p = sol.params.p;
    const double dt = sim.dt();
    const Vec sigma = sol.sigma;

    const bool const_market = s.constant_coefficients;
    const bool const_strategy = const_market && !strategy_override;
    Vec pi_const;
    double quad_const = 0.0;
    Mat cR_const;
    if (const_market) cR_const = s.cov_R(0.0, s.y0);
    if (const_strategy) {
        pi_const = strat(0.0, s.y0);
        quad_const = pi_const.dot(cR_const * pi_const);
    }
    const double psi0 = const_market ? sol.g(0.0, s.y0) : 0.0;
    const double log_x0 = std::log(mp.x0);

    std::vector<double> samples(mp.n_paths);
    std::atomic<std::size_t> absorbed{0};

    auto run_one = [&](std::uint32_t stream, bool negate) {
        double log_x = log_x0;
        bool alive = true;
        double lvl = sol.params.D0;
        double psi_left = const_market ? psi0 : sol.g(0.0, s.y0);
        sim.run(stream, negate, [&](const PathSimulator::Step& st) {
            if (alive) {
                if (const_strategy) {
                    log_x += pi_const.dot(st.bR_eff) * dt + pi_const.dot(st.dRc) -
                             0.5 * quad_const * dt;
                    for (int a : *st.atoms) {
                        const double q = 1.0 + pi_const.dot(s.jumps.atoms[a].u);
                        if (q < -kBudgetTol)
                            throw AdmissibilityViolation(
                                "strategy leaves the budget set: 1 + pi'u = " +
                                std::to_string(q) + " at a jump");
                        if (q <= kBudgetTol) {
                            alive = false;
                            break;
                        }
                        log_x += std::log(q);
                    }
                } else {
                    const Vec pi = strat(st.t0, st.y_prev);
                    const Mat& cR = const_market ? cR_const : s.cov_R(st.t0, st.y_prev);
                    alive = apply_step(log_x, pi, st.bR_eff, st.dRc, cR, dt, s, *st.atoms);
                }
            }
            const double t1 = st.t0 + dt;
            const double psi_right = const_market ? psi0 : sol.g(t1, st.y_pre);
            lvl += 0.5 * dt * (psi_left + psi_right) + sigma.dot(st.y_post - st.y_prev);
            psi_left = (const_market || st.atoms->empty()) ? psi_right : sol.g(t1, st.y_post);
        });
        if (!alive) {
            absorbed.fetch_add(1, std::memory_order_relaxed);
            return p > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
        }
        return std::exp(p * log_x + lvl) / p;
    };

    par::parallel_for(mp.n_paths, [&](std::size_t i) {
        const auto stream = static_cast<std::uint32_t>(i);
        const double s1 = run_one(stream, false);
        samples[i] = mp.antithetic ? 0.5 * (s1 + run_one(stream, true)) : s1;
    });

    MartingaleReport rep;
    rep.n_samples = mp.n_paths;
    rep.absorbed = absorbed.load();
    rep.antithetic = mp.antithetic;
    rep.u0 = std::pow(mp.x0, p) / p * std::exp(sol.params.D0);
    rep.mean = par::pairwise_sum(samples) / static_cast<double>(samples.size());

    if (!std::isfinite(rep.mean)) {
        rep.se = std::numeric_limits<double>::quiet_NaN();
        rep.z = std::numeric_limits<double>::quiet_NaN();
        rep.excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
        rep.verdict = Verdict::Violation;
        return rep;
    }

    double m2 = 0.0, m4 = 0.0;
    {
        std::vector<double> dev2(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double d = samples[i] - rep.mean;
            dev2[i] = d * d;
        }
        m2 = par::pairwise_sum(dev2) / static_cast<double>(samples.size());
        for (auto& v : dev2) v *= v;
        m4 = par::pairwise_sum(dev2) / static_cast<double>(samples.size());
    }
    const double n = static_cast<double>(samples.size());
    const double var = n > 1.0 ? m2 * n / (n - 1.0) : 0.0;
    rep.se = std::sqrt(var / n);
    rep.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    const double gap = rep.mean - rep.u0;
    if (rep.se > 0.0) {
        rep.z = gap / rep.se;
    } else {
        const double scale = 1.0 + std::abs(rep.u0);
        rep.z = std::abs(gap) <= 1e-12 * scale
                    ? 0.0
                    : std::copysign(std::numeric_limits<double>::infinity(), gap);
    }

    if (std::abs(rep.z) < mp.z_threshold)
        rep.verdict = Verdict::MartingaleConsistent;
    else if (rep.z < mp.z_threshold)
        rep.verdict = Verdict::SupermartingaleConsistent;
    else
        rep.verdict = Verdict::Violation;
    return rep;
}

} // namespace fipp
