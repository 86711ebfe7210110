#pragma once

#include "fipp/market_model.hpp"

#include <initializer_list>

namespace fipp::testing {

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.begin()->size());
    Mat out(r, c);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double x : row) out(i, j++) = x;
        ++i;
    }
    return out;
}

inline DriftFn cdrift(const Vec& v) {
    return [v](double, const Vec&) { return v; };
}

inline CovFn ccov(const Mat& m) {
    return [m](double, const Vec&) { return m; };
}

// scalar market: one asset, one factor, constant coefficients
inline FactorMarketSpec market1(double b, double c, double cry = 0.0, double cy = 0.0,
                                double by = 0.0) {
    FactorMarketSpec s;
    s.n = 1;
    s.d = 1;
    s.y0 = Vec::Zero(1);
    s.drift_R = cdrift(vec({b}));
    s.drift_Y = cdrift(vec({by}));
    s.cov_R = ccov(mat({{c}}));
    s.cov_RY = ccov(mat({{cry}}));
    s.cov_Y = ccov(mat({{cy}}));
    s.constant_coefficients = true;
    return s;
}

inline void add_atom(FactorMarketSpec& s, const Vec& u, const Vec& v, double rate) {
    JumpAtom a;
    a.u = u;
    a.v = v;
    a.rate = rate;
    s.jumps.atoms.push_back(std::move(a));
}

// scalar shorthand for one-asset/one-factor markets
inline void add_atom(FactorMarketSpec& s, double u, double v, double rate) {
    add_atom(s, vec({u}), vec({v}), rate);
}

// the worked constant-coefficient factor example: b^R=0.05, sigma^R=0.2,
// sigma^Y=0.3, c^{RY}=0.06
inline FactorMarketSpec bs_factor() { return market1(0.05, 0.04, 0.06, 0.09); }

// what fn() throws, as text; empty if it does not throw
template <class Fn>
inline std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

inline bool message_mentions(const std::string& msg, const std::string& needle) {
    return msg.find(needle) != std::string::npos;
}

} // namespace fipp::testing
