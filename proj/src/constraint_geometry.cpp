#include "fipp/constraint_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>

namespace fipp {

namespace {

constexpr double kTol = 1e-12;

double rel_tol(double scale) { return kTol * std::max(1.0, scale); }

// orthonormal kernel basis of A (columns), rank threshold relative to s_max
Mat kernel_basis(const Mat& A, int n) {
    if (A.rows() == 0) return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double thr = (s.size() ? s[0] : 0.0) * 1e-10 + 1e-14;
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s[i] > thr) ++rank;
    return svd.matrixV().rightCols(n - rank);
}

Mat range_basis(const Mat& A, int n) {
    if (A.rows() == 0) return Mat(n, 0);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double thr = (s.size() ? s[0] : 0.0) * 1e-10 + 1e-14;
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s[i] > thr) ++rank;
    return svd.matrixV().leftCols(rank);
}

Vec project_simplex_sum(const Vec& x, double s) {
    // projection onto {pi >= 0, 1'pi = s} (Held/Duchi threshold)
    std::vector<double> u(x.data(), x.data() + x.size());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    int rho = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        const double t = (cum - s) / static_cast<double>(i + 1);
        if (u[i] - t > 0) {
            rho = static_cast<int>(i + 1);
            theta = t;
        }
    }
    (void)rho;
    return (x.array() - theta).max(0.0).matrix();
}

} // namespace

ConstraintSet ConstraintSet::box(const Vec& lo, const Vec& hi) {
    ConstraintSet c;
    c.kind = ConstraintKind::Box;
    c.n = static_cast<int>(lo.size());
    c.lo = lo;
    c.hi = hi;
    return c;
}

ConstraintSet ConstraintSet::ball(const Vec& center, double radius) {
    ConstraintSet c;
    c.kind = ConstraintKind::Ball;
    c.n = static_cast<int>(center.size());
    c.center = center;
    c.radius = radius;
    return c;
}

ConstraintSet ConstraintSet::halfspaces(const Mat& A, const Vec& b, bool allow_unbounded) {
    ConstraintSet c;
    c.kind = ConstraintKind::Halfspaces;
    c.n = static_cast<int>(A.cols());
    c.A = A;
    c.b_rhs = b;
    c.allow_unbounded = allow_unbounded;
    return c;
}

ConstraintSet ConstraintSet::singleton_origin(int n) {
    ConstraintSet c;
    c.kind = ConstraintKind::SingletonOrigin;
    c.n = n;
    return c;
}

ConstraintSet ConstraintSet::simplex(int n, double scale) {
    ConstraintSet c;
    c.kind = ConstraintKind::Simplex;
    c.n = n;
    c.scale = scale;
    return c;
}

void validate_constraint(const ConstraintSet& C) {
    if (C.n <= 0) throw std::invalid_argument("constraint: dimension must be positive");
    switch (C.kind) {
    case ConstraintKind::Box:
        if (C.lo.size() != C.n || C.hi.size() != C.n)
            throw std::invalid_argument("constraint box: bound dimensions");
        if (!C.lo.allFinite() || !C.hi.allFinite())
            throw std::invalid_argument("constraint box: bounds must be finite");
        for (int i = 0; i < C.n; ++i) {
            if (C.lo[i] > C.hi[i]) throw std::invalid_argument("constraint box: lo > hi");
            if (C.lo[i] > 0.0 || C.hi[i] < 0.0)
                throw std::invalid_argument("constraint box: must contain the origin");
        }
        break;
    case ConstraintKind::Ball:
        if (C.center.size() != C.n) throw std::invalid_argument("constraint ball: center dimension");
        if (!(C.radius > 0.0)) throw std::invalid_argument("constraint ball: radius must be positive");
        if (C.center.norm() > C.radius)
            throw std::invalid_argument("constraint ball: must contain the origin");
        break;
    case ConstraintKind::Halfspaces: {
        if (C.A.cols() != C.n || C.A.rows() != C.b_rhs.size())
            throw std::invalid_argument("constraint halfspaces: shape mismatch");
        if (C.A.rows() > 16)
            throw std::invalid_argument("constraint halfspaces: at most 16 rows supported");
        if ((C.b_rhs.array() < 0.0).any())
            throw std::invalid_argument("constraint halfspaces: must contain the origin (b >= 0)");
        if (!C.allow_unbounded && !constraint_is_bounded(C))
            throw std::invalid_argument(
                "constraint halfspaces: unbounded set requires allow_unbounded");
        break;
    }
    case ConstraintKind::SingletonOrigin:
        break;
    case ConstraintKind::Simplex:
        if (!(C.scale > 0.0)) throw std::invalid_argument("constraint simplex: scale must be positive");
        break;
    }
}

bool constraint_is_polyhedral(const ConstraintSet& C) { return C.kind != ConstraintKind::Ball; }

Mat constraint_recession_rows(const ConstraintSet& C) {
    switch (C.kind) {
    case ConstraintKind::Box:
    case ConstraintKind::Ball:
    case ConstraintKind::SingletonOrigin:
    case ConstraintKind::Simplex:
        // bounded: recession cone {0}; encode as {x <= 0, -x <= 0}
        {
            Mat A(2 * C.n, C.n);
            A << Mat::Identity(C.n, C.n), -Mat::Identity(C.n, C.n);
            return A;
        }
    case ConstraintKind::Halfspaces:
        return C.A;
    }
    return Mat(0, C.n);
}

bool constraint_is_bounded(const ConstraintSet& C) {
    if (C.kind != ConstraintKind::Halfspaces) return true;
    const auto gen = cone_generators(C.A, C.n);
    return gen.lineality.empty() && gen.rays.empty();
}

Vec project(const ConstraintSet& C, const Vec& x) {
    switch (C.kind) {
    case ConstraintKind::Box:
        return x.cwiseMax(C.lo).cwiseMin(C.hi);
    case ConstraintKind::Ball: {
        const Vec dxv = x - C.center;
        const double r = dxv.norm();
        if (r <= C.radius) return x;
        return C.center + dxv * (C.radius / r);
    }
    case ConstraintKind::SingletonOrigin:
        return Vec::Zero(C.n);
    case ConstraintKind::Simplex: {
        Vec q = x.cwiseMax(0.0);
        if (q.sum() <= C.scale) return q;
        return project_simplex_sum(x, C.scale);
    }
    case ConstraintKind::Halfspaces: {
        // nearest point by enumerating candidate active sets; exact at the
        // row counts validate_constraint admits
        const int J = static_cast<int>(C.A.rows());
        const double bmax = J ? C.b_rhs.cwiseAbs().maxCoeff() : 0.0;
        const double feas_tol = rel_tol(x.norm() + bmax) * 100.0;
        Vec best;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::uint32_t mask = 0; mask < (1u << J); ++mask) {
            const int k = __builtin_popcount(mask);
            if (k > C.n) continue;
            Mat As(k, C.n);
            Vec bs(k);
            int r = 0;
            for (int j = 0; j < J; ++j)
                if (mask & (1u << j)) {
                    As.row(r) = C.A.row(j);
                    bs[r] = C.b_rhs[j];
                    ++r;
                }
            Vec cand;
            if (k == 0) {
                cand = x;
            } else {
                Eigen::CompleteOrthogonalDecomposition<Mat> cod(As * As.transpose());
                const Vec mu = cod.solve(As * x - bs);
                cand = x - As.transpose() * mu;
                if ((As * cand - bs).cwiseAbs().maxCoeff() > feas_tol) continue; // inconsistent set
            }
            if (((C.A * cand - C.b_rhs).array() > feas_tol).any()) continue;
            const double d2 = (cand - x).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = cand;
            }
        }
        if (!best.size()) throw std::runtime_error("project: halfspace set is empty");
        return best;
    }
    }
    throw std::logic_error("project: unknown constraint kind");
}

bool contains(const ConstraintSet& C, const Vec& x, double tol) {
    switch (C.kind) {
    case ConstraintKind::Box:
        return (x.array() >= C.lo.array() - tol).all() && (x.array() <= C.hi.array() + tol).all();
    case ConstraintKind::Ball:
        return (x - C.center).norm() <= C.radius + tol;
    case ConstraintKind::SingletonOrigin:
        return x.norm() <= tol;
    case ConstraintKind::Simplex:
        return (x.array() >= -tol).all() && x.sum() <= C.scale + tol;
    case ConstraintKind::Halfspaces:
        return ((C.A * x - C.b_rhs).array() <= tol).all();
    }
    return false;
}

bool budget_feasible(const LocalCharacteristics& ch, const Vec& pi) {
    for (const auto& a : ch.atoms) {
        if (a.rate <= 0.0) continue;
        if (1.0 + pi.dot(a.u) < 0.0) return false;
    }
    return true;
}

double recession_function(const LocalCharacteristics& ch, const Vec& pi) {
    const double inf = std::numeric_limits<double>::infinity();
    const double cscale = ch.cR.size() ? ch.cR.cwiseAbs().maxCoeff() : 0.0;
    if (ch.cR.size() && (ch.cR * pi).cwiseAbs().maxCoeff() > rel_tol(cscale * pi.norm()))
        return inf;
    Vec hF = Vec::Zero(pi.size());
    for (const auto& a : ch.atoms) {
        if (a.rate <= 0.0) continue;
        const double e = pi.dot(a.u);
        if (e < -rel_tol(pi.norm() * a.u.norm())) return inf; // downside jump mass
        if (a.u.norm() <= ch.truncation_radius) hF.noalias() += a.rate * a.u;
    }
    return pi.dot(hF - ch.b);
}

bool recession_cone_member(const LocalCharacteristics& ch, const Vec& pi) {
    const double v = recession_function(ch, pi);
    return std::isfinite(v) && v <= rel_tol(pi.norm() * (1.0 + ch.b.norm()));
}

bool null_investment_member(const LocalCharacteristics& ch, const Vec& pi) {
    const double s = pi.norm();
    const double cscale = ch.cR.size() ? ch.cR.cwiseAbs().maxCoeff() : 0.0;
    if (ch.cR.size() && (ch.cR * pi).cwiseAbs().maxCoeff() > rel_tol(cscale * s)) return false;
    for (const auto& a : ch.atoms)
        if (a.rate > 0.0 && std::abs(pi.dot(a.u)) > rel_tol(s * a.u.norm())) return false;
    return std::abs(pi.dot(ch.b)) <= rel_tol(s * (1.0 + ch.b.norm()));
}

ConeGenerators cone_generators(const Mat& A, int n) {
    ConeGenerators out;
    const Mat L = kernel_basis(A, n);
    for (int i = 0; i < L.cols(); ++i) out.lineality.push_back(L.col(i));
    const Mat Q = range_basis(A, n); // orthonormal basis of lineality-perp
    const int m = static_cast<int>(Q.cols());
    if (m == 0) return out;
    const Mat B = A * Q; // pointed cone {w in R^m : B w <= 0}

    auto try_direction = [&](const Vec& w) {
        const double s = w.norm();
        if (s < 1e-12) return;
        const Vec wn = w / s;
        const double tol = 1e-9 * std::max(1.0, B.cwiseAbs().maxCoeff());
        Vec cand;
        if (((B * wn).array() <= tol).all())
            cand = Q * wn;
        else if (((B * (-wn)).array() <= tol).all())
            cand = Q * (-wn);
        else
            return;
        for (const auto& r : out.rays)
            if (r.dot(cand) > 1.0 - 1e-9) return;
        out.rays.push_back(cand);
    };

    if (m == 1) {
        try_direction(Vec::Ones(1));
        Vec neg = -Vec::Ones(1);
        try_direction(neg);
        return out;
    }

    // every extreme ray solves m-1 linearly independent tight constraints
    const int J = static_cast<int>(B.rows());
    std::vector<int> idx(m - 1);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == m - 1) {
            Mat Bs(m - 1, m);
            for (int i = 0; i < m - 1; ++i) Bs.row(i) = B.row(idx[i]);
            const Mat K = kernel_basis(Bs, m);
            if (K.cols() != 1) return; // not rank m-1
            try_direction(K.col(0));
            return;
        }
        for (int j = start; j < J; ++j) {
            idx[depth] = j;
            rec(j + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

AttainmentResult attainment_check(const LocalCharacteristics& ch, const ConstraintSet& C) {
    AttainmentResult res;
    if (constraint_is_bounded(C)) {
        res.status = Attainment::Attained;
        return res;
    }
    const int n = static_cast<int>(ch.b.size());
    if (n > 8) throw std::invalid_argument("attainment_check: ray enumeration capped at n <= 8");

    // combined homogeneous system: recession cone of C, diffusion kernel,
    // no-downside-jump halfspaces, and the linear recession-slope condition
    std::vector<Vec> rows;
    const Mat Ac = constraint_recession_rows(C);
    for (int i = 0; i < Ac.rows(); ++i) rows.push_back(Ac.row(i).transpose());
    if (ch.cR.size())
        for (int i = 0; i < ch.cR.rows(); ++i) {
            rows.push_back(ch.cR.row(i).transpose());
            rows.push_back(-ch.cR.row(i).transpose());
        }
    Vec hF = Vec::Zero(n);
    for (const auto& a : ch.atoms) {
        if (a.rate <= 0.0) continue;
        rows.push_back(-a.u); // pi'u >= 0
        if (a.u.norm() <= ch.truncation_radius) hF.noalias() += a.rate * a.u;
    }
    rows.push_back(hF - ch.b); // pi'(h*F - b) <= 0

    Mat A(static_cast<int>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<int>(i)) = rows[i].transpose();

    const auto gen = cone_generators(A, n);
    std::vector<Vec> candidates;
    for (const auto& l : gen.lineality) {
        candidates.push_back(l);
        candidates.push_back(-l);
    }
    for (const auto& r : gen.rays) candidates.push_back(r);

    if (candidates.empty()) {
        res.status = Attainment::Attained;
        return res;
    }
    for (const auto& g : candidates) {
        if (!null_investment_member(ch, g)) {
            res.status = Attainment::Inconclusive;
            res.witness = g;
            return res;
        }
    }
    res.status = constraint_is_polyhedral(C) ? Attainment::AttainedPolyhedral
                                             : Attainment::Inconclusive;
    if (res.status == Attainment::Inconclusive) res.witness = candidates.front();
    return res;
}

} // namespace fipp
