#include "fipp/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace fipp {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config field " + path + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing");
    return *it;
}

bool has(const json& j, const char* key) { return j.is_object() && j.contains(key); }

double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double num_or(const json& j, const char* key, const std::string& path, double dflt) {
    return has(j, key) ? num(j[key], path + "." + key) : dflt;
}

std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Vec vec_of(const json& j, const std::string& path, Eigen::Index expect = -1) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = num(j[i], path + "[" + std::to_string(i) + "]");
    if (expect >= 0 && v.size() != expect)
        fail(path, "expected " + std::to_string(expect) + " entries, got " +
                       std::to_string(v.size()));
    return v;
}

Mat mat_of(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array()) fail(path, "expected an array of rows");
    if (static_cast<Eigen::Index>(j.size()) != rows)
        fail(path, "expected " + std::to_string(rows) + " rows, got " +
                       std::to_string(j.size()));
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Vec row = vec_of(j[static_cast<std::size_t>(r)],
                               path + "[" + std::to_string(r) + "]", cols);
        m.row(r) = row.transpose();
    }
    return m;
}

DriftFn drift_field(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index d,
                    bool& constant) {
    const std::string family = str(need(j, "family", path), path + ".family");
    if (family == "constant") {
        const Vec v = vec_of(need(j, "value", path), path + ".value", rows);
        return [v](double, const Vec&) { return v; };
    }
    if (family == "affine_drift") {
        const Vec base = vec_of(need(j, "base", path), path + ".base", rows);
        const Mat slope = mat_of(need(j, "slope", path), path + ".slope", rows, d);
        constant = false;
        return [base, slope](double, const Vec& y) -> Vec { return base + slope * y; };
    }
    fail(path + ".family", "unknown family '" + family +
                               "' (known: constant, affine_drift)");
}

CovFn cov_field(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
    const std::string family = str(need(j, "family", path), path + ".family");
    if (family == "constant_cov") {
        const Mat m = mat_of(need(j, "value", path), path + ".value", rows, cols);
        return [m](double, const Vec&) { return m; };
    }
    fail(path + ".family", "unknown family '" + family + "' (known: constant_cov)");
}

ConstraintSet parse_constraint(const json& j, const std::string& path, int n) {
    const std::string type = str(need(j, "type", path), path + ".type");
    try {
        if (type == "box")
            return ConstraintSet::box(vec_of(need(j, "lo", path), path + ".lo", n),
                                      vec_of(need(j, "hi", path), path + ".hi", n));
        if (type == "ball")
            return ConstraintSet::ball(
                vec_of(need(j, "center", path), path + ".center", n),
                num(need(j, "radius", path), path + ".radius"));
        if (type == "halfspaces") {
            const json& ja = need(j, "A", path);
            if (!ja.is_array()) fail(path + ".A", "expected an array of rows");
            const auto rows = static_cast<Eigen::Index>(ja.size());
            const Mat A = mat_of(ja, path + ".A", rows, n);
            const Vec b = vec_of(need(j, "b", path), path + ".b", rows);
            bool allow = false;
            if (has(j, "allow_unbounded")) {
                const json& jb = j["allow_unbounded"];
                if (!jb.is_boolean()) fail(path + ".allow_unbounded", "expected a boolean");
                allow = jb.get<bool>();
            }
            return ConstraintSet::halfspaces(A, b, allow);
        }
        if (type == "singleton_origin") return ConstraintSet::singleton_origin(n);
        if (type == "simplex")
            return ConstraintSet::simplex(n, num_or(j, "scale", path, 1.0));
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    fail(path + ".type", "unknown type '" + type +
                             "' (known: box, ball, halfspaces, singleton_origin, simplex)");
}

} // namespace

Experiment parse_experiment(const json& j) {
    Experiment e;

    const json& jm = need(j, "market", "");
    const double nd = num(need(jm, "n", "market"), "market.n");
    const double dd = num(need(jm, "d", "market"), "market.d");
    if (nd < 1 || nd != std::floor(nd)) fail("market.n", "expected a positive integer");
    if (dd < 1 || dd != std::floor(dd)) fail("market.d", "expected a positive integer");
    const int n = static_cast<int>(nd);
    const int d = static_cast<int>(dd);
    e.market.n = n;
    e.market.d = d;
    e.market.y0 = vec_of(need(jm, "y0", "market"), "market.y0", d);
    e.market.truncation_radius = num_or(jm, "truncation_radius", "market", 1.0);
    if (!(e.market.truncation_radius > 0.0))
        fail("market.truncation_radius", "must be positive");

    bool constant = true;
    e.market.drift_R = drift_field(need(jm, "drift_R", "market"), "market.drift_R", n, d,
                                   constant);
    e.market.drift_Y = drift_field(need(jm, "drift_Y", "market"), "market.drift_Y", d, d,
                                   constant);
    e.market.cov_R = cov_field(need(jm, "cov_R", "market"), "market.cov_R", n, n);
    e.market.cov_RY = cov_field(need(jm, "cov_RY", "market"), "market.cov_RY", n, d);
    e.market.cov_Y = cov_field(need(jm, "cov_Y", "market"), "market.cov_Y", d, d);
    e.market.constant_coefficients = constant;

    if (has(jm, "jumps")) {
        const json& jj = jm["jumps"];
        if (!jj.is_array()) fail("market.jumps", "expected an array");
        for (std::size_t k = 0; k < jj.size(); ++k) {
            const std::string path = "market.jumps[" + std::to_string(k) + "]";
            JumpAtom a;
            a.u = vec_of(need(jj[k], "u", path), path + ".u", n);
            a.v = vec_of(need(jj[k], "v", path), path + ".v", d);
            a.rate = num(need(jj[k], "rate", path), path + ".rate");
            if (!(a.rate >= 0.0) || !std::isfinite(a.rate)) fail(path + ".rate", "must be a finite nonnegative number");
            e.market.jumps.atoms.push_back(std::move(a));
        }
    }

    e.constraint = parse_constraint(need(j, "constraint", ""), "constraint", n);
    try {
        validate_constraint(e.constraint);
    } catch (const std::invalid_argument& ex) {
        fail("constraint", ex.what());
    }

    const json& jp = need(j, "power", "");
    e.power.p = num(need(jp, "p", "power"), "power.p");
    if (!(e.power.p < 1.0) || e.power.p == 0.0)
        fail("power.p", "must lie in (-inf, 0) or (0, 1)");
    e.power.D0 = num_or(jp, "D0", "power", 0.0);

    if (has(j, "tilt"))
        e.tilt.sigma = vec_of(need(j["tilt"], "sigma", "tilt"), "tilt.sigma", d);
    else
        e.tilt.sigma = Vec::Zero(d);

    e.sim = MartingaleParams{};
    if (has(j, "sim")) {
        const json& js = j["sim"];
        e.sim.T = num_or(js, "T", "sim", 1.0);
        e.sim.dt = num_or(js, "dt", "sim", 0.01);
        e.sim.x0 = num_or(js, "x0", "sim", 1.0);
        const double np = num_or(js, "n_paths", "sim", 100000.0);
        if (np < 1 || np != std::floor(np)) fail("sim.n_paths", "expected a positive integer");
        e.sim.n_paths = static_cast<std::size_t>(np);
        const double sd = num_or(js, "seed", "sim", 1.0);
        if (sd < 0 || sd != std::floor(sd)) fail("sim.seed", "expected a nonnegative integer");
        e.sim.seed = static_cast<std::uint64_t>(sd);
        const double rf = num_or(js, "refine", "sim", 1.0);
        if (rf < 1 || rf != std::floor(rf)) fail("sim.refine", "expected a positive integer");
        e.sim.refine = static_cast<int>(rf);
        if (has(js, "antithetic")) {
            const json& jb = js["antithetic"];
            if (!jb.is_boolean()) fail("sim.antithetic", "expected a boolean");
            e.sim.antithetic = jb.get<bool>();
        }
        if (!(e.sim.T > 0.0)) fail("sim.T", "must be positive");
        if (!(e.sim.dt > 0.0)) fail("sim.dt", "must be positive");
        if (!(e.sim.x0 > 0.0)) fail("sim.x0", "must be positive");
    }
    return e;
}

Experiment load_experiment(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: parse error in '" + path + "': " + e.what());
    }
    Experiment e = parse_experiment(j);
    e.config_hash = hash_hex(fnv1a64(bytes));
    return e;
}

SimParams to_sim_params(const Experiment& e) {
    SimParams sp;
    sp.T = e.sim.T;
    sp.dt = e.sim.dt;
    sp.n_paths = static_cast<int>(e.sim.n_paths);
    sp.seed = e.sim.seed;
    sp.refine = e.sim.refine;
    return sp;
}

} // namespace fipp
