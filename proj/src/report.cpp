#include "fipp/report.hpp"

#include <cstdio>

namespace fipp::report {

using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

const char* status_name(OptimizeResult::Status s) {
    switch (s) {
    case OptimizeResult::Status::Ok: return "ok";
    case OptimizeResult::Status::NotAttained: return "not-attained";
    case OptimizeResult::Status::IterationLimit: return "iteration-limit";
    }
    return "ok";
}

const char* attainment_name(Attainment a) {
    switch (a) {
    case Attainment::Attained: return "attained";
    case Attainment::AttainedPolyhedral: return "attained-polyhedral";
    case Attainment::Inconclusive: return "inconclusive";
    }
    return "attained";
}

void flatten(const json& j, const std::string& prefix, std::string& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        std::size_t i = 0;
        for (const auto& el : j) {
            flatten(el, prefix + "[" + std::to_string(i) + "]", out);
            ++i;
        }
    } else {
        out += prefix;
        out += ',';
        if (j.is_number_float())
            out += fmt(j.get<double>());
        else
            out += j.dump();
        out += '\n';
    }
}

} // namespace

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json optimize_json(const OptimizeResult& r) {
    json j;
    j["status"] = status_name(r.status);
    j["pi_star"] = vec_json(r.pi_star);
    j["value"] = r.value;
    j["gap"] = r.gap;
    j["iterations"] = r.iterations;
    if (r.witness) j["witness"] = vec_json(*r.witness);
    return j;
}

json attainment_json(const AttainmentResult& r) {
    json j;
    j["status"] = attainment_name(r.status);
    if (r.witness) j["witness"] = vec_json(*r.witness);
    return j;
}

json validation_json(const ValidationReport& r) {
    json j;
    j["probes"] = r.probes.size();
    double min_eig = std::numeric_limits<double>::infinity();
    for (const auto& p : r.probes) min_eig = std::min(min_eig, p.min_eigenvalue);
    j["min_eigenvalue"] = r.probes.empty() ? 0.0 : min_eig;
    j["af_value"] = r.af_value;
    j["tail_atoms"] = r.tail_atoms;
    j["big_factor_atoms"] = r.big_factor_atoms;
    j["total_rate"] = r.total_rate;
    j["ok"] = true;
    return j;
}

json martingale_json(const MartingaleReport& r) {
    json j;
    j["u0"] = r.u0;
    j["mean"] = r.mean;
    j["se"] = r.se;
    j["z"] = r.z;
    j["excess_kurtosis"] = r.excess_kurtosis;
    j["n_paths"] = r.n_samples;
    j["absorbed"] = r.absorbed;
    j["antithetic"] = r.antithetic;
    j["verdict"] = verdict_name(r.verdict);
    return j;
}

json bsde_json(const ResidualStats& r) {
    json j;
    j["rms"] = r.rms;
    j["max"] = r.max_abs;
    j["per_path"] = r.per_path_rms;
    return j;
}

json hjb_json(const ResidualField& r) {
    json j;
    j["max_abs"] = r.max_abs;
    j["rms"] = r.rms;
    j["max_identity_gap"] = r.max_identity_gap;
    j["n_points"] = r.points.size();
    return j;
}

json artifact(const std::string& kind, const std::string& config_hash, std::uint64_t seed,
              json body) {
    body["schema"] = 1;
    body["kind"] = kind;
    body["config_hash"] = config_hash;
    body["seed"] = seed;
    return body;
}

std::string render_json(const json& j) { return j.dump(2) + "\n"; }

std::string render_csv(const json& j) {
    std::string out = "key,value\n";
    flatten(j, "", out);
    return out;
}

std::string bundle_csv(const PathBundle& b) {
    std::string out = "t,path_id";
    for (int i = 1; i <= b.d; ++i) out += ",Y_" + std::to_string(i);
    for (int i = 1; i <= b.n; ++i) out += ",dR_" + std::to_string(i);
    out += ",jump_flag\n";

    for (int path = 0; path < b.n_paths; ++path) {
        std::size_t cursor = 0;
        const auto& js = b.jumps[path];
        for (int k = 0; k <= b.steps; ++k) {
            out += fmt(b.dt * k);
            out += ',';
            out += std::to_string(path);
            const auto y = b.y_at(path, k);
            for (int i = 0; i < b.d; ++i) {
                out += ',';
                out += fmt(y[i]);
            }
            if (k == 0) {
                for (int i = 0; i < b.n; ++i) out += ",0";
                out += ",0\n";
                continue;
            }
            const auto dr = b.dRc_at(path, k - 1);
            for (int i = 0; i < b.n; ++i) {
                out += ',';
                out += fmt(dr[i]);
            }
            bool flag = false;
            while (cursor < js.size() && js[cursor].step == k - 1) {
                flag = true;
                ++cursor;
            }
            out += flag ? ",1\n" : ",0\n";
        }
    }
    return out;
}

std::string residual_csv(const ResidualField& f) {
    std::string out = "t";
    const Eigen::Index d = f.points.empty() ? 0 : f.points.front().y.size();
    for (Eigen::Index i = 1; i <= d; ++i) out += ",y_" + std::to_string(i);
    out += ",z,residual\n";
    for (std::size_t i = 0; i < f.points.size(); ++i) {
        const auto& p = f.points[i];
        out += fmt(p.t);
        for (Eigen::Index q = 0; q < d; ++q) {
            out += ',';
            out += fmt(p.y[q]);
        }
        out += ',';
        out += fmt(p.z);
        out += ',';
        out += fmt(f.residual[i]);
        out += '\n';
    }
    return out;
}

} // namespace fipp::report
