#pragma once

// Problem-file parsing and report serialization for the CLI. Problem files
// are versioned JSON with matrices as nested row-major arrays; unknown keys
// are rejected with their full key path. Reports are written atomically and
// are byte-stable across reruns except for the timing field.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "teamlq/core.hpp"
#include "teamlq/linalg.hpp"

namespace teamlq::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "teamlq";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kSchemaVersion = "1";

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), key_path(path) {}
    std::string key_path;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

// content hash for report provenance
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a:") + buf;
}

namespace detail {

inline void check_keys(const json& obj, const std::vector<std::string>& allowed,
                       const std::string& path) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const auto& a : allowed)
            if (item.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ParseError(path + "/" + item.key(), "unknown field");
    }
}

inline double number_at(const json& j, const std::string& path) {
    if (!j.is_number()) throw ParseError(path, "expected a number");
    return j.get<double>();
}

}  // namespace detail

inline Mat mat_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ParseError(path, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    if (!j[0].is_array()) throw ParseError(path + "[0]", "expected an array row");
    const std::size_t cols = j[0].size();
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const json& row = j[i];
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!row.is_array()) throw ParseError(rp, "expected an array row");
        if (row.size() != cols) throw ParseError(rp, "row length differs from the first row");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = detail::number_at(row[c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

inline json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline QuadraticForm form_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object with q, s, r");
    detail::check_keys(j, {"q", "s", "r"}, path);
    for (const char* key : {"q", "s", "r"})
        if (!j.contains(key)) throw ParseError(path + "/" + key, "missing field");
    try {
        return QuadraticForm(mat_from_json(j["q"], path + "/q"), mat_from_json(j["s"], path + "/s"),
                             mat_from_json(j["r"], path + "/r"));
    } catch (const std::invalid_argument& e) {
        throw ParseError(path, e.what());
    }
}

inline json form_to_json(const QuadraticForm& f) {
    json j;
    j["q"] = mat_to_json(f.q);
    j["s"] = mat_to_json(f.s);
    j["r"] = mat_to_json(f.r);
    return j;
}

inline TeamProblem problem_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("", "expected a JSON object");
    detail::check_keys(j, {"schema_version", "mode", "objective", "constraints", "info", "stats"}, "");
    if (!j.contains("schema_version") || !j["schema_version"].is_string())
        throw ParseError("/schema_version", "missing or not a string");
    if (j["schema_version"].get<std::string>() != kSchemaVersion)
        throw ParseError("/schema_version", "unsupported schema version");

    TeamProblem p;
    if (!j.contains("mode") || !j["mode"].is_string()) throw ParseError("/mode", "missing or not a string");
    const std::string mode = j["mode"].get<std::string>();
    if (mode == "gaussian")
        p.mode = Mode::gaussian;
    else if (mode == "minimax")
        p.mode = Mode::minimax;
    else
        throw ParseError("/mode", "expected \"gaussian\" or \"minimax\"");

    if (!j.contains("objective")) throw ParseError("/objective", "missing field");
    p.objective = form_from_json(j["objective"], "/objective");

    if (j.contains("constraints")) {
        if (!j["constraints"].is_array()) throw ParseError("/constraints", "expected an array");
        std::size_t idx = 0;
        for (const json& cj : j["constraints"]) {
            const std::string path = "/constraints[" + std::to_string(idx) + "]";
            if (!cj.is_object()) throw ParseError(path, "expected an object");
            detail::check_keys(cj, {"form", "bound"}, path);
            if (!cj.contains("form")) throw ParseError(path + "/form", "missing field");
            if (!cj.contains("bound")) throw ParseError(path + "/bound", "missing field");
            Constraint c;
            c.form = form_from_json(cj["form"], path + "/form");
            c.bound = detail::number_at(cj["bound"], path + "/bound");
            p.constraints.push_back(std::move(c));
            ++idx;
        }
    }

    if (!j.contains("info") || !j["info"].is_object()) throw ParseError("/info", "missing or not an object");
    detail::check_keys(j["info"], {"decision_dims", "measurement_maps"}, "/info");
    const json& info = j["info"];
    if (!info.contains("decision_dims") || !info["decision_dims"].is_array())
        throw ParseError("/info/decision_dims", "missing or not an array");
    for (const json& d : info["decision_dims"]) {
        if (!d.is_number_integer() || d.get<long long>() < 1)
            throw ParseError("/info/decision_dims", "entries must be positive integers");
        p.info.decision_dims.push_back(static_cast<std::size_t>(d.get<long long>()));
    }
    if (!info.contains("measurement_maps") || !info["measurement_maps"].is_array())
        throw ParseError("/info/measurement_maps", "missing or not an array");
    std::size_t ci = 0;
    for (const json& cj : info["measurement_maps"]) {
        p.info.measurement_maps.push_back(
            mat_from_json(cj, "/info/measurement_maps[" + std::to_string(ci) + "]"));
        ++ci;
    }

    if (j.contains("stats")) {
        const json& st = j["stats"];
        if (!st.is_object()) throw ParseError("/stats", "expected an object");
        detail::check_keys(st, {"state_cov", "noise_cov"}, "/stats");
        if (!st.contains("state_cov")) throw ParseError("/stats/state_cov", "missing field");
        GaussianStatistics stats;
        stats.state_cov = mat_from_json(st["state_cov"], "/stats/state_cov");
        if (st.contains("noise_cov")) stats.noise_cov = mat_from_json(st["noise_cov"], "/stats/noise_cov");
        p.stats = stats;
    }
    return p;
}

inline TeamProblem load_problem(const std::string& path, std::string* digest = nullptr) {
    const std::string bytes = read_file(path);
    if (digest) *digest = fnv1a_hex(bytes);
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    return problem_from_json(j);
}

inline json problem_to_json(const TeamProblem& p) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["mode"] = p.mode == Mode::gaussian ? "gaussian" : "minimax";
    j["objective"] = form_to_json(p.objective);
    if (!p.constraints.empty()) {
        json cs = json::array();
        for (const auto& c : p.constraints) {
            json cj;
            cj["form"] = form_to_json(c.form);
            cj["bound"] = c.bound;
            cs.push_back(std::move(cj));
        }
        j["constraints"] = std::move(cs);
    }
    json info;
    info["decision_dims"] = p.info.decision_dims;
    json maps = json::array();
    for (const Mat& c : p.info.measurement_maps) maps.push_back(mat_to_json(c));
    info["measurement_maps"] = std::move(maps);
    j["info"] = std::move(info);
    if (p.stats) {
        json st;
        st["state_cov"] = mat_to_json(p.stats->state_cov);
        if (!p.stats->noise_cov.empty()) st["noise_cov"] = mat_to_json(p.stats->noise_cov);
        j["stats"] = std::move(st);
    }
    return j;
}

inline json gain_to_json(const DecisionGain& g) {
    json blocks = json::array();
    for (const Mat& b : g.blocks) blocks.push_back(mat_to_json(b));
    return blocks;
}

inline DecisionGain gain_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path, "expected an array of gain blocks");
    DecisionGain g;
    std::size_t i = 0;
    for (const json& b : j) {
        g.blocks.push_back(mat_from_json(b, path + "[" + std::to_string(i) + "]"));
        ++i;
    }
    return g;
}

}  // namespace teamlq::io
