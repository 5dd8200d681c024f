#include "quadcone/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "quadcone/types.hpp"

namespace qc {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> k{"system",  "seed",    "threads",  "out",     "delta",        "r",
                                         "R",       "sigma",   "K",        "N",       "s",            "t",
                                         "xi",      "ensemble", "resolution", "modes", "t_nodes",     "quadrature_n",
                                         "grid",    "samples", "budget",   "conical", "force",        "method",
                                         "tolerances"};
    return k;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

std::vector<double> sweep(const json& v, const std::string& field) {
    if (!v.is_array()) fail(field, "expected a list of numbers");
    if (v.empty()) fail(field, "sweep list is empty");
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(field + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::int64_t integer(const json& v, const std::string& field, std::int64_t lo) {
    std::int64_t x = 0;
    if (v.is_number_integer())
        x = v.get<std::int64_t>();
    else if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<std::int64_t>(v.get<double>())))
        x = static_cast<std::int64_t>(v.get<double>());
    else
        fail(field, "expected an integer");
    if (x < lo) fail(field, "must be at least " + std::to_string(lo));
    return x;
}

double positive(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!(x > 0)) fail(field, "must be positive");
    return x;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known_keys().count(it.key())) fail(it.key(), "unknown key");
    ExperimentConfig c;
    if (j.contains("system")) {
        const auto& s = j["system"];
        if (!s.is_string() && !s.is_object()) fail("system", "expected a catalog name or an inline object");
        c.system = s;
    }
    if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(integer(j["seed"], "seed", 0));
    if (j.contains("threads")) c.threads = static_cast<int>(integer(j["threads"], "threads", 0));
    if (j.contains("out")) {
        if (!j["out"].is_string()) fail("out", "expected a path");
        c.out = j["out"].get<std::string>();
    }
    auto sw = [&](const char* key, std::optional<std::vector<double>>& dst) {
        if (j.contains(key)) dst = sweep(j[key], key);
    };
    sw("delta", c.delta);
    sw("r", c.r);
    sw("R", c.R);
    sw("sigma", c.sigma);
    sw("K", c.K);
    sw("N", c.N);
    sw("s", c.s);
    sw("t", c.t);
    sw("xi", c.xi);
    auto in = [&](const char* key, std::optional<int>& dst, int lo) {
        if (j.contains(key)) dst = static_cast<int>(integer(j[key], key, lo));
    };
    in("ensemble", c.ensemble, 1);
    in("resolution", c.resolution, 2);
    in("modes", c.modes, 1);
    in("t_nodes", c.t_nodes, 1);
    in("quadrature_n", c.quadrature_n, 0);
    in("grid", c.grid, 2);
    if (j.contains("samples")) c.samples = integer(j["samples"], "samples", 1);
    if (j.contains("budget")) c.budget = integer(j["budget"], "budget", 1);
    auto bo = [&](const char* key, std::optional<bool>& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_boolean()) fail(key, "expected true or false");
        dst = j[key].get<bool>();
    };
    bo("conical", c.conical);
    bo("force", c.force);
    if (j.contains("method")) {
        if (!j["method"].is_string()) fail("method", "expected \"exact\" or \"monte-carlo\"");
        const auto m = j["method"].get<std::string>();
        if (m != "exact" && m != "monte-carlo") fail("method", "expected \"exact\" or \"monte-carlo\"");
        c.method = m;
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        if (!t.is_object()) fail("tolerances", "expected an object");
        for (auto it = t.begin(); it != t.end(); ++it) {
            const std::string f = "tolerances." + it.key();
            if (it.key() == "D")
                c.tol.D = positive(*it, f);
            else if (it.key() == "E")
                c.tol.E = positive(*it, f);
            else if (it.key() == "dilate")
                c.tol.dilate = positive(*it, f);
            else if (it.key() == "tolerance_multiplier")
                c.tol.tolerance_multiplier = positive(*it, f);
            else if (it.key() == "rho")
                c.tol.rho = positive(*it, f);
            else
                fail(f, "unknown key");
        }
    }
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    if (!system.is_null()) j["system"] = system;
    j["seed"] = seed;
    j["threads"] = threads;
    if (!out.empty()) j["out"] = out;
    auto put = [&](const char* k, const auto& v) {
        if (v) j[k] = *v;
    };
    put("delta", delta);
    put("r", r);
    put("R", R);
    put("sigma", sigma);
    put("K", K);
    put("N", N);
    put("s", s);
    put("t", t);
    put("xi", xi);
    put("ensemble", ensemble);
    put("resolution", resolution);
    put("modes", modes);
    put("t_nodes", t_nodes);
    put("quadrature_n", quadrature_n);
    put("grid", grid);
    put("samples", samples);
    put("budget", budget);
    put("conical", conical);
    put("force", force);
    put("method", method);
    j["tolerances"] = {{"D", tol.D},
                       {"E", tol.E},
                       {"dilate", tol.dilate},
                       {"tolerance_multiplier", tol.tolerance_multiplier},
                       {"rho", tol.rho}};
    return j;
}

json parse_config_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        size_t line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what());
    }
}

json load_config_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace qc
