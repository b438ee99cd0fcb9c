#pragma once

// Flat "key = value" run configuration.

#include "error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace loopchain {

struct SGrid {
    double min = 8.0, max = 100.0, step = 0.5;
};

struct RunConfig {
    std::string command;
    int twice_S = 1;
    int ell = 1;
    int beta = 1;
    int n = 4;
    std::uint64_t seed = 1;
    long n_sweeps = 10000;
    long n_burnin = 1000;
    int measure_every = 1;
    double p_insert = 0.5;
    int chains = 1;
    std::string init = "empty";
    bool trace = false;
    bool audit = false;
    double budget = 1e8;
    long dense_budget = 4096;
    std::optional<double> beta_q;  // defaults to 2 beta
    SGrid S_grid;
    std::string events;
    std::string method = "auto";
    std::string output_dir = ".";
    std::string format = "json";
    std::string profile = "full";
    std::string inject_fault = "none";

    int q() const { return twice_S + 1; }
    double quantum_beta() const { return beta_q ? *beta_q : 2.0 * beta; }
};

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "command", "twice_S", "ell", "beta", "n", "seed", "n_sweeps", "n_burnin", "measure_every",
        "p_insert", "chains", "init", "trace", "audit", "budget", "dense_budget", "beta_q", "S_grid",
        "events", "method", "output_dir", "format", "profile", "inject_fault"};
    return keys;
}

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"simulate", "enumerate", "ed", "contours", "bounds", "verify"};
    return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& s, T& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline bool parse_real(const std::string& s, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

inline bool one_of(const std::string& v, std::initializer_list<const char*> options) {
    for (const char* o : options) {
        if (v == o) return true;
    }
    return false;
}

inline std::string format_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

/// Raw key/value map from text; syntax errors, unknown and repeated keys go to `errors`.
inline std::map<std::string, std::string> parse_pairs(const std::string& text, std::vector<std::string>& errors) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    const auto& keys = config_keys();
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            continue;
        }
        if (out.count(key)) {
            errors.push_back("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
            continue;
        }
        out[key] = value;
    }
    return out;
}

/// Typed and range-checked config; every problem is appended to `errors`.
inline RunConfig build_config(const std::map<std::string, std::string>& pairs, std::vector<std::string>& errors) {
    RunConfig c;
    auto get = [&](const char* key) -> const std::string* {
        auto it = pairs.find(key);
        return it == pairs.end() ? nullptr : &it->second;
    };
    auto integer = [&](const char* key, auto& field, long lo, const char* what) {
        if (const auto* v = get(key)) {
            long long x = 0;
            if (!detail::parse_number(*v, x)) {
                errors.push_back(std::string(key) + ": expected an integer, got '" + *v + "'");
                return;
            }
            if (x < lo) {
                errors.push_back(std::string(key) + ": " + what);
                return;
            }
            field = static_cast<std::decay_t<decltype(field)>>(x);
        }
    };
    auto real = [&](const char* key, double& field) {
        if (const auto* v = get(key)) {
            if (!detail::parse_real(*v, field)) errors.push_back(std::string(key) + ": expected a number, got '" + *v + "'");
        }
    };
    auto boolean = [&](const char* key, bool& field) {
        if (const auto* v = get(key)) {
            if (detail::one_of(*v, {"true", "1", "yes"})) {
                field = true;
            } else if (detail::one_of(*v, {"false", "0", "no"})) {
                field = false;
            } else {
                errors.push_back(std::string(key) + ": expected true or false, got '" + *v + "'");
            }
        }
    };
    auto choice = [&](const char* key, std::string& field, std::initializer_list<const char*> options) {
        if (const auto* v = get(key)) {
            if (!detail::one_of(*v, options)) {
                std::string list;
                for (const char* o : options) list += std::string(list.empty() ? "" : ", ") + o;
                errors.push_back(std::string(key) + ": must be one of " + list + ", got '" + *v + "'");
                return;
            }
            field = *v;
        }
    };

    if (const auto* v = get("command"); v && !v->empty()) {
        const auto& cs = commands();
        if (std::find(cs.begin(), cs.end(), *v) == cs.end()) {
            errors.push_back("command: unknown command '" + *v + "'");
        } else {
            c.command = *v;
        }
    }
    integer("twice_S", c.twice_S, 1, "twice_S must be a positive integer");
    integer("ell", c.ell, 1, "ell must be a positive integer");
    integer("beta", c.beta, 1, "beta must be a positive integer");
    integer("n", c.n, 1, "n must be a positive integer");
    if (const auto* v = get("seed")) {
        if (!detail::parse_number(*v, c.seed)) errors.push_back("seed: expected an unsigned 64-bit integer, got '" + *v + "'");
    }
    integer("n_sweeps", c.n_sweeps, 1, "n_sweeps must be positive");
    integer("n_burnin", c.n_burnin, 0, "n_burnin must be nonnegative");
    integer("measure_every", c.measure_every, 1, "measure_every must be positive");
    real("p_insert", c.p_insert);
    if (get("p_insert") && !(c.p_insert > 0.0 && c.p_insert < 1.0)) errors.push_back("p_insert: must lie in (0, 1)");
    integer("chains", c.chains, 1, "chains must be positive");
    choice("init", c.init, {"empty", "dimer"});
    boolean("trace", c.trace);
    boolean("audit", c.audit);
    real("budget", c.budget);
    if (get("budget") && !(c.budget >= 1.0)) errors.push_back("budget: must be >= 1");
    integer("dense_budget", c.dense_budget, 1, "dense_budget must be positive");
    if (const auto* v = get("beta_q")) {
        double b = 0.0;
        if (!detail::parse_real(*v, b)) {
            errors.push_back("beta_q: expected a number, got '" + *v + "'");
        } else if (b < 0.0) {
            errors.push_back("beta_q: must be nonnegative");
        } else {
            c.beta_q = b;
        }
    }
    if (const auto* v = get("S_grid")) {
        std::vector<std::string> parts;
        std::stringstream ss(*v);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(detail::trim(p));
        SGrid g;
        if (parts.size() != 3 || !detail::parse_real(parts[0], g.min) || !detail::parse_real(parts[1], g.max) ||
            !detail::parse_real(parts[2], g.step)) {
            errors.push_back("S_grid: expected min:max:step, got '" + *v + "'");
        } else if (!(g.min > 0.0) || g.max < g.min || !(g.step > 0.0)) {
            errors.push_back("S_grid: need 0 < min <= max and step > 0");
        } else {
            c.S_grid = g;
        }
    }
    if (const auto* v = get("events")) c.events = *v;
    choice("method", c.method, {"auto", "dfs", "transfer"});
    if (const auto* v = get("output_dir")) c.output_dir = *v;
    choice("format", c.format, {"csv", "json", "both"});
    choice("profile", c.profile, {"full", "quick"});
    choice("inject_fault", c.inject_fault, {"none", "singlet-projector"});
    if (c.n_burnin >= c.n_sweeps) errors.push_back("n_burnin: must be smaller than n_sweeps");
    return c;
}

struct ConfigParse {
    RunConfig config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

/// Parses text, then applies `overrides` (flag values) on top of the file's keys.
inline ConfigParse parse_config(const std::string& text, const std::map<std::string, std::string>& overrides = {}) {
    ConfigParse out;
    auto pairs = parse_pairs(text, out.errors);
    const auto& keys = config_keys();
    for (const auto& [k, v] : overrides) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            out.errors.push_back("unknown key '" + k + "'");
            continue;
        }
        pairs[k] = v;
    }
    out.config = build_config(pairs, out.errors);
    return out;
}

/// Throwing variant: all errors joined into one invalid-config message.
inline RunConfig load_config(const std::string& text, const std::map<std::string, std::string>& overrides = {}) {
    auto p = parse_config(text, overrides);
    if (!p.ok()) {
        std::string msg;
        for (const auto& e : p.errors) msg += (msg.empty() ? "" : "; ") + e;
        throw Error(ErrorKind::invalid_config, msg);
    }
    return p.config;
}

/// Canonical key/value listing of every field, in config_keys() order.
inline std::vector<std::pair<std::string, std::string>> config_pairs(const RunConfig& c) {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    std::vector<std::pair<std::string, std::string>> out = {
        {"command", c.command},
        {"twice_S", std::to_string(c.twice_S)},
        {"ell", std::to_string(c.ell)},
        {"beta", std::to_string(c.beta)},
        {"n", std::to_string(c.n)},
        {"seed", std::to_string(c.seed)},
        {"n_sweeps", std::to_string(c.n_sweeps)},
        {"n_burnin", std::to_string(c.n_burnin)},
        {"measure_every", std::to_string(c.measure_every)},
        {"p_insert", detail::format_real(c.p_insert)},
        {"chains", std::to_string(c.chains)},
        {"init", c.init},
        {"trace", b(c.trace)},
        {"audit", b(c.audit)},
        {"budget", detail::format_real(c.budget)},
        {"dense_budget", std::to_string(c.dense_budget)},
        {"beta_q", detail::format_real(c.quantum_beta())},
        {"S_grid", detail::format_real(c.S_grid.min) + ":" + detail::format_real(c.S_grid.max) + ":" +
                       detail::format_real(c.S_grid.step)},
        {"events", c.events},
        {"method", c.method},
        {"output_dir", c.output_dir},
        {"format", c.format},
        {"profile", c.profile},
        {"inject_fault", c.inject_fault},
    };
    return out;
}

inline std::string config_text(const RunConfig& c) {
    std::string s;
    for (const auto& [k, v] : config_pairs(c)) s += k + " = " + v + "\n";
    return s;
}

}  // namespace loopchain
