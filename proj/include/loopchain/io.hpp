#pragma once

// Result serialization. Every CSV starts with "#! key = value" lines and every JSON
// document carries a "config" object, so any output file can be fed back as a config.

#include "bounds.hpp"
#include "config.hpp"
#include "enumeration.hpp"
#include "sampler.hpp"

#include <json.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

namespace loopchain {

using json = nlohmann::ordered_json;

inline void write_csv_config(std::ostream& os, const RunConfig& c) {
    for (const auto& [k, v] : config_pairs(c)) os << "#! " << k << " = " << v << '\n';
}

inline json config_json(const RunConfig& c) {
    json j = json::object();
    for (const auto& [k, v] : config_pairs(c)) j[k] = v;
    return j;
}

/// Config text embedded in a result file (JSON or CSV); plain config text passes through.
inline std::string extract_config(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::invalid_config, std::string("unreadable JSON: ") + e.what());
        }
        if (!doc.contains("config") || !doc["config"].is_object()) {
            throw Error(ErrorKind::invalid_config, "JSON document has no config object");
        }
        std::string out;
        for (const auto& [k, v] : doc["config"].items()) out += k + " = " + v.get<std::string>() + "\n";
        return out;
    }
    if (text.rfind("#! ", 0) == 0) {
        std::istringstream is(text);
        std::string line, out;
        while (std::getline(is, line) && line.rfind("#! ", 0) == 0) out += line.substr(3) + "\n";
        return out;
    }
    return text;
}

inline json to_json(const Estimate& e) {
    return json{{"mean", e.mean}, {"error", e.error}, {"tau_int", e.tau_int}, {"count", e.count}};
}

inline json to_json(const MoveStats& m) {
    return json{{"insert_proposed", m.insert_proposed}, {"insert_accepted", m.insert_accepted},
                {"insert_blocked", m.insert_blocked},   {"delete_proposed", m.delete_proposed},
                {"delete_accepted", m.delete_accepted}, {"delete_empty", m.delete_empty},
                {"loop_walks", m.loop_walks}};
}

inline json to_json(const RunResult& r, const RunConfig& c) {
    json j;
    j["config"] = config_json(c);
    j["provenance"] = {{"version", r.version}, {"seed", r.params.seed}, {"chains", r.chains},
                       {"measurements", r.measurements}};
    j["moves"] = to_json(r.moves);
    if (r.audit.transitions > 0) {
        j["audit"] = {{"transitions", r.audit.transitions}, {"max_residual", r.audit.max_residual}};
    }
    json est = json::object();
    for (const auto& [name, e] : r.estimates) est[name] = to_json(e);
    j["estimates"] = est;
    return j;
}

inline void write_estimates_csv(std::ostream& os, const RunResult& r, const RunConfig& c) {
    write_csv_config(os, c);
    os << "observable,mean,error,tau_int,count\n";
    os << std::setprecision(17);
    for (const auto& [name, e] : r.estimates) {
        os << '"' << name << "\"," << e.mean << ',' << e.error << ',' << e.tau_int << ',' << e.count << '\n';
    }
}

inline void write_trace_csv(std::ostream& os, const RunResult& r, const RunConfig& c) {
    write_csv_config(os, c);
    os << "observable,sweep,value\n";
    for (std::size_t chain = 0; chain < r.traces.size(); ++chain) {
        const std::string tag = "[chain=" + std::to_string(chain) + "]";
        for (const auto& p : r.traces[chain]) {
            os << "loops" << tag << ',' << p.sweep << ',' << p.loops << '\n';
            os << "bars" << tag << ',' << p.sweep << ',' << p.bars << '\n';
            os << "omega_any" << tag << ',' << p.sweep << ',' << p.omega_any << '\n';
        }
    }
}

inline json to_json(const ExactResult& r, const RunConfig& c, const std::string& method) {
    json j;
    j["config"] = config_json(c);
    j["method"] = method;
    j["Z"] = static_cast<double>(r.Z);
    j["n_configs"] = static_cast<double>(r.n_configs);
    json ev = json::object();
    for (const auto& [name, p] : r.event_probabilities) ev[name] = static_cast<double>(p);
    j["event_probabilities"] = ev;
    return j;
}

inline void write_bounds_csv(std::ostream& os, const std::vector<BoundReport>& rows, const RunConfig& c) {
    write_csv_config(os, c);
    os << "S,q,peierls_bound,c_of_S,eta_min\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.S << ',' << r.q << ',';
        if (r.series_convergent) {
            os << *r.peierls_bound << ',' << *r.c_of_S << ',' << *r.eta_min << '\n';
        } else {
            os << "divergent,divergent,divergent\n";
        }
    }
}

inline json to_json(const std::vector<BoundReport>& rows, const RunConfig& c) {
    json j;
    j["config"] = config_json(c);
    json arr = json::array();
    for (const auto& r : rows) {
        json row{{"S", r.S}, {"q", r.q}, {"series_convergent", r.series_convergent}};
        if (r.series_convergent) {
            row["peierls_bound"] = *r.peierls_bound;
            row["five_bar"] = r.pieces->five_bar;
            row["six_bar"] = r.pieces->six_bar;
            row["tail"] = r.pieces->tail;
            row["c_of_S"] = *r.c_of_S;
            row["eta_min"] = *r.eta_min;
        } else {
            row["peierls_bound"] = "divergent";
        }
        arr.push_back(row);
    }
    j["bounds"] = arr;
    j["threshold"] = dimerization_threshold();
    return j;
}

}  // namespace loopchain
