#pragma once

// Subcommand drivers shared by the command-line tool and its tests.

#include "bounds.hpp"
#include "config.hpp"
#include "contours.hpp"
#include "ed.hpp"
#include "enumeration.hpp"
#include "io.hpp"
#include "sampler.hpp"
#include "verify.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <regex>
#include <string>
#include <vector>

namespace loopchain {

enum ExitCode : int { exit_ok = 0, exit_verify_failed = 1, exit_usage = 2, exit_runtime = 3 };

class FilesystemError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline SamplerParams sampler_params(const RunConfig& c) {
    SamplerParams p;
    p.geometry = ChainGeometry(c.ell);
    p.grid = TimeGrid(c.beta, c.n);
    p.q = c.q();
    p.n_sweeps = c.n_sweeps;
    p.n_burnin = c.n_burnin;
    p.measure_every = c.measure_every;
    p.seed = c.seed;
    p.p_insert = c.p_insert;
    p.init = c.init == "dimer" ? InitKind::dimer : InitKind::empty;
    return p;
}

/// Event list such as "conn(-1,0); surround(0); no_winding; omega(0); omega_any; empty".
inline std::vector<Event> parse_events(const std::string& text, const ChainGeometry& geo, const TimeGrid& grid) {
    std::vector<Event> out;
    static const std::regex conn(R"(conn\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\))");
    static const std::regex surround(R"(surround\(\s*(-?\d+)\s*\))");
    static const std::regex omega(R"(omega\(\s*(-?\d+)\s*\))");
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ';');) {
        item = detail::trim(item);
        if (item.empty()) continue;
        std::smatch m;
        if (std::regex_match(item, m, conn)) {
            out.push_back(Event::connected(geo, std::stoi(m[1]), std::stoi(m[2])));
        } else if (std::regex_match(item, m, surround)) {
            out.push_back(Event::surrounded(geo, std::stoi(m[1])));
        } else if (std::regex_match(item, m, omega)) {
            out.push_back(Event::omega_alpha(grid, std::stoi(m[1])));
        } else if (item == "omega_any") {
            out.push_back(Event::omega_any());
        } else if (item == "no_winding") {
            out.push_back(Event::no_winding());
        } else if (item == "empty") {
            out.push_back(Event::empty_config());
        } else {
            throw Error(ErrorKind::invalid_config, "events: cannot parse '" + item + "'");
        }
    }
    return out;
}

namespace app_detail {

inline std::filesystem::path output_path(const RunConfig& c, const std::string& file) {
    const std::filesystem::path dir(c.output_dir);
    if (!std::filesystem::is_directory(dir)) throw FilesystemError("output directory does not exist: " + c.output_dir);
    return dir / file;
}

inline std::ofstream open_output(const RunConfig& c, const std::string& file) {
    const auto path = output_path(c, file);
    std::ofstream os(path);
    if (!os) throw FilesystemError("cannot write " + path.string());
    return os;
}

inline bool want_csv(const RunConfig& c) { return c.format == "csv" || c.format == "both"; }
inline bool want_json(const RunConfig& c) { return c.format == "json" || c.format == "both"; }

inline void write_json(const RunConfig& c, const std::string& file, const json& j) {
    auto os = open_output(c, file);
    os << j.dump(2) << '\n';
}

}  // namespace app_detail

inline int cmd_simulate(const RunConfig& c, std::ostream& log) {
    const auto params = sampler_params(c);
    RunOptions opts;
    opts.trace = c.trace;
    opts.audit = c.audit;
    const auto result = run(params, c.chains, opts, thread_count());
    if (app_detail::want_json(c)) app_detail::write_json(c, "simulate.json", to_json(result, c));
    if (app_detail::want_csv(c)) {
        auto os = app_detail::open_output(c, "simulate.csv");
        write_estimates_csv(os, result, c);
    }
    if (c.trace) {
        auto os = app_detail::open_output(c, "trace.csv");
        write_trace_csv(os, result, c);
    }
    log << "simulate: " << result.measurements << " measurements in " << result.seconds << " s\n";
    return exit_ok;
}

inline int cmd_enumerate(const RunConfig& c, std::ostream& log) {
    const ChainGeometry geo(c.ell);
    const TimeGrid grid(c.beta, c.n);
    const auto events = parse_events(c.events, geo, grid);
    std::string method = c.method;
    if (method == "auto") method = detail::config_space_size(geo, grid) <= c.budget ? "dfs" : "transfer";
    ExactResult result;
    if (method == "dfs") {
        EnumerationOptions opts;
        opts.budget = c.budget;
        result = enumerate(geo, grid, c.q(), events, opts);
    } else {
        result = transfer_enumerate(geo, grid, c.q());
        static const std::regex conn(R"(connected\((-?\d+),(-?\d+)\))");
        for (const auto& e : events) {
            std::smatch m;
            const std::string name = e.name();
            if (!std::regex_match(name, m, conn)) {
                throw Error(ErrorKind::not_applicable, "transfer method only evaluates connection events, not " + name);
            }
            const int i = geo.site_index(std::stoi(m[1])), j = geo.site_index(std::stoi(m[2]));
            result.event_probabilities[name] = result.connection[i][j];
        }
    }
    const auto j = to_json(result, c, method);
    if (app_detail::want_json(c)) app_detail::write_json(c, "enumerate.json", j);
    if (app_detail::want_csv(c)) {
        auto os = app_detail::open_output(c, "enumerate.csv");
        write_csv_config(os, c);
        os << "quantity,value\n" << std::setprecision(17);
        os << "Z," << static_cast<double>(result.Z) << "\nn_configs," << static_cast<double>(result.n_configs) << '\n';
        for (const auto& [name, p] : result.event_probabilities) os << '"' << name << "\"," << static_cast<double>(p) << '\n';
    }
    log << "enumerate (" << method << "): Z = " << std::setprecision(17) << static_cast<double>(result.Z) << '\n';
    return exit_ok;
}

inline int cmd_ed(const RunConfig& c, std::ostream& log) {
    const int q = c.q();
    const SpinWeight w(c.twice_S);
    chain_dimension(c.ell, q, c.dense_budget);
    const ChainGeometry geo(c.ell);
    const Spectrum spec(build_hamiltonian(c.ell, q, c.dense_budget));
    const double bq = c.quantum_beta();

    json j;
    j["config"] = config_json(c);
    j["ground_energy"] = spec.ground_energy();
    j["ground_degeneracy"] = spec.ground_degeneracy();
    j["eigenvalues"] = std::vector<double>(spec.eigenvalues().begin(), spec.eigenvalues().end());
    json bonds = json::array();
    std::vector<double> p0(geo.num_edges());
    for (int e = 0; e < geo.num_edges(); ++e) {
        p0[e] = spec.expectation(bond_projector(c.ell, q, e, c.dense_budget), bq);
        bonds.push_back({{"x", geo.edge_left_coord(e)}, {"p0", p0[e]}});
    }
    j["bond_p0"] = bonds;
    json corr = json::array();
    std::vector<std::array<double, 3>> rows;
    for (int a = 0; a < geo.num_sites(); ++a) {
        for (int b = a + 1; b < geo.num_sites(); ++b) {
            const int x = geo.site_coord(a), y = geo.site_coord(b);
            const double v = spin_correlation(spec, c.ell, w, x, y, 3, 3, bq).real();
            rows.push_back({double(x), double(y), v});
            corr.push_back({{"x", x}, {"y", y}, {"s3s3", v}});
        }
    }
    j["correlations"] = corr;
    if (app_detail::want_json(c)) app_detail::write_json(c, "ed.json", j);
    if (app_detail::want_csv(c)) {
        {
            auto os = app_detail::open_output(c, "ed_spectrum.csv");
            write_csv_config(os, c);
            os << "index,energy\n" << std::setprecision(17);
            for (Eigen::Index k = 0; k < spec.eigenvalues().size(); ++k) os << k << ',' << spec.eigenvalues()[k] << '\n';
        }
        {
            auto os = app_detail::open_output(c, "ed_bonds.csv");
            write_csv_config(os, c);
            os << "x,p0\n" << std::setprecision(17);
            for (int e = 0; e < geo.num_edges(); ++e) os << geo.edge_left_coord(e) << ',' << p0[e] << '\n';
        }
        {
            auto os = app_detail::open_output(c, "ed_correlations.csv");
            write_csv_config(os, c);
            os << "x,y,s3s3\n" << std::setprecision(17);
            for (const auto& r : rows) os << r[0] << ',' << r[1] << ',' << r[2] << '\n';
        }
    }
    log << "ed: dimension " << spec.eigenvalues().size() << ", ground energy " << std::setprecision(12)
        << spec.ground_energy() << '\n';
    return exit_ok;
}

inline int cmd_contours(const RunConfig& c, std::ostream& log) {
    const auto params = sampler_params(c);
    auto os = app_detail::open_output(c, "contours.csv");
    write_csv_config(os, c);
    write_contour_csv_header(os);
    os << std::setprecision(17);
    std::mutex mu;
    long sample = 0, contours = 0, winding_samples = 0;
    RunOptions opts;
    opts.on_measure = [&](const Sampler&, const LoopSet& loops) {
        std::vector<ContourInfo> found;
        bool winding = false;
        for (const auto& l : loops.loops()) winding = winding || l.winding != 0;
        for (const auto& info : contour_census(loops)) {
            if (info.has_e2_bar) found.push_back(info);
        }
        std::lock_guard lock(mu);
        for (const auto& info : found) write_contour_csv_row(os, sample, info);
        contours += static_cast<long>(found.size());
        winding_samples += winding ? 1 : 0;
        ++sample;
    };
    const auto result = run(params, c.chains, opts, thread_count());
    if (app_detail::want_json(c)) {
        json j;
        j["config"] = config_json(c);
        j["samples"] = sample;
        j["contours"] = contours;
        j["samples_with_winding"] = winding_samples;
        j["seconds"] = result.seconds;
        app_detail::write_json(c, "contours.json", j);
    }
    log << "contours: " << contours << " contours in " << sample << " samples\n";
    return exit_ok;
}

inline int cmd_bounds(const RunConfig& c, std::ostream& log) {
    const auto rows = bound_table(c.S_grid.min, c.S_grid.max, c.S_grid.step);
    if (app_detail::want_json(c)) app_detail::write_json(c, "bounds.json", to_json(rows, c));
    if (app_detail::want_csv(c)) {
        auto os = app_detail::open_output(c, "bounds.csv");
        write_bounds_csv(os, rows, c);
    }
    log << "bounds: " << rows.size() << " rows, threshold S* = " << std::setprecision(8) << dimerization_threshold()
        << '\n';
    return exit_ok;
}

inline std::string check_line(const CheckResult& r) {
    std::ostringstream os;
    os << "criterion " << r.criterion << ' ' << r.name << ": " << (r.passed ? "PASS" : "FAIL") << " ("
       << std::setprecision(3) << r.seconds << " s)";
    for (const auto& f : r.failures) os << " [" << f << ']';
    return os.str();
}

inline int cmd_verify(const RunConfig& c, std::ostream& log) {
    app_detail::output_path(c, "verify.json");
    VerifyOptions opts;
    opts.quick = c.profile == "quick";
    opts.inject_fault = c.inject_fault;
    opts.on_result = [&](const CheckResult& r) { log << check_line(r) << '\n' << std::flush; };
    const auto report = run_verification(opts);
    app_detail::write_json(c, "verify.json", to_json(report, c));
    log << (report.passed() ? "verify: all criteria passed\n" : "verify: FAILED\n");
    return report.passed() ? exit_ok : exit_verify_failed;
}

/// Dispatches on c.command and maps errors onto exit codes.
inline int run_command(const RunConfig& c, std::ostream& log, std::ostream& err) {
    try {
        if (c.command == "simulate") return cmd_simulate(c, log);
        if (c.command == "enumerate") return cmd_enumerate(c, log);
        if (c.command == "ed") return cmd_ed(c, log);
        if (c.command == "contours") return cmd_contours(c, log);
        if (c.command == "bounds") return cmd_bounds(c, log);
        if (c.command == "verify") return cmd_verify(c, log);
        err << "error: no command given\n";
        return exit_usage;
    } catch (const FilesystemError& e) {
        err << "filesystem error: " << e.what() << '\n';
        return exit_runtime;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::invalid_config ? exit_usage : exit_runtime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

}  // namespace loopchain
