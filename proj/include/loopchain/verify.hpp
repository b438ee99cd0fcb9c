#pragma once

// Desk-scale verification suite: one check per acceptance criterion, each with its
// tolerances fixed here.

#include "bounds.hpp"
#include "ed.hpp"
#include "enumeration.hpp"
#include "io.hpp"
#include "sampler.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace loopchain {

struct CheckResult {
    int criterion = 0;
    std::string name;
    bool passed = true;
    std::vector<std::string> failures;  // named sub-checks that failed
    json metrics = json::object();
    double seconds = 0.0;
    double time_limit = 0.0;

    CheckResult() = default;
    CheckResult(int c, std::string n) : criterion(c), name(std::move(n)) {}

    void require(bool ok, const std::string& sub) {
        if (!ok) {
            passed = false;
            failures.push_back(sub);
        }
    }
};

struct VerifyOptions {
    bool quick = false;
    std::string inject_fault = "none";  // "singlet-projector" corrupts P0 before the identity check
    std::function<void(const CheckResult&)> on_result;
};

namespace verify_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void finish(CheckResult& r, Clock::time_point t0, double shared = 0.0) {
    r.seconds = seconds_since(t0) + shared;
    if (r.time_limit > 0.0) r.require(r.seconds < r.time_limit, "runtime");
}

}  // namespace verify_detail

/// 1. Singlet projector polynomials, spin commutators and Casimir.
inline CheckResult check_operator_identities(const std::string& fault = "none") {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{1, "operator-identities"};
    r.time_limit = 1.0;
    for (int t : {1, 2, 3}) {
        const SpinWeight w(t);
        Matrix P = singlet_projector(w.q());
        if (fault == "singlet-projector" && t == 2) P(0, 0) += 0.25;
        const auto c = polynomial_identity(w, &P);
        r.metrics[c.name] = c.residual;
        r.require(c.passed(), c.name);
        for (const auto& a : verify_spin_algebra(w)) {
            r.metrics[a.name] = a.residual;
            r.require(a.passed(), a.name);
        }
    }
    verify_detail::finish(r, t0);
    return r;
}

/// 2. Two-site partition function: enumeration vs closed form vs Tr e^{-2 beta H}.
inline CheckResult check_trotter_identity() {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{2, "trotter-identity"};
    r.time_limit = 10.0;
    const ChainGeometry geo(1);
    const int beta = 1;
    for (int q : {2, 3}) {
        const Spectrum spec(build_hamiltonian(1, q));
        const double tr = spec.partition_function(2.0 * beta);
        double prev = INFINITY;
        json rows = json::array();
        for (int n : {1, 2, 4, 8, 16}) {
            const TimeGrid grid(beta, n);
            const long double closed = two_site_Z(grid, q);
            const long double zt = transfer_enumerate(geo, grid, q).Z;
            double closed_err = static_cast<double>(std::fabs(zt - closed) / closed);
            if (detail::config_space_size(geo, grid) <= 1e8) {
                const long double zd = enumerate_Z(geo, grid, q).Z;
                closed_err = std::max(closed_err, static_cast<double>(std::fabs(zd - closed) / closed));
            }
            const double rel = std::abs(static_cast<double>(zt) - tr) / tr;
            rows.push_back({{"n", n}, {"Z_n", static_cast<double>(zt)}, {"trace", tr}, {"relative_error", rel},
                            {"closed_form_error", closed_err}});
            const std::string tag = "q=" + std::to_string(q) + ",n=" + std::to_string(n);
            r.require(closed_err <= 1e-12, "closed-form-" + tag);
            r.require(rel < prev, "monotone-" + tag);
            prev = rel;
            if (n == 16) r.require(rel <= 0.02, "trotter-tolerance-" + tag);
        }
        r.metrics["q=" + std::to_string(q)] = rows;
    }
    verify_detail::finish(r, t0);
    return r;
}

/// 3. <P0> from the loop model vs ED at beta_q = 2 beta, ell = 2, q = 2, beta = 1.
inline CheckResult check_bridge() {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{3, "loop-ed-bridge"};
    r.time_limit = 300.0;
    const int ell = 2, q = 2, beta = 1;
    const ChainGeometry geo(ell);
    const Spectrum spec(build_hamiltonian(ell, q));
    std::vector<double> ed(geo.num_edges());
    for (int e = 0; e < geo.num_edges(); ++e) ed[e] = spec.expectation(bond_projector(ell, q, e), 2.0 * beta);
    const double q2 = static_cast<double>(q) * q;

    // Depth-first and transfer sums agree where both are affordable.
    {
        const TimeGrid small(beta, 4);
        const auto dp = transfer_enumerate(geo, small, q);
        std::vector<Event> events;
        for (int e = 0; e < geo.num_edges(); ++e) {
            events.push_back(Event::connected(geo, geo.site_coord(e), geo.site_coord(e + 1)));
        }
        const auto dfs = enumerate(geo, small, q, events);
        double diff = static_cast<double>(std::fabs(dfs.Z - dp.Z) / dp.Z);
        for (int e = 0; e < geo.num_edges(); ++e) {
            diff = std::max(diff, static_cast<double>(std::fabs(dfs.event_probabilities.at(events[e].name()) -
                                                                dp.connection[e][e + 1])));
        }
        r.metrics["dfs_vs_transfer_n4"] = diff;
        r.require(diff <= 1e-12, "dfs-vs-transfer");
    }

    double prev = INFINITY;
    json rows = json::array();
    for (int n : {8, 16, 32, 64}) {
        const TimeGrid grid(beta, n);
        const auto dp = transfer_enumerate(geo, grid, q);
        double worst = 0.0, identity = 0.0;
        json per_edge = json::array();
        for (int e = 0; e < geo.num_edges(); ++e) {
            const double p = static_cast<double>(dp.connection[e][e + 1]);
            const double loop = 1.0 / q2 + (1.0 - 1.0 / q2) * p;
            const double discrete = spec.trotter_expectation(bond_projector(ell, q, e), beta, n);
            identity = std::max(identity, std::abs(loop - discrete));
            worst = std::max(worst, std::abs(loop - ed[e]));
            per_edge.push_back({{"edge_left", geo.edge_left_coord(e)}, {"loop", loop}, {"ed", ed[e]}});
        }
        rows.push_back({{"n", n}, {"max_abs_diff", worst}, {"discrete_identity_residual", identity}, {"edges", per_edge}});
        const std::string tag = "n=" + std::to_string(n);
        r.require(identity <= 1e-12, "discrete-identity-" + tag);
        r.require(worst < prev, "monotone-" + tag);
        if (n == 8) r.require(worst <= 0.02, "tolerance-n=8");
        prev = worst;
    }
    r.metrics["scan"] = rows;
    verify_detail::finish(r, t0);
    return r;
}

/// Bitmask of occupied slot ordinals, for single-edge chains.
inline unsigned config_key(const SegmentIndex& index) {
    unsigned key = 0;
    const auto& grid = index.grid();
    for (int o = 0; o < grid.num_slots(); ++o) {
        if (index.occupied(grid.slot_from_ordinal(o))) key |= 1u << o;
    }
    return key;
}

/// 4. Stationary law of the sampler on ell = 1, beta = 1, n = 4, q = 2.
inline CheckResult check_sampler_exactness(bool quick) {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{4, "sampler-exactness"};
    r.time_limit = 120.0;
    const ChainGeometry geo(1);
    const TimeGrid grid(1, 4);
    const int q = 2;
    const int cells = 1 << grid.num_slots();

    std::vector<double> prob(cells);
    const long double Z = enumerate_Z(geo, grid, q).Z;
    for (int key = 0; key < cells; ++key) {
        std::vector<Bar> bars;
        for (int o = 0; o < grid.num_slots(); ++o) {
            if (key & (1 << o)) bars.push_back({0, grid.slot_from_ordinal(o)});
        }
        const BarConfiguration c(bars);
        const int L = loop_count(geo, grid, c);
        prob[key] = static_cast<double>(std::exp(static_cast<long double>(log_weight(grid.n(), q, c.size(), L))) / Z);
    }

    SamplerParams p;
    p.geometry = geo;
    p.grid = grid;
    p.q = q;
    p.n_burnin = 1000;
    p.n_sweeps = (quick ? 100000 : 1000000) + p.n_burnin;
    p.measure_every = 10;
    json seeds = json::array();
    double min_p = 1.0, max_residual = 0.0;
    long transitions = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        p.seed = seed;
        std::vector<double> hist(cells, 0.0);
        RunOptions opts;
        opts.on_measure = [&](const Sampler& s, const LoopSet&) { hist[config_key(s.index())] += 1.0; };
        run_chain(p, 0, opts);
        const auto chi = chi_square_test(hist, prob);
        min_p = std::min(min_p, chi.p_value);
        seeds.push_back({{"seed", seed}, {"chi2", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}});
        r.require(chi.p_value > 0.001, "chi-square-seed=" + std::to_string(seed));

        SamplerParams a = p;
        a.n_burnin = 0;
        a.n_sweeps = quick ? 2000 : 20000;
        a.measure_every = a.n_sweeps;
        RunOptions audit;
        audit.audit = true;
        const auto ar = run_chain(a, 1, audit);
        max_residual = std::max(max_residual, ar.audit.max_residual);
        transitions += ar.audit.transitions;
    }
    r.metrics["seeds"] = seeds;
    r.metrics["min_p_value"] = min_p;
    r.metrics["audit_transitions"] = transitions;
    r.metrics["audit_max_residual"] = max_residual;
    r.require(max_residual <= 1e-12, "detailed-balance");
    verify_detail::finish(r, t0);
    return r;
}

/// 5. Loop-count laws on random configurations.
inline CheckResult check_loop_laws(std::uint64_t seed = 7, int samples = 10000) {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{5, "loop-laws"};
    r.time_limit = 60.0;
    std::mt19937_64 gen(seed);
    long bound_fail = 0, extent_fail = 0, delta_fail = 0, rule_fail = 0;
    for (int s = 0; s < samples; ++s) {
        const int ell = 1 + static_cast<int>(gen() % 5);
        const int beta = 1 + static_cast<int>(gen() % 3);
        const int n = 1 + static_cast<int>(gen() % 8);
        const ChainGeometry geo(ell);
        const TimeGrid grid(beta, n);
        const double density = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        std::vector<Bar> bars;
        for (int o = 0; o < grid.num_slots(); ++o) {
            if (std::uniform_real_distribution<double>(0.0, 1.0)(gen) < density) {
                bars.push_back({static_cast<int>(gen() % geo.num_edges()), grid.slot_from_ordinal(o)});
            }
        }
        const BarConfiguration config(bars);
        const LoopSet loops = trace_loops(geo, grid, config);
        const int L = loops.total_loops();
        if (L < 1 || L > geo.num_sites() + static_cast<int>(config.size())) ++bound_fail;
        if (loops.total_vertical_extent() != static_cast<long>(geo.num_sites()) * grid.circumference()) ++extent_fail;

        std::vector<int> free_slots;
        for (int o = 0; o < grid.num_slots(); ++o) {
            if (!config.slot_occupied(grid.slot_from_ordinal(o))) free_slots.push_back(grid.slot_from_ordinal(o));
        }
        if (free_slots.empty()) continue;
        const Bar b{static_cast<int>(gen() % geo.num_edges()), free_slots[gen() % free_slots.size()]};
        const int recount = loop_count(geo, grid, config.with(b)) - L;
        const bool joined = loops.loop_above(b.edge, b.slot) == loops.loop_above(b.edge + 1, b.slot);
        if (std::abs(recount) != 1 || recount != delta_loops(geo, grid, config, b)) ++delta_fail;
        if ((recount == 1) != joined) ++rule_fail;
    }
    r.metrics["samples"] = samples;
    r.metrics["bound_violations"] = bound_fail;
    r.metrics["extent_violations"] = extent_fail;
    r.metrics["delta_violations"] = delta_fail;
    r.metrics["connection_rule_violations"] = rule_fail;
    r.require(bound_fail == 0, "loop-count-bounds");
    r.require(extent_fail == 0, "vertical-extent");
    r.require(delta_fail == 0, "delta-recount");
    r.require(rule_fail == 0, "delta-connection-rule");
    verify_detail::finish(r, t0);
    return r;
}

/// 6. Closed-form bounds.
inline CheckResult check_bounds() {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{6, "bounds"};
    r.time_limit = 1.0;
    const double star = dimerization_threshold();
    r.metrics["threshold"] = star;
    r.metrics["peierls_bound_40"] = peierls_bound(40.0);
    r.metrics["c_40"] = c_of_S(40.0);
    r.require(std::abs(star - 39.2) <= 0.1, "threshold");
    bool positive = true;
    for (double S = 40.0; S <= 200.0; S += 0.5) positive = positive && c_of_S(S) > 0.0;
    r.require(positive, "c-positive");
    bool divergent = true;
    for (double S = 0.5; S <= 7.5; S += 0.5) {
        divergent = divergent && !series_convergent(S);
        try {
            peierls_bound(S);
            divergent = false;
        } catch (const Error& e) {
            divergent = divergent && e.kind() == ErrorKind::divergent;
        }
    }
    divergent = divergent && series_convergent(7.5 + 1e-9);
    r.require(divergent, "divergence-boundary");
    bool finite = true;
    for (double S = 8.0; S <= 200.0; S += 0.5) finite = finite && std::isfinite(decay_rate(S));
    r.metrics["eta_min_8"] = decay_rate(8.0);
    r.metrics["eta_min_40"] = decay_rate(40.0);
    r.require(finite, "decay-rate-finite");
    verify_detail::finish(r, t0);
    return r;
}

/// Weighted least-squares slope of ln C(d) against d; returns {rate, points}.
inline std::pair<double, int> decay_fit(const RunResult& run, int d_min, int d_max) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int points = 0;
    for (int d = d_min; d <= d_max; ++d) {
        const std::string name = "conn_distance[" + std::to_string(d) + "]";
        if (!run.has(name)) continue;
        const auto& e = run.at(name);
        if (e.mean <= 0.0 || e.error <= 0.0) continue;
        const double y = std::log(e.mean);
        const double sigma = e.error / e.mean;
        const double w = 1.0 / (sigma * sigma);
        sw += w;
        sx += w * d;
        sy += w * y;
        sxx += w * d * d;
        sxy += w * d * y;
        ++points;
    }
    if (points < 2) return {NAN, points};
    const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    return {-slope, points};
}

/// 7 and 8 (large chain). One run at q = 81, ell = 16, beta = 8, n = 64.
inline RunResult dimerization_run(bool quick) {
    SamplerParams p;
    p.geometry = ChainGeometry(16);
    p.grid = TimeGrid(8, 64);
    p.q = 81;
    p.init = InitKind::dimer;
    p.seed = 1;
    p.n_burnin = quick ? 1000 : 5000;
    p.n_sweeps = p.n_burnin + (quick ? 12500 : 125000);
    return run(p, 8);
}

inline CheckResult check_dimerization(const RunResult& run, bool quick) {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{7, "dimerization"};
    r.time_limit = 7200.0;
    const auto& geo = run.params.geometry;
    const double floor = 0.5 * c_of_S(40.0);
    double min_d = INFINITY, min_z = INFINITY;
    json rows = json::array();
    for (int e : geo.interior_e1_edges()) {
        const int x = geo.edge_left_coord(e);
        const auto& d = run.at("dimer_diff[" + std::to_string(x) + "]");
        const double z = d.error > 0.0 ? d.mean / d.error : (d.mean > 0.0 ? INFINITY : -INFINITY);
        rows.push_back({{"x", x}, {"D", d.mean}, {"error", d.error}, {"tau_int", d.tau_int}});
        r.require(z >= 3.0, "D-significance-x=" + std::to_string(x));
        min_d = std::min(min_d, d.mean);
        min_z = std::min(min_z, z);
    }
    r.metrics["sweeps_measured"] = run.measurements;
    r.metrics["min_D"] = min_d;
    r.metrics["min_z"] = min_z;
    r.metrics["floor"] = floor;
    r.metrics["profile"] = rows;
    if (!quick) r.require(run.measurements >= 1000000, "sample-size");
    r.require(min_d >= floor, "D-floor");
    verify_detail::finish(r, t0, run.seconds);
    return r;
}

/// 8. Decay of P(x <-> y) on the large run and the spin-correlation identity on ell = 2, q = 3.
inline CheckResult check_decay(const RunResult& big, bool quick) {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{8, "correlation-decay"};
    const auto [rate, points] = decay_fit(big, 2, 10);
    const double target = 0.5 / decay_rate(40.0);
    r.metrics["fit_rate"] = rate;
    r.metrics["fit_points"] = points;
    r.metrics["required_rate"] = target;
    json dist = json::array();
    for (int d = 1; d <= 10; ++d) {
        const auto& e = big.at("conn_distance[" + std::to_string(d) + "]");
        dist.push_back({{"d", d}, {"P", e.mean}, {"error", e.error}});
    }
    r.metrics["connection_by_distance"] = dist;
    r.require(points >= 2, "decay-fit-points");
    r.require(points >= 2 && rate >= target, "decay-rate");

    const int ell = 2, q = 3, beta = 1;
    SamplerParams p;
    p.geometry = ChainGeometry(ell);
    p.grid = TimeGrid(beta, 64);
    p.q = q;
    p.seed = 11;
    p.n_burnin = 2000;
    p.n_sweeps = p.n_burnin + (quick ? 10000 : 100000);
    const auto small = run(p, 4);
    const SpinWeight w = SpinWeight::from_q(q);
    const Spectrum spec(build_hamiltonian(ell, q));
    double worst_2beta = 0.0, worst_beta = 0.0;
    bool match_2beta = true, match_beta = true;
    json pairs = json::array();
    const auto& geo = p.geometry;
    for (int i = 0; i < geo.num_sites(); ++i) {
        for (int j = i + 1; j < geo.num_sites(); ++j) {
            const int x = geo.site_coord(i), y = geo.site_coord(j);
            const auto& c = small.at("conn[" + std::to_string(x) + "," + std::to_string(y) + "]");
            const double sign = ((y - x) % 2 == 0) ? 1.0 : -1.0;
            const double est = w.casimir() / 3.0 * sign * c.mean;
            const double err = w.casimir() / 3.0 * c.error;
            const double tol = std::max(3.0 * err, 0.02);
            const double ed2 = spin_correlation(spec, ell, w, x, y, 3, 3, 2.0 * beta).real();
            const double ed1 = spin_correlation(spec, ell, w, x, y, 3, 3, 1.0 * beta).real();
            worst_2beta = std::max(worst_2beta, std::abs(est - ed2));
            worst_beta = std::max(worst_beta, std::abs(est - ed1));
            match_2beta = match_2beta && std::abs(est - ed2) <= tol;
            match_beta = match_beta && std::abs(est - ed1) <= tol;
            pairs.push_back({{"x", x}, {"y", y}, {"loop", est}, {"error", err}, {"ed_2beta", ed2}, {"ed_beta", ed1}});
        }
    }
    r.metrics["small_chain"] = pairs;
    r.metrics["max_dev_2beta"] = worst_2beta;
    r.metrics["max_dev_beta"] = worst_beta;
    r.metrics["convention"] = match_2beta ? (match_beta ? "both" : "2beta") : (match_beta ? "beta" : "neither");
    r.require(match_2beta || match_beta, "spin-correlation-identity");
    verify_detail::finish(r, t0, big.seconds);
    return r;
}

/// 9. Fraction of samples in some Omega^alpha, and the conditioned dimer-margin inequality.
inline CheckResult check_omega_saturation(bool quick) {
    const auto t0 = verify_detail::Clock::now();
    CheckResult r{9, "omega-saturation"};
    double prev = -1.0;
    json rows = json::array();
    for (int beta : {2, 4, 8}) {
        SamplerParams p;
        p.geometry = ChainGeometry(8);
        p.grid = TimeGrid(beta, 64);
        p.q = 81;
        p.init = InitKind::dimer;
        p.seed = 21;
        p.n_burnin = 2000;
        p.n_sweeps = p.n_burnin + (quick ? 10000 : 100000);
        const auto res = run(p, 2);
        const auto& f = res.at("omega_any");
        const std::string tag = "beta=" + std::to_string(beta);
        json margins = json::array();
        long conditioned = std::lround(f.mean * static_cast<double>(f.count));
        for (int e : p.geometry.interior_e1_edges()) {
            const int x = p.geometry.edge_left_coord(e);
            const auto& z = res.at("cond_any:dimer_margin[" + std::to_string(x) + "]");
            margins.push_back({{"x", x}, {"margin", z.mean}, {"error", z.error}});
            if (conditioned > 0) r.require(z.mean >= -3.0 * z.error, "dimer_margin-" + tag + "-x=" + std::to_string(x));
        }
        rows.push_back({{"beta", beta}, {"fraction", f.mean}, {"error", f.error}, {"conditioned_samples", conditioned},
                        {"dimer_margin", margins}});
        r.require(f.mean > prev, "monotone-" + tag);
        prev = f.mean;
        if (beta == 8) r.require(f.mean >= 0.9, "fraction-beta=8");
    }
    r.metrics["scan"] = rows;
    verify_detail::finish(r, t0);
    return r;
}

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return true;
    }
    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& c : checks) {
            for (const auto& f : c.failures) out.push_back(c.name + "/" + f);
        }
        return out;
    }
};

inline VerifyReport run_verification(const VerifyOptions& opts = {}) {
    VerifyReport report;
    auto add = [&](CheckResult c) {
        if (opts.on_result) opts.on_result(c);
        report.checks.push_back(std::move(c));
    };
    add(check_operator_identities(opts.inject_fault));
    add(check_trotter_identity());
    add(check_bridge());
    add(check_sampler_exactness(opts.quick));
    add(check_loop_laws());
    add(check_bounds());
    const auto big = dimerization_run(opts.quick);
    add(check_dimerization(big, opts.quick));
    add(check_decay(big, opts.quick));
    add(check_omega_saturation(opts.quick));
    return report;
}

inline json to_json(const CheckResult& c) {
    return json{{"criterion", c.criterion}, {"name", c.name},       {"passed", c.passed},
                {"failures", c.failures},   {"seconds", c.seconds}, {"metrics", c.metrics}};
}

inline json to_json(const VerifyReport& r, const RunConfig& c) {
    json j;
    j["config"] = config_json(c);
    j["version"] = kVersion;
    j["passed"] = r.passed();
    j["failures"] = r.failures();
    json arr = json::array();
    for (const auto& ch : r.checks) arr.push_back(to_json(ch));
    j["checks"] = arr;
    return j;
}

}  // namespace loopchain
