#pragma once

// Metropolis-Hastings sampler for the weight n^{-|w|} q^{L(w) - |w|} on bar configurations.
//
// Proposal kernel:
//   insert (prob p_ins): uniform cell (edge, slot) among N_cells = edges * (2 beta n - 1);
//                        rejected at once if the slot already holds a bar.
//   delete (prob p_del): uniform bar among the |w| present; no-op when |w| = 0.
// Acceptance min(1, R) with
//   R_ins = (1/n) q^{dL - 1} * (p_del / (|w| + 1)) / (p_ins / N_cells)
//   R_del = n q^{dL + 1} * (p_ins / N_cells) / (p_del / |w|)
// where dL = L(w') - L(w) is +-1. The uniform draw is compared with the two possible
// values of R first, so the loop walk for dL runs only when it decides the outcome.

#include "contours.hpp"
#include "rng.hpp"
#include "stats.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace loopchain {

inline constexpr const char* kVersion = "loopchain 1.0.0";

enum class InitKind { empty, dimer };

struct SamplerParams {
    ChainGeometry geometry{1};
    TimeGrid grid{1, 1};
    int q = 2;
    long n_sweeps = 1000;  // total, burn-in included
    long n_burnin = 100;
    int measure_every = 1;
    std::uint64_t seed = 1;
    double p_insert = 0.5;
    InitKind init = InitKind::empty;

    double p_delete() const { return 1.0 - p_insert; }

    void validate() const {
        if (q < 2) throw Error(ErrorKind::invalid_parameter, "q must be >= 2");
        if (!(p_insert > 0.0 && p_insert < 1.0)) throw Error(ErrorKind::invalid_parameter, "p_insert must lie in (0, 1)");
        if (n_burnin < 0 || n_sweeps <= n_burnin) throw Error(ErrorKind::invalid_parameter, "need n_sweeps > n_burnin >= 0");
        if (measure_every < 1) throw Error(ErrorKind::invalid_parameter, "measure_every must be >= 1");
    }
};

struct MoveStats {
    long insert_proposed = 0, insert_accepted = 0, insert_blocked = 0;
    long delete_proposed = 0, delete_accepted = 0, delete_empty = 0;
    long loop_walks = 0;

    void merge(const MoveStats& o) {
        insert_proposed += o.insert_proposed;
        insert_accepted += o.insert_accepted;
        insert_blocked += o.insert_blocked;
        delete_proposed += o.delete_proposed;
        delete_accepted += o.delete_accepted;
        delete_empty += o.delete_empty;
        loop_walks += o.loop_walks;
    }
};

/// Log of the target weight, -k log n + (L - k) log q.
inline double log_weight(int n, int q, long bars, long loops) {
    return -static_cast<double>(bars) * std::log(static_cast<double>(n)) +
           static_cast<double>(loops - bars) * std::log(static_cast<double>(q));
}

struct AuditSummary {
    long transitions = 0;
    double max_residual = 0.0;
};

inline BarConfiguration initial_config(const ChainGeometry& geo, const TimeGrid& grid, InitKind kind) {
    if (kind == InitKind::empty) return {};
    // Every fourth slot, cycling over the E1 edges.
    const auto e1 = geo.edges_of_class(EdgeClass::E1);
    std::vector<Bar> bars;
    for (int ord = 0, j = 0; ord < grid.num_slots(); ord += 4, ++j) {
        bars.push_back({e1[j % e1.size()], grid.slot_from_ordinal(ord)});
    }
    return BarConfiguration(std::move(bars));
}

class Sampler {
public:
    Sampler(const SamplerParams& params, std::uint64_t stream)
        : params_(params), rng_(params.seed, stream), index_(params.geometry, params.grid),
          bar_at_(params.grid.circumference(), -1) {
        params_.validate();
        const auto& geo = params_.geometry;
        const auto& grid = params_.grid;
        n_cells_ = static_cast<long>(geo.num_edges()) * grid.num_slots();
        log_n_ = std::log(static_cast<double>(grid.n()));
        log_q_ = std::log(static_cast<double>(params_.q));
        log_p_ins_ = std::log(params_.p_insert);
        log_p_del_ = std::log(params_.p_delete());
        log_cells_ = std::log(static_cast<double>(n_cells_));
        const auto start = initial_config(geo, grid, params_.init);
        for (const auto& b : start.bars()) add_bar(b);
    }

    const SamplerParams& params() const noexcept { return params_; }
    const SegmentIndex& index() const noexcept { return index_; }
    const MoveStats& stats() const noexcept { return stats_; }
    const CounterRng& rng() const noexcept { return rng_; }
    long num_bars() const noexcept { return static_cast<long>(bars_.size()); }

    BarConfiguration config() const { return BarConfiguration(bars_); }

    /// log R of inserting into a configuration with `bars` bars, for loop change dL.
    double log_ratio_insert(long bars, int dL) const {
        return -log_n_ + (dL - 1) * log_q_ + (log_p_del_ - std::log(static_cast<double>(bars + 1))) -
               (log_p_ins_ - log_cells_);
    }

    /// log R of deleting from a configuration with `bars` bars (bars >= 1), for loop change dL.
    double log_ratio_delete(long bars, int dL) const {
        return log_n_ + (dL + 1) * log_q_ + (log_p_ins_ - log_cells_) -
               (log_p_del_ - std::log(static_cast<double>(bars)));
    }

    void enable_audit(bool on = true) { audit_ = on; }
    const AuditSummary& audit() const noexcept { return audit_summary_; }

    /// One proposal; returns whether the configuration changed.
    bool step() {
        const bool insert = rng_.uniform() < params_.p_insert;
        if (insert) {
            ++stats_.insert_proposed;
            const auto cell = static_cast<long>(rng_.below(static_cast<std::uint64_t>(n_cells_)));
            const int edges = params_.geometry.num_edges();
            const Bar b{static_cast<int>(cell % edges), params_.grid.slot_from_ordinal(static_cast<int>(cell / edges))};
            if (index_.occupied(b.slot)) {
                ++stats_.insert_blocked;
                return false;
            }
            const double log_u = std::log(rng_.uniform());
            const long k = num_bars();
            bool accept;
            if (log_u < log_ratio_insert(k, -1)) {
                accept = true;
            } else if (log_u >= log_ratio_insert(k, +1)) {
                accept = false;
            } else {
                ++stats_.loop_walks;
                accept = index_.delta_insert(b) == +1;
            }
            if (audit_) audit_insert(b, log_u, accept);
            if (accept) {
                add_bar(b);
                ++stats_.insert_accepted;
            }
            return accept;
        }
        ++stats_.delete_proposed;
        const long k = num_bars();
        if (k == 0) {
            ++stats_.delete_empty;
            return false;
        }
        const Bar b = bars_[rng_.below(static_cast<std::uint64_t>(k))];
        const double log_u = std::log(rng_.uniform());
        bool accept;
        if (log_u < log_ratio_delete(k, -1)) {
            accept = true;
        } else if (log_u >= log_ratio_delete(k, +1)) {
            accept = false;
        } else {
            ++stats_.loop_walks;
            accept = index_.delta_erase(b) == +1;
        }
        if (audit_) audit_delete(b, log_u, accept);
        if (accept) {
            remove_bar(b);
            ++stats_.delete_accepted;
        }
        return accept;
    }

    /// 2 beta n - 1 proposals.
    void sweep() {
        const int m = params_.grid.num_slots();
        for (int i = 0; i < m; ++i) step();
    }

private:
    void add_bar(const Bar& b) {
        index_.insert(b);
        bar_at_[params_.grid.position(b.slot)] = static_cast<int>(bars_.size());
        bars_.push_back(b);
    }

    void remove_bar(const Bar& b) {
        const int pos = params_.grid.position(b.slot);
        const int i = bar_at_[pos];
        const Bar last = bars_.back();
        bars_[i] = last;
        bar_at_[params_.grid.position(last.slot)] = i;
        bars_.pop_back();
        bar_at_[pos] = -1;
        index_.erase(b);
    }

    // Detailed balance from independent recounts: pi(w) P(w -> w') vs pi(w') P(w' -> w).
    void check_balance(const BarConfiguration& from, const BarConfiguration& to, double log_fwd, double log_rev) {
        const auto& geo = params_.geometry;
        const auto& grid = params_.grid;
        const long kf = static_cast<long>(from.size()), kt = static_cast<long>(to.size());
        const double lhs = log_weight(grid.n(), params_.q, kf, LoopSet(geo, grid, from).total_loops()) + log_fwd;
        const double rhs = log_weight(grid.n(), params_.q, kt, LoopSet(geo, grid, to).total_loops()) + log_rev;
        audit_summary_.max_residual = std::max(audit_summary_.max_residual, std::abs(std::expm1(lhs - rhs)));
        ++audit_summary_.transitions;
    }

    void audit_insert(const Bar& b, double log_u, bool accept) {
        const auto from = config();
        const auto to = from.with(b);
        const int dL = LoopSet(params_.geometry, params_.grid, to).total_loops() -
                       LoopSet(params_.geometry, params_.grid, from).total_loops();
        if (accept != (log_u < log_ratio_insert(num_bars(), dL))) {
            throw Error(ErrorKind::numerical, "shortcut acceptance disagrees with the recounted ratio");
        }
        const long k = num_bars();
        const double fwd = log_p_ins_ - log_cells_ + std::min(0.0, log_ratio_insert(k, dL));
        const double rev = log_p_del_ - std::log(static_cast<double>(k + 1)) + std::min(0.0, log_ratio_delete(k + 1, -dL));
        check_balance(from, to, fwd, rev);
    }

    void audit_delete(const Bar& b, double log_u, bool accept) {
        const auto from = config();
        const auto to = from.without(b);
        const int dL = LoopSet(params_.geometry, params_.grid, to).total_loops() -
                       LoopSet(params_.geometry, params_.grid, from).total_loops();
        if (accept != (log_u < log_ratio_delete(num_bars(), dL))) {
            throw Error(ErrorKind::numerical, "shortcut acceptance disagrees with the recounted ratio");
        }
        const long k = num_bars();
        const double fwd = log_p_del_ - std::log(static_cast<double>(k)) + std::min(0.0, log_ratio_delete(k, dL));
        const double rev = log_p_ins_ - log_cells_ + std::min(0.0, log_ratio_insert(k - 1, -dL));
        check_balance(from, to, fwd, rev);
    }

    SamplerParams params_;
    CounterRng rng_;
    SegmentIndex index_;
    std::vector<Bar> bars_;
    std::vector<int> bar_at_;  // circle position -> index in bars_
    MoveStats stats_;
    long n_cells_ = 0;
    double log_n_ = 0, log_q_ = 0, log_p_ins_ = 0, log_p_del_ = 0, log_cells_ = 0;
    bool audit_ = false;
    AuditSummary audit_summary_;
};

/// Per-measurement indicator series of one chain.
struct Observables {
    explicit Observables(const ChainGeometry& geo, const TimeGrid& grid)
        : geo_(geo), grid_(grid) {
        const int m = geo.num_sites();
        bond.resize(geo.num_edges());
        surround.resize(m);
        distance.resize(m);
        omega_alpha.resize(2 * grid.beta());
        const auto interior = geo.interior_e1_edges().size();
        dimer_diff.resize(interior);
        margin_any.resize(interior);
        margin_zero.resize(interior);
        bond_given_any.resize(geo.num_edges());
        surround_given_any.resize(m);
        if (m <= 8) pairs.resize(m * m);
    }

    SeriesRecorder loops, bars, no_winding, omega_any, omega_zero;
    std::vector<SeriesRecorder> omega_alpha;  // alpha = -beta + index
    std::vector<SeriesRecorder> bond;         // 1{e <-> e+1} by edge
    std::vector<SeriesRecorder> surround;     // 1{no winding} 1{E_x} by site
    std::vector<SeriesRecorder> distance;     // translation-averaged 1{x <-> x+d}
    std::vector<SeriesRecorder> pairs;        // 1{i <-> j}, small chains only
    std::vector<SeriesRecorder> dimer_diff;   // 1{e <-> e+1} - 1{e-1 <-> e}, interior E1 edges
    std::vector<SeriesRecorder> bond_given_any, surround_given_any;  // joint with Omega
    std::vector<SeriesRecorder> margin_any, margin_zero;  // joint with Omega (any alpha / alpha = 0)

    void measure(const LoopSet& loops) {
        const auto& index = loops.index();
        const int m = geo_.num_sites();
        this->loops.add(loops.total_loops());
        bars.add(static_cast<double>(index.num_bars()));
        const bool winding_free = !has_winding_loops(loops);
        no_winding.add(winding_free);
        bool any = false, zero = false;
        for (int a = -grid_.beta(); a < grid_.beta(); ++a) {
            const bool in = omega_alpha_member(index, a);
            omega_alpha[a + grid_.beta()].add(in);
            any = any || in;
            if (a == 0) zero = in;
        }
        omega_any.add(any);
        omega_zero.add(zero);

        std::vector<char> conn(geo_.num_edges());
        for (int e = 0; e < geo_.num_edges(); ++e) {
            conn[e] = loops.connected_sites(e, e + 1);
            bond[e].add(conn[e]);
            bond_given_any[e].add(any && conn[e]);
        }
        for (int d = 1; d < m; ++d) {
            int hits = 0;
            for (int i = 0; i + d < m; ++i) hits += loops.connected_sites(i, i + d);
            distance[d].add(static_cast<double>(hits) / (m - d));
        }
        if (!pairs.empty()) {
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) pairs[i * m + j].add(loops.connected_sites(i, j));
            }
        }
        std::vector<char> sur(m, 0);
        if (winding_free) sur = surrounded_all(loops);
        for (int s = 0; s < m; ++s) {
            surround[s].add(sur[s]);
            surround_given_any[s].add(any && sur[s]);
        }
        std::size_t i = 0;
        for (int e : geo_.interior_e1_edges()) {
            dimer_diff[i].add(conn[e] - conn[e - 1]);
            // 1{x <-> x+1} - 1{x-1 <-> x} - (1 - 2 1{E_x}) with x the left site of e.
            const double z = conn[e] - conn[e - 1] - 1.0 + 2.0 * sur[e];
            margin_any[i].add(any ? z : 0.0);
            margin_zero[i].add(zero ? z : 0.0);
            ++i;
        }
    }

private:
    ChainGeometry geo_;
    TimeGrid grid_;
};

struct TracePoint {
    long sweep;
    double loops, bars, omega_any;
};

struct ChainResult {
    std::uint64_t stream = 0;
    long measurements = 0;
    MoveStats moves;
    AuditSummary audit;
    std::vector<TracePoint> trace;
    std::optional<Observables> obs;
    double seconds = 0.0;
};

struct RunOptions {
    bool trace = false;
    bool audit = false;
    /// Called with (chain sampler, loop set) at every measurement; must be thread-safe
    /// when chains run in parallel.
    std::function<void(const Sampler&, const LoopSet&)> on_measure;
};

inline ChainResult run_chain(const SamplerParams& params, std::uint64_t stream, const RunOptions& opts = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    Sampler sampler(params, stream);
    sampler.enable_audit(opts.audit);
    ChainResult out;
    out.stream = stream;
    out.obs.emplace(params.geometry, params.grid);
    for (long s = 0; s < params.n_sweeps; ++s) {
        sampler.sweep();
        if (s < params.n_burnin || (s - params.n_burnin) % params.measure_every != 0) continue;
        const LoopSet loops(sampler.index());
        out.obs->measure(loops);
        ++out.measurements;
        if (opts.trace) {
            out.trace.push_back({s, static_cast<double>(loops.total_loops()), static_cast<double>(sampler.num_bars()),
                                 omega_any(loops.index()).has_value() ? 1.0 : 0.0});
        }
        if (opts.on_measure) opts.on_measure(sampler, loops);
    }
    out.moves = sampler.stats();
    out.audit = sampler.audit();
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct RunResult {
    SamplerParams params;
    int chains = 1;
    std::string version = kVersion;
    std::map<std::string, Estimate> estimates;
    MoveStats moves;
    AuditSummary audit;
    long measurements = 0;
    double seconds = 0.0;
    std::vector<std::vector<TracePoint>> traces;

    const Estimate& at(const std::string& name) const {
        auto it = estimates.find(name);
        if (it == estimates.end()) throw Error(ErrorKind::invalid_parameter, "no observable '" + name + "'");
        return it->second;
    }
    bool has(const std::string& name) const { return estimates.count(name) > 0; }
};

namespace detail {

inline std::string coord_name(const std::string& base, int x) { return base + "[" + std::to_string(x) + "]"; }

inline Estimate merge_plain(const std::vector<ChainResult>& chains, const std::function<const SeriesRecorder&(const Observables&)>& get) {
    std::vector<Estimate> parts;
    std::vector<double> weights;
    for (const auto& c : chains) {
        const auto& r = get(*c.obs);
        parts.push_back(r.estimate());
        weights.push_back(static_cast<double>(r.count()));
    }
    return combine(parts, weights);
}

inline Estimate merge_ratio(const std::vector<ChainResult>& chains,
                            const std::function<const SeriesRecorder&(const Observables&)>& num,
                            const std::function<const SeriesRecorder&(const Observables&)>& den) {
    std::vector<Estimate> parts;
    std::vector<double> weights;
    for (const auto& c : chains) {
        parts.push_back(ratio_estimate(num(*c.obs), den(*c.obs)));
        weights.push_back(den(*c.obs).sum());
    }
    Estimate e = combine(parts, weights);
    double total = 0.0;
    for (double w : weights) total += w;
    e.count = std::lround(total);
    return e;
}

}  // namespace detail

/// Named estimates merged across chains in stream order.
inline RunResult summarize(const SamplerParams& params, const std::vector<ChainResult>& chains) {
    const auto& geo = params.geometry;
    const auto& grid = params.grid;
    const double q2 = static_cast<double>(params.q) * params.q;
    RunResult r;
    r.params = params;
    r.chains = static_cast<int>(chains.size());
    for (const auto& c : chains) {
        r.moves.merge(c.moves);
        r.measurements += c.measurements;
        r.seconds += c.seconds;
        r.audit.transitions += c.audit.transitions;
        r.audit.max_residual = std::max(r.audit.max_residual, c.audit.max_residual);
        if (!c.trace.empty()) r.traces.push_back(c.trace);
    }
    auto plain = [&](const std::string& name, auto get) {
        r.estimates[name] = detail::merge_plain(chains, get);
    };
    auto ratio = [&](const std::string& name, auto num, auto den) {
        r.estimates[name] = detail::merge_ratio(chains, num, den);
    };
    auto scaled = [&](const std::string& name, const Estimate& e, double a, double b) {
        Estimate s = e;
        s.mean = a + b * e.mean;
        s.error = std::abs(b) * e.error;
        r.estimates[name] = s;
    };

    plain("loops", [](const Observables& o) -> const SeriesRecorder& { return o.loops; });
    plain("bars", [](const Observables& o) -> const SeriesRecorder& { return o.bars; });
    plain("no_winding", [](const Observables& o) -> const SeriesRecorder& { return o.no_winding; });
    plain("omega_any", [](const Observables& o) -> const SeriesRecorder& { return o.omega_any; });
    plain("omega_zero", [](const Observables& o) -> const SeriesRecorder& { return o.omega_zero; });
    for (int a = -grid.beta(); a < grid.beta(); ++a) {
        const int i = a + grid.beta();
        plain(detail::coord_name("omega_alpha", a),
              [i](const Observables& o) -> const SeriesRecorder& { return o.omega_alpha[i]; });
    }
    for (int e = 0; e < geo.num_edges(); ++e) {
        const int x = geo.edge_left_coord(e);
        plain(detail::coord_name("bond_conn", x), [e](const Observables& o) -> const SeriesRecorder& { return o.bond[e]; });
        scaled(detail::coord_name("p0", x), r.estimates[detail::coord_name("bond_conn", x)], 1.0 / q2, 1.0 - 1.0 / q2);
        ratio(detail::coord_name("cond_any:bond_conn", x),
              [e](const Observables& o) -> const SeriesRecorder& { return o.bond_given_any[e]; },
              [](const Observables& o) -> const SeriesRecorder& { return o.omega_any; });
    }
    for (int s = 0; s < geo.num_sites(); ++s) {
        const int x = geo.site_coord(s);
        plain(detail::coord_name("surround", x), [s](const Observables& o) -> const SeriesRecorder& { return o.surround[s]; });
        ratio(detail::coord_name("cond_any:surround", x),
              [s](const Observables& o) -> const SeriesRecorder& { return o.surround_given_any[s]; },
              [](const Observables& o) -> const SeriesRecorder& { return o.omega_any; });
    }
    for (int d = 1; d < geo.num_sites(); ++d) {
        plain(detail::coord_name("conn_distance", d),
              [d](const Observables& o) -> const SeriesRecorder& { return o.distance[d]; });
    }
    if (!chains.empty() && !chains.front().obs->pairs.empty()) {
        const int m = geo.num_sites();
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                const std::string name =
                    "conn[" + std::to_string(geo.site_coord(i)) + "," + std::to_string(geo.site_coord(j)) + "]";
                const int k = i * m + j;
                plain(name, [k](const Observables& o) -> const SeriesRecorder& { return o.pairs[k]; });
            }
        }
    }
    std::size_t i = 0;
    for (int e : geo.interior_e1_edges()) {
        const int x = geo.edge_left_coord(e);
        plain(detail::coord_name("dimer_conn_diff", x),
              [i](const Observables& o) -> const SeriesRecorder& { return o.dimer_diff[i]; });
        scaled(detail::coord_name("dimer_diff", x), r.estimates[detail::coord_name("dimer_conn_diff", x)], 0.0,
               1.0 - 1.0 / q2);
        ratio(detail::coord_name("cond_any:dimer_margin", x),
              [i](const Observables& o) -> const SeriesRecorder& { return o.margin_any[i]; },
              [](const Observables& o) -> const SeriesRecorder& { return o.omega_any; });
        ratio(detail::coord_name("cond_zero:dimer_margin", x),
              [i](const Observables& o) -> const SeriesRecorder& { return o.margin_zero[i]; },
              [](const Observables& o) -> const SeriesRecorder& { return o.omega_zero; });
        ++i;
    }
    for (const auto& [name, e] : r.estimates) {
        if (!std::isfinite(e.mean) || !std::isfinite(e.error)) {
            throw Error(ErrorKind::numerical, "non-finite accumulator for " + name);
        }
    }
    return r;
}

/// Thread count from LOOPCHAIN_THREADS (default 1).
inline int thread_count() {
    if (const char* v = std::getenv("LOOPCHAIN_THREADS")) {
        const int t = std::atoi(v);
        if (t >= 1) return t;
    }
    return 1;
}

/// Independent chains on streams 0..chains-1 of params.seed.
inline RunResult run(const SamplerParams& params, int chains = 1, const RunOptions& opts = {}, int threads = 0) {
    params.validate();
    if (chains < 1) throw Error(ErrorKind::invalid_parameter, "chains must be >= 1");
    if (threads <= 0) threads = thread_count();
    std::vector<ChainResult> results(chains);
    if (threads == 1 || chains == 1) {
        for (int c = 0; c < chains; ++c) results[c] = run_chain(params, static_cast<std::uint64_t>(c), opts);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < std::min(threads, chains); ++t) {
            pool.emplace_back([&] {
                for (int c = next++; c < chains; c = next++) {
                    results[c] = run_chain(params, static_cast<std::uint64_t>(c), opts);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return summarize(params, results);
}

}  // namespace loopchain
