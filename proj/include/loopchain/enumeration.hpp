#pragma once

// Exact sums over all bar configurations of tiny instances.
//
// Slots are visited in circle order starting just above time 0 (1, ..., beta n, then
// -beta n + 1, ..., -1). The state is a link pattern on 2m points: bottom point i is
// site i just above time 0, top point m + i is the current frontier of site i. A bar on
// sites (i, i+1) either closes a loop (when the two frontier strands are already joined)
// or joins their partners; the two new frontier strands are then joined to each other.
// Gluing top i to bottom i at the end closes the remaining loops.

#include "contours.hpp"
#include "loops.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace loopchain {

/// Neumaier-compensated sum of long doubles.
class CompensatedSum {
public:
    void add(long double x) {
        const long double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    long double value() const { return sum_ + comp_; }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

/// Leaf data handed to configuration predicates.
struct LeafView {
    const BarConfiguration& config;
    const LoopSet* loops;  // non-null only when some event asked for it
    int total_loops;
    const std::vector<int>& site_label;  // loop label of (site, 0), by site index
};

class Event {
public:
    using Predicate = std::function<bool(const LeafView&)>;

    const std::string& name() const noexcept { return name_; }
    bool needs_loops() const noexcept { return needs_loops_; }
    bool operator()(const LeafView& v) const { return fn_(v); }

    /// (x, 0) and (y, 0) on one loop; x, y site coordinates.
    static Event connected(const ChainGeometry& geo, int x, int y) {
        if (!geo.has_site_coord(x) || !geo.has_site_coord(y)) throw Error(ErrorKind::invalid_parameter, "site outside chain");
        const int i = geo.site_index(x), j = geo.site_index(y);
        return Event("connected(" + std::to_string(x) + "," + std::to_string(y) + ")", false,
                     [i, j](const LeafView& v) { return v.site_label[i] == v.site_label[j]; });
    }

    /// No winding loop and (x, 0) on or inside a long loop.
    static Event surrounded(const ChainGeometry& geo, int x) {
        if (!geo.has_site_coord(x)) throw Error(ErrorKind::invalid_parameter, "site outside chain");
        const int i = geo.site_index(x);
        return Event("surrounded(" + std::to_string(x) + ")", true, [i](const LeafView& v) {
            return !has_winding_loops(*v.loops) && loopchain::surrounded(*v.loops, i);
        });
    }

    static Event no_winding() {
        return Event("no_winding", true, [](const LeafView& v) { return !has_winding_loops(*v.loops); });
    }

    static Event omega_alpha(const TimeGrid& grid, int alpha) {
        require_alpha(grid, alpha);
        return Event("omega_alpha(" + std::to_string(alpha) + ")", true,
                     [alpha](const LeafView& v) { return omega_alpha_member(v.loops->index(), alpha); });
    }

    static Event omega_any() {
        return Event("omega_any", true, [](const LeafView& v) { return loopchain::omega_any(v.loops->index()).has_value(); });
    }

    static Event empty_config() {
        return Event("empty", false, [](const LeafView& v) { return v.config.empty(); });
    }

    static Event both(const Event& a, const Event& b) {
        return Event(a.name() + "&" + b.name(), a.needs_loops() || b.needs_loops(),
                     [a, b](const LeafView& v) { return a(v) && b(v); });
    }

    static Event predicate(std::string name, bool needs_loops, Predicate fn) {
        return Event(std::move(name), needs_loops, std::move(fn));
    }

private:
    Event(std::string name, bool needs_loops, Predicate fn)
        : name_(std::move(name)), needs_loops_(needs_loops), fn_(std::move(fn)) {}

    std::string name_;
    bool needs_loops_;
    Predicate fn_;
};

/// counts[k][L] = number of configurations with k bars and L loops (restricted to an event).
using CountTable = std::vector<std::vector<std::uint64_t>>;

/// Sum of counts[k][L] n^{-k} q^{L-k}, compensated.
inline long double weigh_counts(const CountTable& counts, int n, int q) {
    CompensatedSum s;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        for (std::size_t L = 0; L < counts[k].size(); ++L) {
            if (counts[k][L] == 0) continue;
            const long double w = std::pow(static_cast<long double>(n), -static_cast<long double>(k)) *
                                  std::pow(static_cast<long double>(q), static_cast<long double>(L) - static_cast<long double>(k));
            s.add(static_cast<long double>(counts[k][L]) * w);
        }
    }
    return s.value();
}

struct ExactResult {
    long double Z = 0.0L;
    long double n_configs = 0.0L;
    std::map<std::string, long double> event_probabilities;
    CountTable counts;                            // depth-first route only
    std::map<std::string, CountTable> event_counts;  // depth-first route only
    std::vector<std::vector<long double>> connection;  // P(i <-> j) by site index, transfer route only
};

struct EnumerationOptions {
    double budget = 1e8;  // maximum number of configurations visited by the depth-first route
};

namespace detail {

inline std::vector<int> circle_order(const TimeGrid& grid) {
    std::vector<int> order;
    for (int k = 1; k <= grid.slot_max(); ++k) order.push_back(k);
    for (int k = grid.slot_min(); k < 0; ++k) order.push_back(k);
    return order;
}

inline double config_space_size(const ChainGeometry& geo, const TimeGrid& grid) {
    return std::pow(static_cast<double>(geo.num_edges() + 1), grid.num_slots());
}

/// Loop count and time-0 labels after gluing top i to bottom i.
inline int close_pattern(const int* pair, int m, std::vector<int>& label) {
    std::vector<char> seen(2 * m, 0);
    label.assign(m, -1);
    int cycles = 0;
    for (int start = 0; start < m; ++start) {
        if (seen[start]) continue;
        int p = start;
        do {
            seen[p] = 1;
            if (p < m) label[p] = cycles;
            const int partner = pair[p];
            seen[partner] = 1;
            if (partner < m) label[partner] = cycles;
            p = partner < m ? partner + m : partner - m;  // glue edge
        } while (p != start);
        ++cycles;
    }
    return cycles;
}

class DepthFirst {
public:
    DepthFirst(const ChainGeometry& geo, const TimeGrid& grid, const std::vector<Event>& events)
        : geo_(geo), grid_(grid), events_(events), order_(circle_order(grid)), m_(geo.num_sites()) {
        const int N = grid.num_slots();
        counts_.assign(N + 1, std::vector<std::uint64_t>(m_ + N + 1, 0));
        event_counts_.assign(events.size(), counts_);
        for (const auto& e : events) needs_loops_ = needs_loops_ || e.needs_loops();
    }

    void run() {
        std::vector<int> pair(2 * m_);
        for (int i = 0; i < m_; ++i) {
            pair[i] = m_ + i;
            pair[m_ + i] = i;
        }
        recurse(0, pair, 0);
    }

    const CountTable& counts() const { return counts_; }
    const std::vector<CountTable>& event_counts() const { return event_counts_; }

private:
    void recurse(std::size_t depth, const std::vector<int>& pair, int closed) {
        if (depth == order_.size()) {
            leaf(pair, closed);
            return;
        }
        recurse(depth + 1, pair, closed);
        const int slot = order_[depth];
        for (int e = 0; e < geo_.num_edges(); ++e) {
            std::vector<int> next = pair;
            const int ti = m_ + e, tj = m_ + e + 1;
            int c = closed;
            const int a = next[ti], b = next[tj];
            if (a == tj) {
                ++c;
            } else {
                next[a] = b;
                next[b] = a;
            }
            next[ti] = tj;
            next[tj] = ti;
            bars_.push_back({e, slot});
            recurse(depth + 1, next, c);
            bars_.pop_back();
        }
    }

    void leaf(const std::vector<int>& pair, int closed) {
        const int L = closed + close_pattern(pair.data(), m_, label_);
        const int k = static_cast<int>(bars_.size());
        ++counts_[k][L];
        if (events_.empty()) return;
        const BarConfiguration config(bars_);
        std::optional<LoopSet> loops;
        if (needs_loops_) loops.emplace(geo_, grid_, config);
        const LeafView view{config, loops ? &*loops : nullptr, L, label_};
        for (std::size_t i = 0; i < events_.size(); ++i) {
            if (events_[i](view)) ++event_counts_[i][k][L];
        }
    }

    const ChainGeometry& geo_;
    const TimeGrid& grid_;
    const std::vector<Event>& events_;
    std::vector<int> order_;
    int m_;
    bool needs_loops_ = false;
    std::vector<Bar> bars_;
    std::vector<int> label_;
    CountTable counts_;
    std::vector<CountTable> event_counts_;
};

}  // namespace detail

/// Depth-first enumeration of every configuration; exact integer tables of (bars, loops).
inline ExactResult enumerate(const ChainGeometry& geo, const TimeGrid& grid, int q, const std::vector<Event>& events,
                             const EnumerationOptions& opts = {}) {
    if (q < 2) throw Error(ErrorKind::invalid_parameter, "q must be >= 2");
    const double size = detail::config_space_size(geo, grid);
    if (size > opts.budget) throw Error(ErrorKind::too_large_instance, "configuration space exceeds the enumeration budget");
    detail::DepthFirst dfs(geo, grid, events);
    dfs.run();
    ExactResult r;
    r.counts = dfs.counts();
    r.n_configs = 0.0L;
    for (const auto& row : r.counts) {
        for (auto c : row) r.n_configs += static_cast<long double>(c);
    }
    r.Z = weigh_counts(r.counts, grid.n(), q);
    for (std::size_t i = 0; i < events.size(); ++i) {
        r.event_counts[events[i].name()] = dfs.event_counts()[i];
        r.event_probabilities[events[i].name()] = weigh_counts(dfs.event_counts()[i], grid.n(), q) / r.Z;
    }
    return r;
}

inline ExactResult enumerate_Z(const ChainGeometry& geo, const TimeGrid& grid, int q, const EnumerationOptions& opts = {}) {
    return enumerate(geo, grid, q, {}, opts);
}

inline long double exact_probability(const ChainGeometry& geo, const TimeGrid& grid, int q, const Event& event,
                                     const EnumerationOptions& opts = {}) {
    return enumerate(geo, grid, q, {event}, opts).event_probabilities.at(event.name());
}

/// Same sums grouped by link pattern: Z and all time-0 connection probabilities, for
/// instances far beyond the depth-first budget (ell <= 4).
inline ExactResult transfer_enumerate(const ChainGeometry& geo, const TimeGrid& grid, int q) {
    if (q < 2) throw Error(ErrorKind::invalid_parameter, "q must be >= 2");
    const int m = geo.num_sites();
    if (2 * m > 16) throw Error(ErrorKind::too_large_instance, "transfer enumeration supports ell <= 4");

    auto pack = [m](const int* pair) {
        std::uint64_t key = 0;
        for (int p = 0; p < 2 * m; ++p) key |= static_cast<std::uint64_t>(pair[p]) << (4 * p);
        return key;
    };
    auto unpack = [m](std::uint64_t key, int* pair) {
        for (int p = 0; p < 2 * m; ++p) pair[p] = static_cast<int>((key >> (4 * p)) & 0xF);
    };

    std::array<int, 16> pair{};
    for (int i = 0; i < m; ++i) {
        pair[i] = m + i;
        pair[m + i] = i;
    }
    std::unordered_map<std::uint64_t, long double> layer{{pack(pair.data()), 1.0L}};
    const long double bar_weight = 1.0L / (static_cast<long double>(grid.n()) * q);

    for (int step = 0; step < grid.num_slots(); ++step) {
        std::unordered_map<std::uint64_t, long double> next;
        next.reserve(layer.size() * 2);
        for (const auto& [key, w] : layer) {
            next[key] += w;
            unpack(key, pair.data());
            for (int e = 0; e + 1 < m; ++e) {
                std::array<int, 16> p = pair;
                const int ti = m + e, tj = m + e + 1;
                long double f = bar_weight;
                const int a = p[ti], b = p[tj];
                if (a == tj) {
                    f *= q;
                } else {
                    p[a] = b;
                    p[b] = a;
                }
                p[ti] = tj;
                p[tj] = ti;
                next[pack(p.data())] += w * f;
            }
        }
        layer = std::move(next);
    }

    // Deterministic accumulation order.
    std::map<std::uint64_t, long double> ordered(layer.begin(), layer.end());
    CompensatedSum z;
    std::vector<std::vector<CompensatedSum>> conn(m, std::vector<CompensatedSum>(m));
    std::vector<int> label;
    for (const auto& [key, w] : ordered) {
        unpack(key, pair.data());
        const int cycles = detail::close_pattern(pair.data(), m, label);
        const long double weight = w * std::pow(static_cast<long double>(q), cycles);
        z.add(weight);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (label[i] == label[j]) conn[i][j].add(weight);
            }
        }
    }
    ExactResult r;
    r.Z = z.value();
    r.n_configs = std::pow(static_cast<long double>(geo.num_edges() + 1), grid.num_slots());
    r.connection.assign(m, std::vector<long double>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) r.connection[i][j] = conn[i][j].value() / r.Z;
    }
    return r;
}

/// Two-site closed form q^2 - 1 + (1 + 1/n)^{2 beta n - 1}.
inline long double two_site_Z(const TimeGrid& grid, int q) {
    return static_cast<long double>(q) * q - 1.0L +
           std::pow(1.0L + 1.0L / grid.n(), static_cast<long double>(grid.num_slots()));
}

}  // namespace loopchain
