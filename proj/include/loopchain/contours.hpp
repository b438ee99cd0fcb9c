#pragma once

// Long loops, interiors and the events driving the Peierls argument.
//
// Interior membership uses a Jordan parity count along a horizontal line: a point is
// enclosed by a non-winding loop iff the loop crosses the line an odd number of times
// to its left. Space-time cells (edge e, slot k) are tested on the line at height
// k + 1/2, which is bar-free, so a bar cell is classified like the region just above it.

#include "loops.hpp"

#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

namespace loopchain {

enum class LoopKind { short_loop, long_loop };

inline bool is_long(const Loop& loop) { return loop.site_support.size() >= 3; }

inline std::vector<LoopKind> classify_loops(const LoopSet& loops) {
    std::vector<LoopKind> kinds;
    kinds.reserve(loops.loops().size());
    for (const auto& l : loops.loops()) kinds.push_back(is_long(l) ? LoopKind::long_loop : LoopKind::short_loop);
    return kinds;
}

/// Ids of loops with nonzero winding number.
inline std::vector<int> winding_filter(const LoopSet& loops) {
    std::vector<int> ids;
    for (const auto& l : loops.loops()) {
        if (l.winding != 0) ids.push_back(l.id);
    }
    return ids;
}

inline bool has_winding_loops(const LoopSet& loops) {
    for (const auto& l : loops.loops()) {
        if (l.winding != 0) return true;
    }
    return false;
}

inline bool on_loop(const LoopSet& loops, int loop_id, int site, int slot = 0) {
    return loops.loop_above(site, slot) == loop_id;
}

namespace detail {

inline void require_non_winding(const LoopSet& loops, int loop_id) {
    if (loops.loops().at(loop_id).winding != 0) {
        throw Error(ErrorKind::not_applicable, "winding loop has no interior");
    }
}

}  // namespace detail

/// Whether (site, slot + 1/2) is strictly enclosed by the loop (site is a site index).
/// Points on the loop itself return false; use on_loop for those.
inline bool interior_contains(const LoopSet& loops, int loop_id, int site, int slot = 0) {
    detail::require_non_winding(loops, loop_id);
    if (on_loop(loops, loop_id, site, slot)) return false;
    int crossings = 0;
    for (int y = 0; y < site; ++y) crossings += loops.loop_above(y, slot) == loop_id;
    return crossings % 2 == 1;
}

/// Same test counting crossings to the right of the point.
inline bool interior_contains_from_right(const LoopSet& loops, int loop_id, int site, int slot = 0) {
    detail::require_non_winding(loops, loop_id);
    if (on_loop(loops, loop_id, site, slot)) return false;
    int crossings = 0;
    for (int y = site + 1; y < loops.geometry().num_sites(); ++y) crossings += loops.loop_above(y, slot) == loop_id;
    return crossings % 2 == 1;
}

/// (site, 0) lies on a long loop or inside one. Requires a winding-free configuration.
inline bool surrounded(const LoopSet& loops, int site) {
    if (has_winding_loops(loops)) {
        throw Error(ErrorKind::not_applicable, "surround event needs a configuration without winding loops");
    }
    const int here = loops.loop_at_time0(site);
    if (is_long(loops.loops()[here])) return true;
    for (const auto& l : loops.loops()) {
        if (is_long(l) && interior_contains(loops, l.id, site, 0)) return true;
    }
    return false;
}

/// Surround indicator for every site at once: one parity sweep per long loop.
inline std::vector<char> surrounded_all(const LoopSet& loops) {
    if (has_winding_loops(loops)) {
        throw Error(ErrorKind::not_applicable, "surround event needs a configuration without winding loops");
    }
    const int m = loops.geometry().num_sites();
    std::vector<char> out(m, 0);
    for (int s = 0; s < m; ++s) out[s] = is_long(loops.loops()[loops.loop_at_time0(s)]);
    for (const auto& l : loops.loops()) {
        if (!is_long(l)) continue;
        int parity = 0;
        for (int s = 0; s < m; ++s) {
            const bool on = loops.loop_at_time0(s) == l.id;
            if (!on && parity) out[s] = 1;
            parity ^= on;
        }
    }
    return out;
}

/// E_x event for site coordinate x.
inline bool event_Ex(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config, int x) {
    auto loops = trace_loops(geometry, grid, config);
    return surrounded(loops, geometry.site_index(x));
}

inline void require_alpha(const TimeGrid& grid, int alpha) {
    if (alpha < -grid.beta() || alpha >= grid.beta()) {
        throw Error(ErrorKind::invalid_parameter, "alpha must satisfy -beta <= alpha < beta");
    }
}

/// Window [alpha, alpha+1] holds at least one bar on every E1 edge and none on E2 edges.
inline bool omega_alpha_member(const SegmentIndex& index, int alpha) {
    const auto& grid = index.grid();
    const auto& geo = index.geometry();
    require_alpha(grid, alpha);
    const int n = grid.n();
    int e1_hit = 0;
    std::vector<char> seen(geo.num_edges(), 0);
    for (int t = alpha * n; t <= (alpha + 1) * n; ++t) {
        const int k = grid.wrap(t);
        if (k == 0) continue;
        const int e = index.edge_at(k);
        if (e < 0) continue;
        if (!geo.is_e1(e)) return false;
        if (!seen[e]) {
            seen[e] = 1;
            ++e1_hit;
        }
    }
    return e1_hit == geo.ell();
}

inline bool omega_alpha_member(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config,
                               int alpha) {
    require_valid(geometry, grid, config);
    return omega_alpha_member(SegmentIndex(geometry, grid, config), alpha);
}

/// Smallest alpha in [-beta, beta) with the configuration in Omega^alpha, if any.
inline std::optional<int> omega_any(const SegmentIndex& index) {
    for (int a = -index.grid().beta(); a < index.grid().beta(); ++a) {
        if (omega_alpha_member(index, a)) return a;
    }
    return std::nullopt;
}

struct ContourInfo {
    int loop_id = 0;
    int n_bars = 0;
    long int1_size = 0;
    long int2_size = 0;
    double length_L = 0.0;         // from |int1| - |int2| = n L / 2
    double vertical_length = 0.0;  // summed vertical legs, time units
    long support_cells = 0;        // space-time edges with an endpoint on the loop
    std::vector<int> support_edges;
    bool has_e2_bar = false;
    bool is_external = false;
    bool encloses_origin = false;

    /// Vertical-leg sum and length_L agree within |gamma| / n.
    bool leg_consistent(const TimeGrid& grid) const {
        return std::abs(length_L - vertical_length) <= static_cast<double>(n_bars) / grid.n() + 1e-12;
    }
};

/// Geometry of a non-winding long loop.
inline ContourInfo contour_geometry(const LoopSet& loops, int loop_id) {
    const auto& loop = loops.loops().at(loop_id);
    detail::require_non_winding(loops, loop_id);
    if (!is_long(loop)) throw Error(ErrorKind::not_applicable, "contour geometry needs a long loop");

    const auto& geo = loops.geometry();
    const auto& grid = loops.grid();
    const int m = geo.num_sites();

    ContourInfo info;
    info.loop_id = loop_id;
    info.n_bars = loop.n_bars;
    info.vertical_length = loop.vertical_time(grid);

    std::vector<char> edge_touched(geo.num_edges(), 0);
    std::vector<char> on(m);
    for (int pos = 0; pos < grid.circumference(); ++pos) {
        const int k = pos + grid.slot_min();
        for (int s = 0; s < m; ++s) on[s] = loops.loop_above(s, k) == loop_id;
        int parity = 0;
        for (int e = 0; e < geo.num_edges(); ++e) {
            parity ^= on[e];
            if (parity) {
                (geo.is_e1(e) ? info.int1_size : info.int2_size) += 1;
            }
            if (on[e] || on[e + 1]) {
                ++info.support_cells;
                edge_touched[e] = 1;
            }
        }
    }
    for (int e = 0; e < geo.num_edges(); ++e) {
        if (edge_touched[e]) info.support_edges.push_back(e);
    }
    info.length_L = 2.0 * static_cast<double>(info.int1_size - info.int2_size) / grid.n();

    const auto& index = loops.index();
    for (int slot : loop.bar_slots) {
        if (!geo.is_e1(index.edge_at(slot))) info.has_e2_bar = true;
    }

    // A point of this loop: just above the lower bar of its first segment.
    const SegmentRef rep = loop.segments.front();
    const auto& rep_slots = index.slots_of(rep.site);
    const int rep_height = rep_slots.empty() ? 0 : rep_slots[rep.index];
    bool enclosed = false;
    for (const auto& other : loops.loops()) {
        if (other.id == loop_id || other.winding != 0 || !is_long(other)) continue;
        if (interior_contains(loops, other.id, rep.site, rep_height)) {
            enclosed = true;
            break;
        }
    }
    info.is_external = info.has_e2_bar && !enclosed;

    const int origin = geo.site_index(0);
    info.encloses_origin = on_loop(loops, loop_id, origin, 0) || interior_contains(loops, loop_id, origin, 0);
    return info;
}

/// Contour census of one configuration: every non-winding long loop.
inline std::vector<ContourInfo> contour_census(const LoopSet& loops) {
    std::vector<ContourInfo> out;
    for (const auto& l : loops.loops()) {
        if (l.winding == 0 && is_long(l)) out.push_back(contour_geometry(loops, l.id));
    }
    return out;
}

inline void write_contour_csv_header(std::ostream& os) {
    os << "sample,loop_id,n_bars,length_L,int1,int2,external,encloses_origin\n";
}

inline void write_contour_csv_row(std::ostream& os, long sample, const ContourInfo& c) {
    os << sample << ',' << c.loop_id << ',' << c.n_bars << ',' << c.length_L << ',' << c.int1_size << ','
       << c.int2_size << ',' << (c.is_external ? 1 : 0) << ',' << (c.encloses_origin ? 1 : 0) << '\n';
}

}  // namespace loopchain
