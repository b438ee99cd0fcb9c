#pragma once

// Loop decomposition of a double-bar configuration.
//
// Each site carries a time circle cut into segments by the bars incident to it.
// A bar on edge {i, i+1} at slot k joins the two segments ending at k ("below
// pair") and the two segments starting at k ("above pair"); a trajectory that
// reaches a bar jumps across it and reverses its time direction.

#include "chain.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

namespace loopchain {

struct SegmentRef {
    int site = 0;   // site index
    int index = 0;  // position of the segment's lower bar in the site's slot list

    friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
};

/// Per-site ordered bar slots plus a slot -> edge table; supports local loop walks
/// and O(bars-per-site) insertion/removal.
class SegmentIndex {
public:
    SegmentIndex(const ChainGeometry& geometry, const TimeGrid& grid)
        : geometry_(geometry), grid_(grid), site_slots_(geometry.num_sites()),
          edge_at_(grid.circumference(), -1) {}

    SegmentIndex(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config)
        : SegmentIndex(geometry, grid) {
        for (const auto& b : config.bars()) insert(b);
    }

    const ChainGeometry& geometry() const noexcept { return geometry_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t num_bars() const noexcept { return num_bars_; }

    bool occupied(int slot) const { return edge_at_[grid_.position(slot)] >= 0; }
    int edge_at(int slot) const { return edge_at_[grid_.position(slot)]; }

    const std::vector<int>& slots_of(int site) const { return site_slots_[site]; }
    int num_segments(int site) const { return std::max<int>(1, static_cast<int>(site_slots_[site].size())); }

    void insert(const Bar& b) {
        if (occupied(b.slot)) throw Error(ErrorKind::slot_collision, "slot already holds a bar");
        edge_at_[grid_.position(b.slot)] = b.edge;
        for (int s : {b.edge, b.edge + 1}) {
            auto& v = site_slots_[s];
            v.insert(std::upper_bound(v.begin(), v.end(), b.slot), b.slot);
        }
        ++num_bars_;
    }

    void erase(const Bar& b) {
        assert(edge_at(b.slot) == b.edge);
        edge_at_[grid_.position(b.slot)] = -1;
        for (int s : {b.edge, b.edge + 1}) {
            auto& v = site_slots_[s];
            v.erase(std::lower_bound(v.begin(), v.end(), b.slot));
        }
        --num_bars_;
    }

    /// Segment of `site` that contains time k + 1/2 (equivalently time k when no bar sits at k).
    SegmentRef segment_above(int site, int k) const {
        const auto& v = site_slots_[site];
        const int m = static_cast<int>(v.size());
        if (m == 0) return {site, 0};
        const int p = static_cast<int>(std::upper_bound(v.begin(), v.end(), k) - v.begin());
        return {site, (p - 1 + m) % m};
    }

    SegmentRef segment_at_time0(int site) const { return segment_above(site, 0); }

    /// Length in slot units; a bar-free site is one full-circle segment.
    int segment_length(SegmentRef s) const {
        const auto& v = site_slots_[s.site];
        const int m = static_cast<int>(v.size());
        if (m == 0) return grid_.circumference();
        return grid_.up_distance(v[s.index], v[(s.index + 1) % m]);
    }

    /// Follows the loop through `start`, calling `visit(segment, going_up, length, end_slot)` for
    /// each traversed segment; `end_slot` is the bar reached at the segment's far end (0 for a
    /// full circle). Stops early when `visit` returns false.
    template <class Visitor>
    void walk(SegmentRef start, bool up, Visitor&& visit) const {
        SegmentRef seg = start;
        bool dir = up;
        do {
            const auto& v = site_slots_[seg.site];
            const int m = static_cast<int>(v.size());
            if (m == 0) {
                visit(seg, dir, grid_.circumference(), 0);
                return;
            }
            const int lower = v[seg.index];
            const int upper = v[(seg.index + 1) % m];
            const int bar = dir ? upper : lower;
            if (!visit(seg, dir, grid_.up_distance(lower, upper), bar)) return;
            const int e = edge_at(bar);
            const int other = (e == seg.site) ? seg.site + 1 : seg.site - 1;
            const auto& w = site_slots_[other];
            const int mw = static_cast<int>(w.size());
            const int j = static_cast<int>(std::lower_bound(w.begin(), w.end(), bar) - w.begin());
            if (dir) {
                seg = {other, (j - 1 + mw) % mw};
            } else {
                seg = {other, j};
            }
            dir = !dir;
        } while (!(seg == start));
        assert(dir == up);
    }

    bool same_loop(SegmentRef a, SegmentRef b) const {
        if (a == b) return true;
        bool found = false;
        walk(a, true, [&](SegmentRef s, bool, int, int) {
            if (s == b) {
                found = true;
                return false;
            }
            return true;
        });
        return found;
    }

    /// Change in loop count from inserting `b` into an unoccupied slot: +1 iff the two
    /// endpoints of the new bar already lie on one loop.
    int delta_insert(const Bar& b) const {
        if (occupied(b.slot)) throw Error(ErrorKind::slot_collision, "slot already holds a bar");
        return same_loop(segment_above(b.edge, b.slot), segment_above(b.edge + 1, b.slot)) ? +1 : -1;
    }

    /// Change in loop count from removing the present bar `b`.
    int delta_erase(const Bar& b) const {
        const auto& v = site_slots_[b.edge];
        const int m = static_cast<int>(v.size());
        const int j = static_cast<int>(std::lower_bound(v.begin(), v.end(), b.slot) - v.begin());
        const SegmentRef above{b.edge, j};
        const SegmentRef below{b.edge, (j - 1 + m) % m};
        return same_loop(above, below) ? +1 : -1;
    }

private:
    ChainGeometry geometry_;
    TimeGrid grid_;
    std::vector<std::vector<int>> site_slots_;
    std::vector<int> edge_at_;  // indexed by circle position
    std::size_t num_bars_ = 0;
};

struct Loop {
    int id = 0;
    std::vector<SegmentRef> segments;
    std::vector<int> site_support;  // site indices, ascending
    int winding = 0;
    int n_bars = 0;   // distinct double bars touched
    std::vector<int> bar_slots;  // slots of those bars, ascending
    int n_jumps = 0;  // jumps along the trajectory (always even)
    long vertical_extent = 0;  // slot units

    double vertical_time(const TimeGrid& grid) const { return static_cast<double>(vertical_extent) / grid.n(); }
    int site_min() const { return site_support.front(); }
    int site_max() const { return site_support.back(); }
};

class LoopSet {
public:
    LoopSet(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config)
        : index_(geometry, grid, config) {
        build();
    }

    explicit LoopSet(SegmentIndex index) : index_(std::move(index)) { build(); }

    const SegmentIndex& index() const noexcept { return index_; }
    const ChainGeometry& geometry() const noexcept { return index_.geometry(); }
    const TimeGrid& grid() const noexcept { return index_.grid(); }
    const std::vector<Loop>& loops() const noexcept { return loops_; }
    int total_loops() const noexcept { return static_cast<int>(loops_.size()); }

    int loop_of(SegmentRef s) const { return segment_loop_[offset_[s.site] + s.index]; }
    int loop_at_time0(int site) const { return time0_loop_[site]; }
    /// Loop containing (site, k + 1/2).
    int loop_above(int site, int k) const { return loop_of(index_.segment_above(site, k)); }

    bool connected_sites(int i, int j) const { return time0_loop_[i] == time0_loop_[j]; }

    long total_vertical_extent() const {
        long s = 0;
        for (const auto& l : loops_) s += l.vertical_extent;
        return s;
    }

    /// CSV rows "id,winding,n_bars,site_min,site_max,vertical_extent" (sites as coordinates,
    /// extent in time units).
    void write_csv(std::ostream& os) const {
        os << "id,winding,n_bars,site_min,site_max,vertical_extent\n";
        for (const auto& l : loops_) {
            os << l.id << ',' << l.winding << ',' << l.n_bars << ',' << geometry().site_coord(l.site_min()) << ','
               << geometry().site_coord(l.site_max()) << ',' << l.vertical_time(grid()) << '\n';
        }
    }

private:
    struct UnionFind {
        std::vector<int> parent;
        explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
        int find(int a) {
            while (parent[a] != a) {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            return a;
        }
        void unite(int a, int b) {
            a = find(a);
            b = find(b);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    };

    void build() {
        const auto& geo = geometry();
        const int sites = geo.num_sites();
        offset_.assign(sites + 1, 0);
        for (int s = 0; s < sites; ++s) offset_[s + 1] = offset_[s] + index_.num_segments(s);
        const int nseg = offset_[sites];

        auto position_in = [&](int site, int slot) {
            const auto& v = index_.slots_of(site);
            return static_cast<int>(std::lower_bound(v.begin(), v.end(), slot) - v.begin());
        };

        UnionFind uf(nseg);
        for (int pos = 0; pos < grid().circumference(); ++pos) {
            const int slot = pos + grid().slot_min();
            const int e = (slot == 0) ? -1 : index_.edge_at(slot);
            if (e < 0) continue;
            const int l = e, r = e + 1;
            const int ml = index_.num_segments(l), mr = index_.num_segments(r);
            const int jl = position_in(l, slot), jr = position_in(r, slot);
            uf.unite(offset_[l] + jl, offset_[r] + jr);
            uf.unite(offset_[l] + (jl - 1 + ml) % ml, offset_[r] + (jr - 1 + mr) % mr);
        }

        segment_loop_.assign(nseg, -1);
        std::vector<int> root_to_loop(nseg, -1);
        for (int s = 0; s < sites; ++s) {
            for (int j = 0; j < index_.num_segments(s); ++j) {
                const int root = uf.find(offset_[s] + j);
                if (root_to_loop[root] < 0) {
                    root_to_loop[root] = static_cast<int>(loops_.size());
                    Loop loop;
                    loop.id = root_to_loop[root];
                    loops_.push_back(loop);
                }
                const int id = root_to_loop[root];
                segment_loop_[offset_[s] + j] = id;
                loops_[id].segments.push_back({s, j});
                loops_[id].vertical_extent += index_.segment_length({s, j});
            }
        }

        for (auto& loop : loops_) {
            for (const auto& seg : loop.segments) loop.site_support.push_back(seg.site);
            loop.site_support.erase(std::unique(loop.site_support.begin(), loop.site_support.end()),
                                    loop.site_support.end());

            long displacement = 0;
            std::size_t visited = 0;
            std::vector<int> bars;
            index_.walk(loop.segments.front(), true, [&]([[maybe_unused]] SegmentRef seg, bool up, int len, int end_slot) {
                assert(segment_loop_[offset_[seg.site] + seg.index] == loop.id);
                ++visited;
                displacement += up ? len : -len;
                if (end_slot != 0) {
                    ++loop.n_jumps;
                    bars.push_back(end_slot);
                }
                return true;
            });
            if (visited != loop.segments.size()) {
                throw Error(ErrorKind::numerical, "loop walk and union-find partition disagree");
            }
            std::sort(bars.begin(), bars.end());
            bars.erase(std::unique(bars.begin(), bars.end()), bars.end());
            loop.n_bars = static_cast<int>(bars.size());
            loop.bar_slots = std::move(bars);
            loop.winding = static_cast<int>(displacement / grid().circumference());
        }

        time0_loop_.resize(sites);
        for (int s = 0; s < sites; ++s) time0_loop_[s] = loop_of(index_.segment_at_time0(s));
    }

    SegmentIndex index_;
    std::vector<int> offset_;
    std::vector<int> segment_loop_;
    std::vector<Loop> loops_;
    std::vector<int> time0_loop_;
};

inline LoopSet trace_loops(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config) {
    require_valid(geometry, grid, config);
    return LoopSet(geometry, grid, config);
}

inline int loop_count(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config) {
    return trace_loops(geometry, grid, config).total_loops();
}

/// +1 / -1 change of L when `new_bar` is added; computed by one local loop walk.
inline int delta_loops(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config,
                       const Bar& new_bar) {
    require_valid(geometry, grid, config);
    if (!geometry.valid_edge(new_bar.edge) || !grid.valid_slot(new_bar.slot)) {
        throw Error(ErrorKind::invalid_config, "new bar outside the configuration space");
    }
    SegmentIndex index(geometry, grid, config);
    return index.delta_insert(new_bar);
}

/// Whether (x, 0) and (y, 0) lie on the same loop; x and y are site coordinates.
inline bool connected(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config, int x,
                      int y) {
    require_valid(geometry, grid, config);
    if (!geometry.has_site_coord(x) || !geometry.has_site_coord(y)) {
        throw Error(ErrorKind::invalid_parameter, "site outside the chain");
    }
    SegmentIndex index(geometry, grid, config);
    return index.same_loop(index.segment_at_time0(geometry.site_index(x)),
                           index.segment_at_time0(geometry.site_index(y)));
}

}  // namespace loopchain
