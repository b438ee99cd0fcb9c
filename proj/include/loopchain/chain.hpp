#pragma once

// Chain geometry, discrete time circle and double-bar configurations.
//
// Index conventions used throughout the library:
//   site index  i in [0, 2*ell)     <->  coordinate x = i - ell + 1
//   edge index  e in [0, 2*ell - 1)  joins sites e and e + 1; E1 iff e is even
//   slot        k in {-beta*n + 1, ..., beta*n} \ {0}, time k / n; slot beta*n
//               is the identified endpoint -beta == beta.

#include "error.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace loopchain {

/// Spin magnitude stored as 2S; the loop model only consumes q = 2S + 1.
class SpinWeight {
public:
    explicit SpinWeight(int twice_s) : twice_s_(twice_s) {
        if (twice_s < 1) {
            throw Error(ErrorKind::invalid_parameter, "twice_S must be a positive integer");
        }
    }

    static SpinWeight from_q(int q) { return SpinWeight(q - 1); }

    int twice_s() const noexcept { return twice_s_; }
    int q() const noexcept { return twice_s_ + 1; }
    double spin() const noexcept { return 0.5 * twice_s_; }
    double casimir() const noexcept { return spin() * (spin() + 1.0); }

    friend bool operator==(SpinWeight, SpinWeight) = default;

private:
    int twice_s_;
};

enum class EdgeClass { E1, E2 };

class ChainGeometry {
public:
    explicit ChainGeometry(int ell) : ell_(ell) {
        if (ell < 1) {
            throw Error(ErrorKind::invalid_parameter, "ell must be >= 1");
        }
    }

    int ell() const noexcept { return ell_; }
    int num_sites() const noexcept { return 2 * ell_; }
    int num_edges() const noexcept { return 2 * ell_ - 1; }

    int site_coord(int site) const noexcept { return site - ell_ + 1; }
    int site_index(int x) const noexcept { return x + ell_ - 1; }
    bool has_site_coord(int x) const noexcept { return x >= -ell_ + 1 && x <= ell_; }

    /// Coordinate of the left endpoint of edge `e`.
    int edge_left_coord(int edge) const noexcept { return edge - ell_ + 1; }
    int edge_from_left_coord(int x) const noexcept { return x + ell_ - 1; }
    bool valid_edge(int edge) const noexcept { return edge >= 0 && edge < num_edges(); }

    EdgeClass edge_class(int edge) const noexcept { return edge % 2 == 0 ? EdgeClass::E1 : EdgeClass::E2; }
    bool is_e1(int edge) const noexcept { return edge % 2 == 0; }

    std::vector<int> site_coords() const {
        std::vector<int> xs(num_sites());
        for (int i = 0; i < num_sites(); ++i) xs[i] = site_coord(i);
        return xs;
    }

    std::vector<int> edges_of_class(EdgeClass c) const {
        std::vector<int> out;
        for (int e = 0; e < num_edges(); ++e) {
            if (edge_class(e) == c) out.push_back(e);
        }
        return out;
    }

    /// Interior E1 bonds {x, x+1} with x in {-ell+3, -ell+5, ..., ell-1}, as edge indices.
    std::vector<int> interior_e1_edges() const {
        std::vector<int> out;
        for (int e = 2; e < num_edges(); e += 2) out.push_back(e);
        return out;
    }

    friend bool operator==(const ChainGeometry&, const ChainGeometry&) = default;

private:
    int ell_;
};

inline ChainGeometry build_geometry(int ell) { return ChainGeometry(ell); }

class TimeGrid {
public:
    TimeGrid(int beta, int n) : beta_(beta), n_(n) {
        if (beta < 1) throw Error(ErrorKind::invalid_parameter, "beta must be a positive integer");
        if (n < 1) throw Error(ErrorKind::invalid_parameter, "n must be a positive integer");
    }

    int beta() const noexcept { return beta_; }
    int n() const noexcept { return n_; }

    /// Number of points on the time circle, slot 0 included.
    int circumference() const noexcept { return 2 * beta_ * n_; }
    int num_slots() const noexcept { return 2 * beta_ * n_ - 1; }
    int slot_min() const noexcept { return -beta_ * n_ + 1; }
    int slot_max() const noexcept { return beta_ * n_; }

    bool valid_slot(int k) const noexcept { return k != 0 && k >= slot_min() && k <= slot_max(); }

    /// Position of slot k on the circle, in [0, circumference); slot 0 maps to beta*n - 1.
    int position(int k) const noexcept { return k - slot_min(); }

    /// Bijection between [0, num_slots) and the usable slots, in increasing slot order.
    int slot_from_ordinal(int ordinal) const noexcept {
        const int k = slot_min() + ordinal;
        return k >= 0 ? k + 1 : k;
    }
    int ordinal_from_slot(int k) const noexcept { return k > 0 ? k - slot_min() - 1 : k - slot_min(); }

    /// Cyclic distance travelling upwards from slot `from` to slot `to`; full circle if equal.
    int up_distance(int from, int to) const noexcept {
        int d = position(to) - position(from);
        if (d <= 0) d += circumference();
        return d;
    }

    /// Reduces any integer time index onto the circle's slot range (−βn ≡ βn).
    int wrap(int k) const noexcept {
        const int c = circumference();
        int p = (k - slot_min()) % c;
        if (p < 0) p += c;
        return p + slot_min();
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    int beta_;
    int n_;
};

struct Bar {
    int edge = 0;
    int slot = 0;

    friend bool operator==(const Bar&, const Bar&) = default;
    friend auto operator<=>(const Bar& a, const Bar& b) {
        if (auto c = a.slot <=> b.slot; c != 0) return c;
        return a.edge <=> b.edge;
    }
};

/// A finite set of double bars, kept sorted by (slot, edge).
class BarConfiguration {
public:
    BarConfiguration() = default;
    explicit BarConfiguration(std::vector<Bar> bars) : bars_(std::move(bars)) {
        std::sort(bars_.begin(), bars_.end());
        bars_.erase(std::unique(bars_.begin(), bars_.end()), bars_.end());
    }

    const std::vector<Bar>& bars() const noexcept { return bars_; }
    std::size_t size() const noexcept { return bars_.size(); }
    bool empty() const noexcept { return bars_.empty(); }

    bool contains(const Bar& b) const { return std::binary_search(bars_.begin(), bars_.end(), b); }

    bool slot_occupied(int slot) const {
        auto it = std::lower_bound(bars_.begin(), bars_.end(), Bar{-1, slot});
        return it != bars_.end() && it->slot == slot;
    }

    BarConfiguration with(const Bar& b) const {
        auto copy = bars_;
        copy.push_back(b);
        return BarConfiguration(std::move(copy));
    }

    BarConfiguration without(const Bar& b) const {
        auto copy = bars_;
        copy.erase(std::remove(copy.begin(), copy.end(), b), copy.end());
        return BarConfiguration(std::move(copy));
    }

    friend bool operator==(const BarConfiguration&, const BarConfiguration&) = default;

private:
    std::vector<Bar> bars_;
};

enum class ViolationKind { zero_time_bar, slot_collision, invalid_edge, invalid_slot };

inline std::string_view to_string(ViolationKind v) {
    switch (v) {
        case ViolationKind::zero_time_bar: return "zero-time-bar";
        case ViolationKind::slot_collision: return "slot-collision";
        case ViolationKind::invalid_edge: return "invalid-edge";
        case ViolationKind::invalid_slot: return "invalid-slot";
    }
    return "unknown";
}

struct Violation {
    ViolationKind kind;
    Bar bar;
};

struct ValidityReport {
    std::vector<Violation> violations;

    bool valid() const noexcept { return violations.empty(); }
    bool has(ViolationKind kind) const {
        return std::any_of(violations.begin(), violations.end(),
                           [kind](const Violation& v) { return v.kind == kind; });
    }
    std::string summary() const {
        std::ostringstream os;
        for (const auto& v : violations) {
            os << to_string(v.kind) << "(edge=" << v.bar.edge << ",slot=" << v.bar.slot << ") ";
        }
        return os.str();
    }
};

/// Reports every reason `config` is not an element of Omega_{ell,n}.
inline ValidityReport validate_config(const ChainGeometry& geometry, const TimeGrid& grid,
                                      const BarConfiguration& config) {
    ValidityReport report;
    const auto& bars = config.bars();
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const Bar& b = bars[i];
        if (!geometry.valid_edge(b.edge)) report.violations.push_back({ViolationKind::invalid_edge, b});
        if (b.slot == 0) {
            report.violations.push_back({ViolationKind::zero_time_bar, b});
        } else if (!grid.valid_slot(b.slot)) {
            report.violations.push_back({ViolationKind::invalid_slot, b});
        }
        if (i > 0 && bars[i - 1].slot == b.slot) {
            report.violations.push_back({ViolationKind::slot_collision, b});
        }
    }
    return report;
}

inline void require_valid(const ChainGeometry& geometry, const TimeGrid& grid, const BarConfiguration& config) {
    auto report = validate_config(geometry, grid, config);
    if (!report.valid()) {
        const auto kind = report.has(ViolationKind::slot_collision) ? ErrorKind::slot_collision
                                                                    : ErrorKind::invalid_config;
        throw Error(kind, report.summary());
    }
}

/// One line per bar, "edge_left_site,slot", in canonical order.
inline std::string serialize(const ChainGeometry& geometry, const BarConfiguration& config) {
    std::ostringstream os;
    for (const auto& b : config.bars()) os << geometry.edge_left_coord(b.edge) << ',' << b.slot << '\n';
    return os.str();
}

inline BarConfiguration deserialize(const ChainGeometry& geometry, const std::string& text) {
    std::vector<Bar> bars;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorKind::invalid_config, "bad bar line '" + line + "'");
        try {
            const int x = std::stoi(line.substr(0, comma));
            const int k = std::stoi(line.substr(comma + 1));
            bars.push_back({geometry.edge_from_left_coord(x), k});
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::invalid_config, "bad bar line '" + line + "'");
        }
    }
    return BarConfiguration(std::move(bars));
}

/// One bar per E1 edge at the given slots (the dimer background), cycling through `slots`.
inline BarConfiguration dimer_pattern(const ChainGeometry& geometry, const std::vector<int>& slots) {
    std::vector<Bar> bars;
    std::size_t next = 0;
    for (int e : geometry.edges_of_class(EdgeClass::E1)) {
        bars.push_back({e, slots.at(next++)});
    }
    return BarConfiguration(std::move(bars));
}

}  // namespace loopchain
