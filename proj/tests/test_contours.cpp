#include <doctest.h>

#include "oracles.hpp"

#include <loopchain/contours.hpp>

#include <random>

using namespace loopchain;

namespace {

oracle::Raster raster_of(const LoopSet& loops, int loop_id) {
    const auto& idx = loops.index();
    std::vector<std::vector<std::array<int, 4>>> segs(loops.geometry().num_sites());
    for (const auto& s : loops.loops()[loop_id].segments) {
        const auto& v = idx.slots_of(s.site);
        const int m = static_cast<int>(v.size());
        if (m == 0) {
            segs[s.site].push_back({0, 0, -1, -1});
            continue;
        }
        const int lo = v[s.index], hi = v[(s.index + 1) % m];
        segs[s.site].push_back({lo, hi, idx.edge_at(lo), idx.edge_at(hi)});
    }
    return oracle::Raster(loops.geometry().num_sites(), loops.grid(), segs);
}

// Staircase contour on sites 0..3 (ell = 2) with corners at slots +-3, +-4, +-5.
BarConfiguration staircase() { return BarConfiguration({{0, -4}, {0, 4}, {1, -3}, {1, 3}, {2, -5}, {2, 5}}); }

int long_loop_id(const LoopSet& loops) {
    for (const auto& l : loops.loops()) {
        if (is_long(l)) return l.id;
    }
    return -1;
}

}  // namespace

TEST_CASE("classification examples") {
    const ChainGeometry g(2);
    const TimeGrid t(1, 8);
    auto kinds = classify_loops(trace_loops(g, t, {}));
    CHECK(std::all_of(kinds.begin(), kinds.end(), [](LoopKind k) { return k == LoopKind::short_loop; }));
    kinds = classify_loops(trace_loops(g, t, dimer_pattern(g, {2, 5})));
    CHECK(std::all_of(kinds.begin(), kinds.end(), [](LoopKind k) { return k == LoopKind::short_loop; }));
    const auto loops = trace_loops(g, t, staircase());
    const int id = long_loop_id(loops);
    REQUIRE(id >= 0);
    CHECK(loops.loops()[id].site_support.size() == 4);
}

TEST_CASE("winding examples") {
    const ChainGeometry g(3);
    const TimeGrid t(1, 4);
    CHECK(winding_filter(trace_loops(g, t, {})).size() == 6);
    CHECK(winding_filter(trace_loops(g, t, BarConfiguration({{0, 1}, {2, 2}, {4, 3}, {0, -1}, {2, -2}, {4, -3}}))).empty());
    CHECK(winding_filter(trace_loops(g, t, dimer_pattern(g, {1, 2, 3}))).empty());
    // single bar: up one circle on the left site, down one on the right, net zero
    const auto one = trace_loops(ChainGeometry(1), t, BarConfiguration({{0, 2}}));
    CHECK(one.loops()[0].winding == 0);
}

TEST_CASE("staircase contour interior") {
    const ChainGeometry g(2);
    const TimeGrid t(1, 8);
    const auto loops = trace_loops(g, t, staircase());
    const int id = long_loop_id(loops);
    REQUIRE(id >= 0);
    CHECK(on_loop(loops, id, 0));
    CHECK(on_loop(loops, id, 3));
    CHECK(interior_contains(loops, id, 1));
    CHECK(interior_contains(loops, id, 2));
    CHECK(!interior_contains(loops, id, 0));
    CHECK(!interior_contains(loops, id, 3));
    for (int x : g.site_coords()) CHECK(event_Ex(g, t, staircase(), x));

    const auto info = contour_geometry(loops, id);
    CHECK(info.n_bars == 6);
    CHECK(info.has_e2_bar);
    CHECK(info.is_external);
    CHECK(info.encloses_origin);
    CHECK(info.int1_size == 18);
    CHECK(info.int2_size == 6);
    CHECK(info.length_L == doctest::Approx(3.0));
    CHECK(info.vertical_length == doctest::Approx(3.0));
}

TEST_CASE("a point left of the support is outside") {
    const ChainGeometry g(3);
    const TimeGrid t(1, 8);
    const BarConfiguration c({{0, -7}, {0, 7}, {2, -4}, {2, 4}, {3, -3}, {3, 3}, {4, -5}, {4, 5}});
    const auto loops = trace_loops(g, t, c);
    const int id = long_loop_id(loops);
    REQUIRE(id >= 0);
    CHECK(!interior_contains(loops, id, 0));
    CHECK(!interior_contains(loops, id, 1));
    CHECK(interior_contains(loops, id, 3));
    CHECK(!event_Ex(g, t, c, g.site_coord(0)));
    CHECK(event_Ex(g, t, c, g.site_coord(3)));
}

TEST_CASE("dimer pattern: no surround event and Omega membership") {
    const ChainGeometry g(3);
    const TimeGrid t(2, 4);
    const auto c = dimer_pattern(g, {1, 2, 3});
    for (int x : g.site_coords()) CHECK(!event_Ex(g, t, c, x));
    CHECK(omega_alpha_member(g, t, c, 0));
    CHECK(!omega_alpha_member(g, t, c, 1));
    for (int a = -2; a < 2; ++a) CHECK(!omega_alpha_member(g, t, {}, a));
    CHECK_THROWS_AS(omega_alpha_member(g, t, c, 2), Error);
    CHECK(!omega_alpha_member(g, t, c.with({1, 4}), 0));
}

TEST_CASE("errors on winding or short loops") {
    const ChainGeometry g(2);
    const TimeGrid t(1, 4);
    const auto loops = trace_loops(g, t, {});
    CHECK_THROWS_AS(interior_contains(loops, 0, 1), Error);
    CHECK_THROWS_AS(event_Ex(g, t, {}, 0), Error);
    CHECK_THROWS_AS(contour_geometry(loops, 0), Error);
    const auto dimers = trace_loops(g, t, dimer_pattern(g, {1, 2}).with({0, -1}).with({2, -2}));
    try {
        contour_geometry(dimers, 0);
        FAIL("short loop accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::not_applicable);
    }
}

TEST_CASE("five-bar contour") {
    const ChainGeometry g(2);
    const TimeGrid t(2, 4);
    const auto c = deserialize(g, "1,-7\n0,-6\n1,-5\n-1,-4\n0,-2\n1,-1\n-1,2\n1,5\n1,6\n-1,7\n");
    REQUIRE(omega_alpha_member(g, t, c, 1));
    const auto loops = trace_loops(g, t, c);
    int five = 0;
    for (const auto& info : contour_census(loops)) {
        if (!info.has_e2_bar) continue;
        CHECK(info.n_bars >= 5);
        five += info.n_bars == 5;
    }
    CHECK(five == 2);
}

TEST_CASE("interiors agree with a flood-fill raster") {
    std::mt19937_64 gen(23);
    long checked = 0, nested = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        const ChainGeometry g(1 + static_cast<int>(gen() % 4));
        const TimeGrid t(1 + static_cast<int>(gen() % 2), 2 + static_cast<int>(gen() % 4));
        const auto c = oracle::random_config(gen, g, t, 0.3 + 0.6 * std::uniform_real_distribution<double>(0, 1)(gen));
        const auto loops = trace_loops(g, t, c);
        if (has_winding_loops(loops)) continue;
        std::vector<oracle::Raster> rasters;
        for (const auto& l : loops.loops()) rasters.push_back(raster_of(loops, l.id));
        for (const auto& l : loops.loops()) {
            for (int s = 0; s < g.num_sites(); ++s) {
                for (int o = 0; o < t.num_slots(); o += 3) {
                    const int k = t.slot_from_ordinal(o);
                    const bool expect = !on_loop(loops, l.id, s, k) && rasters[l.id].inside(s, t, k);
                    CHECK(interior_contains(loops, l.id, s, k) == expect);
                    CHECK(interior_contains_from_right(loops, l.id, s, k) == expect);
                    ++checked;
                }
            }
            if (!is_long(l)) continue;
            const auto info = contour_geometry(loops, l.id);
            long int1 = 0, int2 = 0;
            for (int e = 0; e < g.num_edges(); ++e) {
                for (int p = 0; p < t.circumference(); ++p) {
                    const int w = rasters[l.id].at(2 * e + 2, 4 * p + 2);
                    if (!rasters[l.id].on[w] && !rasters[l.id].outside[w]) (g.is_e1(e) ? int1 : int2) += 1;
                }
            }
            CHECK(info.int1_size == int1);
            CHECK(info.int2_size == int2);
            CHECK(2 * (info.int1_size - info.int2_size) == doctest::Approx(t.n() * info.length_L));

            // externality: no other loop encloses a point of this one
            bool enclosed = false;
            const auto rep = l.segments.front();
            const auto& v = loops.index().slots_of(rep.site);
            const int probe = v.empty() ? 1 : v[rep.index];
            for (const auto& other : loops.loops()) {
                if (other.id == l.id) continue;
                const int w = rasters[other.id].at(2 * rep.site + 1, 4 * t.position(probe) + 2);
                enclosed = enclosed || (!rasters[other.id].on[w] && !rasters[other.id].outside[w]);
            }
            CHECK(info.is_external == (info.has_e2_bar && !enclosed));
            nested += info.has_e2_bar && enclosed;
        }
        const auto all = surrounded_all(loops);
        for (int s = 0; s < g.num_sites(); ++s) CHECK(static_cast<bool>(all[s]) == surrounded(loops, s));
    }
    CHECK(checked > 10000);
    CHECK(nested > 0);
}

TEST_CASE("Omega configurations: no winding, leg lengths, and window-free contours have at least five bars") {
    std::mt19937_64 gen(3);
    long members = 0, contours = 0, external = 0;
    for (int trial = 0; trial < 60000; ++trial) {
        const ChainGeometry g(2 + static_cast<int>(gen() % 2));
        const TimeGrid t(2, 4);
        const auto c = oracle::random_config(gen, g, t, 0.6);
        const auto alpha = omega_any(SegmentIndex(g, t, c));
        if (!alpha) continue;
        ++members;
        const auto loops = trace_loops(g, t, c);
        CHECK(winding_filter(loops).empty());
        for (const auto& l : loops.loops()) {
            if (!is_long(l)) continue;
            const auto info = contour_geometry(loops, l.id);
            if (info.is_external) {
                CHECK(info.length_L >= 0.0);
                CHECK(std::abs(info.length_L - info.vertical_length) <= static_cast<double>(info.n_bars) / t.n() + 1e-12);
                ++external;
            }
            if (!info.has_e2_bar) continue;
            bool touches_window = false;
            for (int k : l.bar_slots) {
                for (int s = *alpha * t.n(); s <= (*alpha + 1) * t.n(); ++s) touches_window |= t.wrap(s) == k;
            }
            if (touches_window) continue;
            ++contours;
            CHECK(l.n_bars >= 5);
        }
    }
    CHECK(members > 100);
    CHECK(contours > 100);
    CHECK(external > 100);
}

TEST_CASE("Omega membership is covariant under a shift by one time unit") {
    std::mt19937_64 gen(41);
    long hits = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const ChainGeometry g(1 + static_cast<int>(gen() % 3));
        const TimeGrid t(2, 2 + static_cast<int>(gen() % 3));
        const auto c = oracle::random_config(gen, g, t, 0.5);
        if (c.slot_occupied(-t.n())) continue;
        std::vector<Bar> moved;
        for (const auto& b : c.bars()) moved.push_back({b.edge, t.wrap(b.slot + t.n())});
        const BarConfiguration shifted(moved);
        for (int a = -t.beta(); a < t.beta(); ++a) {
            const int next = a + 1 < t.beta() ? a + 1 : -t.beta();
            const bool in = omega_alpha_member(g, t, c, a);
            CHECK(in == omega_alpha_member(g, t, shifted, next));
            hits += in;
        }
    }
    CHECK(hits > 50);
}
