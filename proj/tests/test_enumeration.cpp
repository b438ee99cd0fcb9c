#include <doctest.h>

#include "oracles.hpp"

#include <loopchain/ed.hpp>
#include <loopchain/enumeration.hpp>

#include <cmath>

using namespace loopchain;

namespace {

// Plain sum over all configurations, one slot at a time, with the point-graph loop count.
template <class Fn>
void for_each_config(const ChainGeometry& g, const TimeGrid& t, Fn&& fn) {
    const int slots = t.num_slots();
    const int choices = g.num_edges() + 1;
    std::vector<int> pick(slots, 0);
    while (true) {
        std::vector<Bar> bars;
        for (int o = 0; o < slots; ++o) {
            if (pick[o] > 0) bars.push_back({pick[o] - 1, t.slot_from_ordinal(o)});
        }
        fn(BarConfiguration(bars));
        int o = 0;
        while (o < slots && ++pick[o] == choices) pick[o++] = 0;
        if (o == slots) break;
    }
}

double weight(const TimeGrid& t, int q, const BarConfiguration& c, int L) {
    return std::pow(1.0 / t.n(), c.size()) * std::pow(static_cast<double>(q), L - static_cast<double>(c.size()));
}

}  // namespace

TEST_CASE("two-site closed form") {
    const ChainGeometry g(1);
    const TimeGrid t(1, 4);
    const auto r = enumerate_Z(g, t, 2);
    CHECK(static_cast<double>(r.Z) == doctest::Approx(3.0 + std::pow(1.25, 7)).epsilon(1e-14));
    CHECK(static_cast<double>(r.n_configs) == 128.0);
    for (int q : {2, 3, 5}) {
        for (int n : {1, 2, 3, 8}) {
            const TimeGrid tt(1, n);
            const double closed = q * q - 1.0 + std::pow(1.0 + 1.0 / n, 2 * n - 1);
            CHECK(static_cast<double>(enumerate_Z(g, tt, q).Z) == doctest::Approx(closed).epsilon(1e-13));
            CHECK(static_cast<double>(two_site_Z(tt, q)) == doctest::Approx(closed).epsilon(1e-13));
            CHECK(static_cast<double>(transfer_enumerate(g, tt, q).Z) == doctest::Approx(closed).epsilon(1e-13));
        }
    }
    CHECK(static_cast<double>(enumerate_Z(g, TimeGrid(1, 1), 2).Z) == doctest::Approx(5.0));
    CHECK(static_cast<double>(enumerate_Z(g, TimeGrid(1, 1), 2).n_configs) == 2.0);
}

TEST_CASE("event examples on the two-site chain") {
    const ChainGeometry g(1);
    const TimeGrid t(1, 4);
    const int q = 2;
    const long double Z = enumerate_Z(g, t, q).Z;
    // at least one bar: sum_{m>=1} C(7,m) (1/4)^m q^{m-m}
    long double some = 0.0L;
    for (int m = 1; m <= 7; ++m) some += std::tgamma(8.0L) / (std::tgamma(m + 1.0L) * std::tgamma(8.0L - m)) * std::pow(0.25L, m);
    CHECK(static_cast<double>(exact_probability(g, t, q, Event::connected(g, 0, 1))) ==
          doctest::Approx(static_cast<double>(some / Z)).epsilon(1e-14));
    CHECK(static_cast<double>(exact_probability(g, t, q, Event::empty_config())) ==
          doctest::Approx(static_cast<double>(std::pow(q, 2) / Z)).epsilon(1e-14));
    CHECK(static_cast<double>(exact_probability(g, t, q, Event::connected(g, 1, 1))) == doctest::Approx(1.0));
}

TEST_CASE("depth-first and transfer routes agree with a brute-force sum") {
    struct Case {
        int ell, beta, n, q;
    };
    for (const auto& c : {Case{1, 1, 3, 2}, Case{2, 1, 2, 2}, Case{2, 1, 3, 3}, Case{2, 2, 1, 4}, Case{3, 1, 1, 2}}) {
        const ChainGeometry g(c.ell);
        const TimeGrid t(c.beta, c.n);
        double Z = 0.0, empty = 0.0, nowind = 0.0;
        std::vector<double> conn(g.num_sites() * g.num_sites(), 0.0);
        std::vector<double> surround(g.num_sites(), 0.0);
        long count = 0;
        for_each_config(g, t, [&](const BarConfiguration& cfg) {
            const auto loops = trace_loops(g, t, cfg);
            const int L = oracle::loop_count(g, t, cfg);
            REQUIRE(L == loops.total_loops());
            const double w = weight(t, c.q, cfg, L);
            Z += w;
            ++count;
            if (cfg.empty()) empty += w;
            for (int i = 0; i < g.num_sites(); ++i) {
                for (int j = 0; j < g.num_sites(); ++j) {
                    if (loops.connected_sites(i, j)) conn[i * g.num_sites() + j] += w;
                }
            }
            if (!has_winding_loops(loops)) {
                nowind += w;
                for (int i = 0; i < g.num_sites(); ++i) surround[i] += surrounded(loops, i) ? w : 0.0;
            }
        });
        std::vector<Event> events = {Event::empty_config(), Event::no_winding()};
        for (int i = 0; i < g.num_sites(); ++i) {
            for (int j = 0; j < g.num_sites(); ++j) events.push_back(Event::connected(g, g.site_coord(i), g.site_coord(j)));
            events.push_back(Event::surrounded(g, g.site_coord(i)));
        }
        const auto dfs = enumerate(g, t, c.q, events);
        const auto dp = transfer_enumerate(g, t, c.q);
        CHECK(static_cast<double>(dfs.n_configs) == static_cast<double>(count));
        CHECK(static_cast<double>(dfs.Z) == doctest::Approx(Z).epsilon(1e-12));
        CHECK(static_cast<double>(dp.Z) == doctest::Approx(Z).epsilon(1e-12));
        CHECK(static_cast<double>(dfs.event_probabilities.at("empty")) == doctest::Approx(empty / Z).epsilon(1e-12));
        CHECK(static_cast<double>(dfs.event_probabilities.at("no_winding")) == doctest::Approx(nowind / Z).epsilon(1e-12));
        for (int i = 0; i < g.num_sites(); ++i) {
            for (int j = 0; j < g.num_sites(); ++j) {
                const double p = conn[i * g.num_sites() + j] / Z;
                const auto name = "connected(" + std::to_string(g.site_coord(i)) + "," + std::to_string(g.site_coord(j)) + ")";
                CHECK(static_cast<double>(dfs.event_probabilities.at(name)) == doctest::Approx(p).epsilon(1e-12));
                CHECK(static_cast<double>(dp.connection[i][j]) == doctest::Approx(p).epsilon(1e-12));
            }
            const auto name = "surrounded(" + std::to_string(g.site_coord(i)) + ")";
            CHECK(static_cast<double>(dfs.event_probabilities.at(name)) == doctest::Approx(surround[i] / Z).epsilon(1e-12));
        }
    }
}

TEST_CASE("measure sums to one") {
    const ChainGeometry g(2);
    const TimeGrid t(1, 3);
    const auto r = enumerate_Z(g, t, 3);
    CompensatedSum s;
    for (std::size_t k = 0; k < r.counts.size(); ++k) {
        CountTable one(r.counts.size(), std::vector<std::uint64_t>(r.counts[k].size(), 0));
        one[k] = r.counts[k];
        s.add(weigh_counts(one, t.n(), 3) / r.Z);
    }
    CHECK(std::abs(static_cast<double>(s.value() - 1.0L)) <= 1e-12);
}

TEST_CASE("Z_n equals the trace of the discretized transfer operator") {
    for (int q : {2, 3}) {
        for (int n : {1, 2, 4}) {
            const ChainGeometry g(2);
            const TimeGrid t(1, n);
            const Spectrum spec(build_hamiltonian(2, q));
            CHECK(static_cast<double>(enumerate_Z(g, t, q).Z) == doctest::Approx(spec.trotter_trace(1, n)).epsilon(1e-11));
        }
    }
    const Spectrum spec(build_hamiltonian(3, 2));
    CHECK(static_cast<double>(transfer_enumerate(ChainGeometry(3), TimeGrid(1, 8), 2).Z) ==
          doctest::Approx(spec.trotter_trace(1, 8)).epsilon(1e-11));
}

TEST_CASE("Trotter convergence is monotone on two sites") {
    for (int q : {2, 3}) {
        const Spectrum spec(build_hamiltonian(1, q));
        const double exact = spec.partition_function(2.0);
        CHECK(exact == doctest::Approx(std::exp(2.0) + q * q - 1.0).epsilon(1e-12));
        double prev = INFINITY;
        for (int n : {1, 2, 4, 8, 16}) {
            const double err = std::abs(static_cast<double>(two_site_Z(TimeGrid(1, n), q)) - exact);
            CHECK(err < prev);
            prev = err;
        }
    }
}

TEST_CASE("budget and argument errors") {
    try {
        enumerate_Z(ChainGeometry(4), TimeGrid(2, 8), 2);
        FAIL("no budget error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::too_large_instance);
    }
    EnumerationOptions tiny;
    tiny.budget = 10;
    CHECK_THROWS_AS(enumerate_Z(ChainGeometry(1), TimeGrid(1, 4), 2, tiny), Error);
    CHECK_THROWS_AS(Event::connected(ChainGeometry(1), 0, 7), Error);
    CHECK_THROWS_AS(transfer_enumerate(ChainGeometry(6), TimeGrid(1, 2), 2), Error);
}
