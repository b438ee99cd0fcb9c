#include <doctest.h>

#include "oracles.hpp"

#include <loopchain/ed.hpp>
#include <loopchain/enumeration.hpp>
#include <loopchain/sampler.hpp>

#include <cmath>

using namespace loopchain;

namespace {

SamplerParams params_for(int ell, int beta, int n, int q, long sweeps, std::uint64_t seed) {
    SamplerParams p;
    p.geometry = ChainGeometry(ell);
    p.grid = TimeGrid(beta, n);
    p.q = q;
    p.n_burnin = std::min<long>(1000, sweeps / 10);
    p.n_sweeps = sweeps;
    p.seed = seed;
    return p;
}

// Base-(edges+1) digit per slot ordinal: 0 for an empty slot, 1 + edge otherwise.
long config_code(const SegmentIndex& index, int edges) {
    const auto& t = index.grid();
    long code = 0;
    for (int o = t.num_slots() - 1; o >= 0; --o) code = code * (edges + 1) + index.edge_at(t.slot_from_ordinal(o)) + 1;
    return code;
}

}  // namespace

TEST_CASE("deleting from the empty configuration is a rejection") {
    auto p = params_for(1, 1, 4, 2, 10, 1);
    p.n_burnin = 0;
    p.p_insert = 1e-12;
    Sampler s(p, 0);
    CHECK(!s.step());
    CHECK(s.stats().delete_empty == 1);
    CHECK(s.num_bars() == 0);
}

TEST_CASE("insert and delete ratios are reciprocal") {
    const auto p = params_for(2, 1, 4, 3, 10, 1);
    const Sampler s(p, 0);
    for (long k = 0; k < 6; ++k) {
        for (int dL : {-1, 1}) CHECK(s.log_ratio_insert(k, dL) + s.log_ratio_delete(k + 1, -dL) == doctest::Approx(0.0));
    }
    // the pure weight ratio: insertion changes the weight by q^{dL-1}/n
    const double cells = 3.0 * 7.0;
    CHECK(std::exp(s.log_ratio_insert(0, 1)) == doctest::Approx(1.0 / 4.0 * cells));
}

TEST_CASE("same seed and stream replay bit for bit") {
    const auto p = params_for(2, 1, 8, 3, 2000, 99);
    const auto a = run_chain(p, 3);
    const auto b = run_chain(p, 3);
    CHECK(a.moves.insert_accepted == b.moves.insert_accepted);
    CHECK(a.moves.delete_accepted == b.moves.delete_accepted);
    CHECK(a.obs->loops.sum() == b.obs->loops.sum());
    CHECK(a.obs->bars.blocks() == b.obs->bars.blocks());
    const auto c = run_chain(p, 4);
    CHECK(a.obs->bars.blocks() != c.obs->bars.blocks());
}

TEST_CASE("merged estimates do not depend on the thread count") {
    const auto p = params_for(2, 1, 8, 3, 3000, 5);
    const auto one = run(p, 3, {}, 1);
    const auto three = run(p, 3, {}, 3);
    REQUIRE(one.estimates.size() == three.estimates.size());
    for (const auto& [name, e] : one.estimates) {
        CHECK(three.at(name).mean == e.mean);
        CHECK(three.at(name).error == e.error);
    }
}

TEST_CASE("two-site connection probability") {
    const auto p = params_for(1, 1, 4, 2, 200000, 17);
    const ChainGeometry g(1);
    const auto r = run(p, 1);
    const double exact = static_cast<double>(exact_probability(g, p.grid, 2, Event::connected(g, 0, 1)));
    const auto& e = r.at("bond_conn[0]");
    CHECK(e.error > 0.0);
    CHECK(std::abs(e.mean - exact) <= 3 * e.error);
}

TEST_CASE("stationary law over all configurations of a four-site chain") {
    const ChainGeometry g(2);
    const TimeGrid t(1, 2);
    const int q = 2, edges = g.num_edges();
    long configs = 1;
    for (int o = 0; o < t.num_slots(); ++o) configs *= edges + 1;
    REQUIRE(configs == 64);

    std::vector<double> prob(configs, 0.0);
    double Z = 0.0;
    for (long code = 0; code < configs; ++code) {
        std::vector<Bar> bars;
        long rest = code;
        for (int o = 0; o < t.num_slots(); ++o) {
            const int digit = static_cast<int>(rest % (edges + 1));
            rest /= edges + 1;
            if (digit > 0) bars.push_back({digit - 1, t.slot_from_ordinal(o)});
        }
        const BarConfiguration c(bars);
        prob[code] = std::exp(log_weight(t.n(), q, static_cast<long>(c.size()), oracle::loop_count(g, t, c)));
        Z += prob[code];
    }
    for (auto& x : prob) x /= Z;

    auto p = params_for(2, 1, 2, q, 300000, 8);
    p.measure_every = 5;
    std::vector<double> hist(configs, 0.0);
    RunOptions opts;
    opts.on_measure = [&](const Sampler& s, const LoopSet&) { hist[config_code(s.index(), edges)] += 1.0; };
    run_chain(p, 0, opts);
    const auto chi = chi_square_test(hist, prob);
    CHECK(chi.dof >= 40);
    CHECK(chi.p_value > 0.001);
}

TEST_CASE("audited transitions satisfy detailed balance") {
    auto p = params_for(2, 1, 4, 3, 3000, 12);
    p.n_burnin = 0;
    RunOptions opts;
    opts.audit = true;
    const auto r = run_chain(p, 0, opts);
    CHECK(r.audit.transitions > 1000);
    CHECK(r.audit.max_residual <= 1e-12);
}

TEST_CASE("bond occupation profile agrees with the quantum chain") {
    const int ell = 3, q = 2, beta = 1, n = 64;
    auto p = params_for(ell, beta, n, q, 40000, 31);
    const auto r = run(p, 2);
    const Spectrum spec(build_hamiltonian(ell, q));
    const ChainGeometry g(ell);
    for (int e = 0; e < g.num_edges(); ++e) {
        const double exact = spec.expectation(bond_projector(ell, q, e), 2.0 * beta);
        const auto& est = r.at("p0[" + std::to_string(g.edge_left_coord(e)) + "]");
        CHECK(std::abs(est.mean - exact) <= std::max(3 * est.error, 0.02));
    }
}

TEST_CASE("sampled Omega configurations have no winding loops") {
    auto p = params_for(2, 8, 8, 81, 5000, 3);
    p.init = InitKind::dimer;
    long members = 0, winding = 0;
    RunOptions opts;
    opts.on_measure = [&](const Sampler&, const LoopSet& loops) {
        if (!omega_any(loops.index())) return;
        ++members;
        winding += has_winding_loops(loops);
    };
    run_chain(p, 0, opts);
    CHECK(members > 100);
    CHECK(winding == 0);
}

TEST_CASE("parameter validation") {
    auto p = params_for(1, 1, 4, 2, 100, 1);
    p.n_burnin = 100;
    CHECK_THROWS_AS(p.validate(), Error);
    p = params_for(1, 1, 4, 2, 100, 1);
    p.p_insert = 1.0;
    CHECK_THROWS_AS(Sampler(p, 0), Error);
    p = params_for(1, 1, 4, 1, 100, 1);
    CHECK_THROWS_AS(run(p, 1), Error);
    CHECK_THROWS_AS(run(params_for(1, 1, 4, 2, 100, 1), 0), Error);
}
