#include <doctest.h>

#include <loopchain/stats.hpp>

#include <cmath>
#include <random>

using namespace loopchain;

TEST_CASE("iid series: error near sigma / sqrt(N)") {
    std::mt19937_64 gen(1);
    std::vector<double> s(1 << 16);
    for (auto& x : s) x = (gen() & 1) ? 1.0 : -1.0;
    const auto r = binned_error(s);
    CHECK(r.error == doctest::Approx(1.0 / std::sqrt(static_cast<double>(s.size()))).epsilon(0.2));
    CHECK(r.tau_int == doctest::Approx(0.5).epsilon(0.4));
}

TEST_CASE("constant series has zero error") {
    const std::vector<double> s(1024, 0.7);
    const auto r = binned_error(s);
    CHECK(r.error == 0.0);
    CHECK(r.mean == doctest::Approx(0.7));
}

TEST_CASE("duplicated pairs double the variance of the mean") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    std::vector<double> s;
    for (int i = 0; i < (1 << 15); ++i) {
        const double x = nd(gen);
        s.push_back(x);
        s.push_back(x);
    }
    const auto r = binned_error(s);
    CHECK(r.error / r.naive_error == doctest::Approx(std::sqrt(2.0)).epsilon(0.15));
}

TEST_CASE("AR(1) series recovers the integrated autocorrelation time") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    const double rho = 0.8;
    std::vector<double> s(1 << 18);
    double x = 0.0;
    for (auto& v : s) {
        x = rho * x + std::sqrt(1 - rho * rho) * nd(gen);
        v = x;
    }
    const double tau = 0.5 * (1 + rho) / (1 - rho);
    const auto r = binned_error(s);
    CHECK(r.tau_int == doctest::Approx(tau).epsilon(0.25));
    const double expected = std::sqrt(2 * tau / static_cast<double>(s.size()));
    CHECK(r.error == doctest::Approx(expected).epsilon(0.25));

    SeriesRecorder rec(256);
    for (double v : s) rec.add(v);
    const auto e = rec.estimate();
    CHECK(e.count == static_cast<long>(s.size()));
    CHECK(e.mean == doctest::Approx(r.mean).epsilon(1e-9));
    CHECK(e.error == doctest::Approx(expected).epsilon(0.3));
    CHECK(rec.blocks().size() <= 256);
}

TEST_CASE("short series are rejected") {
    const std::vector<double> s(1, 1.0);
    try {
        binned_error(s);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::series_too_short);
    }
    CHECK_THROWS_AS(binned_error(std::vector<double>(100, 0.0), 64), Error);
}

TEST_CASE("ratio estimate of a conditional frequency") {
    std::mt19937_64 gen(4);
    std::bernoulli_distribution a(0.3), b(0.6);
    SeriesRecorder joint, marginal;
    for (int i = 0; i < 200000; ++i) {
        const bool condition = a(gen);
        const bool event = b(gen);
        marginal.add(condition);
        joint.add(condition && event);
    }
    const auto r = ratio_estimate(joint, marginal);
    const double n_cond = marginal.sum();
    CHECK(r.mean == doctest::Approx(0.6).epsilon(0.02));
    CHECK(r.error == doctest::Approx(std::sqrt(0.24 / n_cond)).epsilon(0.25));
    CHECK(r.count == std::lround(n_cond));
}

TEST_CASE("combine weights independent estimates") {
    const std::vector<Estimate> parts = {{1.0, 0.1, 1.0, 10}, {3.0, 0.1, 2.0, 10}};
    const std::vector<double> w = {1.0, 1.0};
    const auto c = combine(parts, w);
    CHECK(c.mean == doctest::Approx(2.0));
    CHECK(c.error == doctest::Approx(0.1 / std::sqrt(2.0)));
    CHECK(c.count == 20);
}

TEST_CASE("chi-square") {
    CHECK(chi_square_p_value(3.0, 2) == doctest::Approx(std::exp(-1.5)));
    CHECK(chi_square_p_value(0.0, 5) == doctest::Approx(1.0));
    const std::vector<double> obs = {25, 25, 25, 25, 0.0};
    const std::vector<double> p = {0.25, 0.25, 0.25, 0.25, 1e-9};
    const auto r = chi_square_test(obs, p);
    CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r.pooled_cells == 1);
    CHECK(r.p_value > 0.99);
    const std::vector<double> skew = {90, 10};
    const std::vector<double> even = {0.5, 0.5};
    CHECK(chi_square_test(skew, even).p_value < 1e-10);
}
