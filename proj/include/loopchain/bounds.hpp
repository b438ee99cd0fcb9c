#pragma once

// Closed-form contour bounds as functions of a real spin S > 0 (q = 2S + 1).

#include "error.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace loopchain {

namespace detail {

inline double fugacity(double S) {
    if (!(S > 0.0)) throw Error(ErrorKind::invalid_parameter, "S must be positive");
    return 2.0 * S + 1.0;
}

/// sum_{k>=m} (k+1) rho^k for 0 <= rho < 1.
inline long double shifted_geometric_tail(long double rho, int m) {
    const long double g = 1.0L - rho;
    return std::pow(rho, m) * ((m + 1) / g + rho / (g * g));
}

inline double ratio(double S) { return 4.0 / std::sqrt(fugacity(S)); }

inline void require_convergent(double S) {
    if (!(ratio(S) < 1.0)) throw Error(ErrorKind::divergent, "contour series diverges for S <= 15/2");
}

}  // namespace detail

struct PeierlsPieces {
    double five_bar = 0.0;  // 64 / q^{3/2}
    double six_bar = 0.0;   // 128 / q^2
    double tail = 0.0;      // (q/12) sum_{k>=7} (k+1) r^k
    double total() const { return five_bar + six_bar + tail; }
};

inline bool series_convergent(double S) { return detail::ratio(S) < 1.0; }

inline PeierlsPieces peierls_pieces(double S) {
    detail::require_convergent(S);
    const long double q = detail::fugacity(S);
    const long double r = 4.0L / std::sqrt(q);
    PeierlsPieces p;
    p.five_bar = static_cast<double>(64.0L / std::pow(q, 1.5L));
    p.six_bar = static_cast<double>(128.0L / (q * q));
    p.tail = static_cast<double>(q / 12.0L * detail::shifted_geometric_tail(r, 7));
    return p;
}

inline double peierls_bound(double S) { return peierls_pieces(S).total(); }

/// Same bound with the tail summed term by term up to k_max (default: until terms vanish).
inline double peierls_bound_truncated(double S, int k_max = -1) {
    detail::require_convergent(S);
    const long double q = detail::fugacity(S);
    const long double r = 4.0L / std::sqrt(q);
    long double tail = 0.0L;
    long double rk = std::pow(r, 7);
    for (int k = 7; k_max < 0 || k <= k_max; ++k) {
        const long double term = (k + 1) * rk;
        tail += term;
        if (k_max < 0 && term < tail * 1e-21L) break;
        rk *= r;
    }
    return static_cast<double>(64.0L / std::pow(q, 1.5L) + 128.0L / (q * q) + q / 12.0L * tail);
}

inline double c_of_S(double S) {
    const double q = detail::fugacity(S);
    return (1.0 - 1.0 / (q * q)) * (1.0 - 2.0 * peierls_bound(S));
}

/// Root of peierls_bound(S) = 1/2 by bisection on (15/2, 100].
inline double dimerization_threshold(double tol = 1e-6) {
    double lo = 7.5, hi = 100.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (!series_convergent(mid) || peierls_bound(mid) > 0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Smallest eta for which the decay series converges: 1 / ln(sqrt(q)/4).
inline double decay_rate(double S) {
    detail::require_convergent(S);
    return 1.0 / std::log(std::sqrt(detail::fugacity(S)) / 4.0);
}

/// (1/12) sum_{k>=m} (k+1) (4 e^{1/eta})^k q^{1-k/2}, for eta > eta_min.
inline double decay_tail_bound(double S, int m, double eta) {
    const double q = detail::fugacity(S);
    if (m < 0) throw Error(ErrorKind::invalid_parameter, "m must be nonnegative");
    if (!(eta > 0.0)) throw Error(ErrorKind::invalid_parameter, "eta must be positive");
    const double rho = 4.0 * std::exp(1.0 / eta) / std::sqrt(q);
    if (!(rho < 1.0)) throw Error(ErrorKind::divergent, "eta below the convergence threshold");
    return static_cast<double>(q / 12.0L * detail::shifted_geometric_tail(rho, m));
}

struct BoundReport {
    double S = 0.0;
    double q = 0.0;
    bool series_convergent = false;
    std::optional<PeierlsPieces> pieces;
    std::optional<double> peierls_bound;
    std::optional<double> c_of_S;
    std::optional<double> eta_min;
};

/// Report that marks divergence with empty optionals instead of throwing.
inline BoundReport bound_report(double S) {
    BoundReport r;
    r.S = S;
    r.q = detail::fugacity(S);
    r.series_convergent = series_convergent(S);
    if (r.series_convergent) {
        r.pieces = peierls_pieces(S);
        r.peierls_bound = r.pieces->total();
        r.c_of_S = c_of_S(S);
        r.eta_min = decay_rate(S);
    }
    return r;
}

inline std::vector<BoundReport> bound_table(double s_min, double s_max, double step) {
    if (!(step > 0.0) || s_max < s_min) throw Error(ErrorKind::invalid_parameter, "bad S grid");
    std::vector<BoundReport> out;
    const auto count = static_cast<long>(std::floor((s_max - s_min) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(bound_report(s_min + static_cast<double>(i) * step));
    return out;
}

}  // namespace loopchain
