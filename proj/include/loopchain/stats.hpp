#pragma once

// Blocking (binning) error analysis for correlated Monte Carlo series.

#include "error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace loopchain {

struct BinLevel {
    std::size_t bin_size = 0;
    std::size_t n_bins = 0;
    double error = 0.0;
    double error_uncertainty = 0.0;
};

struct ErrorReport {
    double mean = 0.0;
    double naive_error = 0.0;
    double error = 0.0;  // plateau value
    double tau_int = 0.5;
    std::size_t plateau_level = 0;
    std::vector<BinLevel> levels;
};

struct Estimate {
    double mean = 0.0;
    double error = 0.0;
    double tau_int = 0.5;
    long count = 0;
};

namespace detail {

inline BinLevel bin_level(std::span<const double> series, std::size_t bin_size) {
    const std::size_t n_bins = series.size() / bin_size;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < bin_size; ++i) s += series[b * bin_size + i];
        const double x = s / static_cast<double>(bin_size);
        const double d = x - mean;
        mean += d / static_cast<double>(b + 1);
        m2 += d * (x - mean);
    }
    BinLevel level{bin_size, n_bins, 0.0, 0.0};
    if (n_bins >= 2) {
        level.error = std::sqrt(m2 / static_cast<double>(n_bins - 1) / static_cast<double>(n_bins));
        level.error_uncertainty = level.error / std::sqrt(2.0 * static_cast<double>(n_bins - 1));
    }
    return level;
}

}  // namespace detail

/// Blocked standard errors for bin sizes 1, 2, 4, ... up to `max_bin_size` (default: the
/// largest power of two leaving at least `min_bins` bins). The reported error is the first
/// level whose successor no longer rises by more than the level's own uncertainty.
inline ErrorReport binned_error(std::span<const double> series, std::optional<std::size_t> max_bin_size = {},
                                std::size_t min_bins = 32) {
    const std::size_t n = series.size();
    std::size_t max_bin = 1;
    if (max_bin_size) {
        max_bin = *max_bin_size;
        if (n < 2 * max_bin) throw Error(ErrorKind::series_too_short, "series shorter than twice the largest bin");
    } else {
        if (n < 2) throw Error(ErrorKind::series_too_short, "need at least two samples");
        while (n / (2 * max_bin) >= min_bins) max_bin *= 2;
    }

    ErrorReport report;
    double sum = 0.0;
    for (double x : series) sum += x;
    report.mean = sum / static_cast<double>(n);

    for (std::size_t b = 1; b <= max_bin; b *= 2) report.levels.push_back(detail::bin_level(series, b));
    report.naive_error = report.levels.front().error;

    std::size_t pick = report.levels.size() - 1;
    for (std::size_t k = 0; k + 1 < report.levels.size(); ++k) {
        const auto& cur = report.levels[k];
        if (report.levels[k + 1].error - cur.error <= cur.error_uncertainty) {
            pick = k;
            break;
        }
    }
    report.plateau_level = pick;
    report.error = report.levels[pick].error;
    if (report.naive_error > 0.0) {
        const double r = report.error / report.naive_error;
        report.tau_int = 0.5 * r * r;
    }
    return report;
}

/// Stores block means of a scalar series with a block size that doubles whenever the
/// number of stored blocks reaches `max_blocks`, so memory stays bounded.
class SeriesRecorder {
public:
    explicit SeriesRecorder(std::size_t max_blocks = 1 << 14) : max_blocks_(max_blocks) {}

    void add(double x) {
        total_ += x;
        ++count_;
        partial_ += x;
        if (++partial_n_ == block_size_) {
            blocks_.push_back(partial_ / static_cast<double>(block_size_));
            partial_ = 0.0;
            partial_n_ = 0;
            if (blocks_.size() == max_blocks_) compact();
        }
    }

    long count() const noexcept { return count_; }
    double sum() const noexcept { return total_; }
    double mean() const noexcept { return count_ ? total_ / static_cast<double>(count_) : 0.0; }
    std::size_t block_size() const noexcept { return block_size_; }
    const std::vector<double>& blocks() const noexcept { return blocks_; }

    /// Mean over all samples; error from blocking the stored block means.
    Estimate estimate() const {
        Estimate e;
        e.mean = mean();
        e.count = count_;
        if (blocks_.size() >= 2) {
            const auto report = binned_error(blocks_, std::nullopt, 16);
            e.error = report.error;
            // Block means already average block_size_ samples.
            e.tau_int = report.tau_int * static_cast<double>(block_size_);
        }
        return e;
    }

private:
    void compact() {
        std::vector<double> merged(blocks_.size() / 2);
        for (std::size_t i = 0; i < merged.size(); ++i) merged[i] = 0.5 * (blocks_[2 * i] + blocks_[2 * i + 1]);
        blocks_ = std::move(merged);
        block_size_ *= 2;
    }

    std::size_t max_blocks_;
    std::size_t block_size_ = 1;
    std::vector<double> blocks_;
    double partial_ = 0.0;
    std::size_t partial_n_ = 0;
    double total_ = 0.0;
    long count_ = 0;
};

/// Ratio sum(num)/sum(den) with a delta-method error from the block series of
/// num - R * den. Both recorders must have been fed in lockstep.
inline Estimate ratio_estimate(const SeriesRecorder& num, const SeriesRecorder& den) {
    Estimate e;
    e.count = static_cast<long>(std::lround(den.sum()));
    if (den.sum() <= 0.0) return e;
    const double r = num.sum() / den.sum();
    e.mean = r;
    const auto& a = num.blocks();
    const auto& b = den.blocks();
    if (a.size() != b.size() || a.size() < 2) return e;
    double bbar = 0.0;
    for (double x : b) bbar += x;
    bbar /= static_cast<double>(b.size());
    std::vector<double> z(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) z[i] = (a[i] - r * b[i]) / bbar;
    const auto report = binned_error(z, std::nullopt, 16);
    e.error = report.error;
    e.tau_int = report.tau_int * static_cast<double>(num.block_size());
    return e;
}

/// Combines estimates from independent chains with the given weights (e.g. sample counts).
inline Estimate combine(std::span<const Estimate> parts, std::span<const double> weights) {
    Estimate out;
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) return out;
    double var = 0.0, tau = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const double w = weights[i] / wsum;
        out.mean += w * parts[i].mean;
        var += w * w * parts[i].error * parts[i].error;
        tau += w * parts[i].tau_int;
        out.count += parts[i].count;
    }
    out.error = std::sqrt(var);
    out.tau_int = tau;
    return out;
}

/// Upper-tail probability of a chi-square variable with `dof` degrees of freedom.
inline double chi_square_p_value(double statistic, double dof) {
    if (dof <= 0) throw Error(ErrorKind::invalid_parameter, "chi-square needs positive degrees of freedom");
    return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int pooled_cells = 0;
};

/// Goodness of fit of observed counts to expected probabilities; cells with expected count
/// below `min_expected` are pooled into one cell.
inline ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> probabilities,
                                       double min_expected = 5.0) {
    double total = 0.0;
    for (double o : observed) total += o;
    ChiSquareResult res;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double expected = probabilities[i] * total;
        if (expected < min_expected) {
            pooled_obs += observed[i];
            pooled_exp += expected;
            ++res.pooled_cells;
            continue;
        }
        res.statistic += (observed[i] - expected) * (observed[i] - expected) / expected;
        ++cells;
    }
    if (pooled_exp > 0.0) {
        res.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++cells;
    }
    res.dof = cells - 1;
    res.p_value = res.dof > 0 ? chi_square_p_value(res.statistic, res.dof) : 1.0;
    return res;
}

}  // namespace loopchain
