#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tfim {

/// Monte Carlo estimate with binning error analysis.
struct QMCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int bins = 0;
    long bin_size = 0;
    double autocorrelation = 0.0;  // integrated autocorrelation time estimate
    bool autocorrelation_flag = false;  // error not converged under rebinning
};

namespace detail {

inline double bin_std_error(const std::vector<double>& bins) {
    const std::size_t m = bins.size();
    if (m < 2) return 0.0;
    double mean = 0;
    for (double b : bins) mean += b;
    mean /= m;
    double var = 0;
    for (double b : bins) var += (b - mean) * (b - mean);
    var /= (m - 1);
    return std::sqrt(var / m);
}

}  // namespace detail

/// Turn a series of per-bin means (plus the raw per-measurement variance)
/// into a QMCEstimate. The flag reports errors that still grow by more than
/// 20% when the bin size is doubled.
inline QMCEstimate analyze_bins(const std::vector<double>& bin_means, long bin_size,
                                double raw_variance = -1.0) {
    const int m = static_cast<int>(bin_means.size());
    if (m < 20) throw std::invalid_argument("analyze_bins: need at least 20 bins");
    QMCEstimate est;
    est.bins = m;
    est.bin_size = bin_size;
    for (double b : bin_means) est.mean += b;
    est.mean /= m;
    est.std_error = detail::bin_std_error(bin_means);

    std::vector<double> doubled;
    doubled.reserve(m / 2);
    for (int i = 0; i + 1 < m; i += 2)
        doubled.push_back(0.5 * (bin_means[i] + bin_means[i + 1]));
    const double err2 = detail::bin_std_error(doubled);
    if (est.std_error > 0)
        est.autocorrelation_flag = std::abs(err2 - est.std_error) > 0.2 * est.std_error;

    if (raw_variance > 0 && est.std_error > 0) {
        // sigma_binned^2 = (2 tau / n_total) sigma_raw^2
        const double n_total = static_cast<double>(m) * bin_size;
        est.autocorrelation =
            0.5 * est.std_error * est.std_error * n_total / raw_variance;
    }
    return est;
}

/// Combine estimates from independent chains by inverse-variance weighting.
inline QMCEstimate merge_estimates(const std::vector<QMCEstimate>& parts) {
    if (parts.empty()) throw std::invalid_argument("merge_estimates: empty input");
    if (parts.size() == 1) return parts.front();
    QMCEstimate out;
    double wsum = 0;
    for (const auto& p : parts) {
        if (p.std_error <= 0)
            throw std::invalid_argument("merge_estimates: zero-error input");
        const double w = 1.0 / (p.std_error * p.std_error);
        out.mean += w * p.mean;
        wsum += w;
        out.bins += p.bins;
        out.bin_size = std::max(out.bin_size, p.bin_size);
        out.autocorrelation = std::max(out.autocorrelation, p.autocorrelation);
        out.autocorrelation_flag = out.autocorrelation_flag || p.autocorrelation_flag;
    }
    out.mean /= wsum;
    out.std_error = std::sqrt(1.0 / wsum);
    return out;
}

/// Accumulates one scalar time series into fixed-size bins.
class BinSeries {
  public:
    explicit BinSeries(long bin_size = 1) { reset(bin_size); }

    void reset(long bin_size) {
        if (bin_size < 1) throw std::invalid_argument("BinSeries: bin size >= 1");
        bin_size_ = bin_size;
        bins_.clear();
        cur_sum_ = 0;
        cur_count_ = 0;
        raw_sum_ = raw_sq_ = 0;
        raw_n_ = 0;
    }

    void add(double x) {
        cur_sum_ += x;
        raw_sum_ += x;
        raw_sq_ += x * x;
        ++raw_n_;
        if (++cur_count_ == bin_size_) {
            bins_.push_back(cur_sum_ / bin_size_);
            cur_sum_ = 0;
            cur_count_ = 0;
        }
    }

    const std::vector<double>& bins() const { return bins_; }
    long bin_size() const { return bin_size_; }

    double raw_variance() const {
        if (raw_n_ < 2) return 0.0;
        const double mean = raw_sum_ / raw_n_;
        return std::max(0.0, raw_sq_ / raw_n_ - mean * mean);
    }

    QMCEstimate estimate() const { return analyze_bins(bins_, bin_size_, raw_variance()); }

    double raw_sum() const { return raw_sum_; }
    double raw_sq() const { return raw_sq_; }
    long raw_count() const { return raw_n_; }

    /// Checkpoint restore at a bin boundary (no partial bin).
    void restore(std::vector<double> bins, double raw_sum, double raw_sq, long raw_n) {
        bins_ = std::move(bins);
        raw_sum_ = raw_sum;
        raw_sq_ = raw_sq;
        raw_n_ = raw_n;
        cur_sum_ = 0;
        cur_count_ = 0;
    }

  private:
    long bin_size_ = 1;
    long cur_count_ = 0;
    double cur_sum_ = 0;
    double raw_sum_ = 0, raw_sq_ = 0;
    long raw_n_ = 0;
    std::vector<double> bins_;
};

}  // namespace tfim
