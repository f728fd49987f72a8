#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cpstir {

/// Monte Carlo estimate: the universal output record of every estimator.
struct EstimateReport {
  std::uint64_t n_reps = 0;
  double mean = 0.0;
  double std_error = 0.0;
  /// Labelled side values, e.g. {"horizon", 1e4}.
  std::vector<std::pair<std::string, double>> extra;
  /// Non-fatal diagnostics such as unmet theorem hypotheses.
  std::vector<std::string> notes;

  std::optional<double> extra_value(const std::string& name) const;
  EstimateReport& with(std::string name, double value) {
    extra.emplace_back(std::move(name), value);
    return *this;
  }
};

/// Streaming mean/variance (Welford) with an order-fixed merge.
class MeanAccumulator {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  void merge(const MeanAccumulator& other) noexcept;

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;
  double std_error() const noexcept;

  /// Throws std::logic_error for fewer than two samples.
  EstimateReport report() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Paired samples (x, y) for ratio-of-means estimates E[x] / E[y].
class RatioAccumulator {
 public:
  void add(double x, double y) noexcept;
  void merge(const RatioAccumulator& other) noexcept;

  std::uint64_t count() const noexcept { return n_; }
  double mean_x() const noexcept { return mx_; }
  double mean_y() const noexcept { return my_; }
  double covariance() const noexcept;
  double variance_x() const noexcept;
  double variance_y() const noexcept;

  /// Ratio of means with a first-order delta-method standard error
  /// that accounts for the covariance of the pair. Extras carry both means.
  EstimateReport report() const;

 private:
  std::uint64_t n_ = 0;
  double mx_ = 0.0, my_ = 0.0;
  double cxx_ = 0.0, cyy_ = 0.0, cxy_ = 0.0;
};

/// Validates n_reps >= 2 (std_error needs two samples).
void require_replications(std::uint64_t n_reps);

}  // namespace cpstir
