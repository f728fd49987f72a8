#include "cpstir/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpstir {

std::optional<double> EstimateReport::extra_value(const std::string& name) const {
  for (const auto& [key, value] : extra) {
    if (key == name) return value;
  }
  return std::nullopt;
}

void MeanAccumulator::merge(const MeanAccumulator& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double n = na + nb;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double MeanAccumulator::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double MeanAccumulator::std_error() const noexcept {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

EstimateReport MeanAccumulator::report() const {
  if (n_ < 2) throw std::logic_error("an estimate needs at least two replications");
  EstimateReport r;
  r.n_reps = n_;
  r.mean = mean_;
  r.std_error = std_error();
  return r;
}

void RatioAccumulator::add(double x, double y) noexcept {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mx_;
  const double dy = y - my_;
  mx_ += dx / n;
  my_ += dy / n;
  cxx_ += dx * (x - mx_);
  cyy_ += dy * (y - my_);
  cxy_ += dx * (y - my_);
}

void RatioAccumulator::merge(const RatioAccumulator& o) noexcept {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double dx = o.mx_ - mx_;
  const double dy = o.my_ - my_;
  mx_ += dx * nb / n;
  my_ += dy * nb / n;
  cxx_ += o.cxx_ + dx * dx * na * nb / n;
  cyy_ += o.cyy_ + dy * dy * na * nb / n;
  cxy_ += o.cxy_ + dx * dy * na * nb / n;
  n_ += o.n_;
}

double RatioAccumulator::covariance() const noexcept {
  return n_ < 2 ? 0.0 : cxy_ / static_cast<double>(n_ - 1);
}
double RatioAccumulator::variance_x() const noexcept {
  return n_ < 2 ? 0.0 : cxx_ / static_cast<double>(n_ - 1);
}
double RatioAccumulator::variance_y() const noexcept {
  return n_ < 2 ? 0.0 : cyy_ / static_cast<double>(n_ - 1);
}

EstimateReport RatioAccumulator::report() const {
  if (n_ < 2) throw std::logic_error("an estimate needs at least two replications");
  if (my_ == 0.0) throw std::domain_error("ratio of means with zero denominator mean");
  const double r = mx_ / my_;
  // Var(x - r y) / (n E[y]^2)
  const double v = variance_x() - 2.0 * r * covariance() + r * r * variance_y();
  EstimateReport out;
  out.n_reps = n_;
  out.mean = r;
  out.std_error = std::sqrt(std::max(v, 0.0) / static_cast<double>(n_)) / std::abs(my_);
  out.with("mean_numerator", mx_).with("mean_denominator", my_);
  return out;
}

void require_replications(std::uint64_t n_reps) {
  if (n_reps < 2) throw std::invalid_argument("n_reps must be at least 2");
}

}  // namespace cpstir
