#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cpstir/lattice.hpp"
#include "cpstir/rng.hpp"

namespace cpstir {

/// Exp(rate) holding time. Throws std::invalid_argument if rate <= 0.
double sample_exponential(SeededStream& s, double rate);

/// Event times of a rate-`rate` Poisson process restricted to [0, window_end],
/// strictly increasing. An empty window yields no points.
std::vector<double> sample_poisson_points(SeededStream& s, double rate, double window_end);

/// Direction index uniform on the 2d neighbours of the origin.
inline int sample_direction(SeededStream& s, int dim) {
  return static_cast<int>(s.below(static_cast<std::uint64_t>(num_directions(dim))));
}

/// Site uniform on the 2d neighbours of the origin.
Site sample_uniform_neighbor(SeededStream& s, int dim);

/// A strictly positive random variable.
class DistributionSpec {
 public:
  struct Deterministic {
    double value;
  };
  struct Exponential {
    double rate;
  };
  /// P[X > x] = (scale / x)^shape for x >= scale.
  struct Pareto {
    double shape;
    double scale;
  };
  /// `first` with probability `p`, otherwise `second`.
  struct TwoPoint {
    double first;
    double p;
    double second;
  };
  using Kind = std::variant<Deterministic, Exponential, Pareto, TwoPoint>;

  static DistributionSpec deterministic(double value);
  static DistributionSpec exponential(double rate);
  static DistributionSpec pareto(double shape, double scale);
  static DistributionSpec two_point(double first, double p, double second);

  /// Parses `det:A`, `exp:RATE`, `pareto:SHAPE,SCALE` or `two:V1,P,V2`.
  static DistributionSpec parse(std::string_view text);
  /// Inverse of parse(); round-trips exactly.
  std::string to_string() const;

  const Kind& kind() const noexcept { return kind_; }
  /// Infinity when the mean diverges (Pareto with shape <= 1).
  double mean() const;
  bool has_finite_second_moment() const;
  bool is_deterministic() const { return std::holds_alternative<Deterministic>(kind_); }

  friend bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
    return a.to_string() == b.to_string();
  }

 private:
  explicit DistributionSpec(Kind k) : kind_(k) {}
  Kind kind_;
};

double sample_distribution(const DistributionSpec& spec, SeededStream& s);

}  // namespace cpstir
