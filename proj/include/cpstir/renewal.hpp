#pragma once

// Two-type alternating renewal processes. Path i alternates a u-state sojourn
// U^(i)_n with a v-state sojourn V_n, starting in the u-state at time 0:
//   S_0 = 0, S_{2n+1} - S_{2n} = U^(i)_n, S_{2n+2} - S_{2n+1} = V_n.
// kappa_t is the time spent in the u-state during [0, t] and N_t the unique n
// with S_{2n} <= t < S_{2n+2}. Both paths read one shared V-sequence unless
// the non-default independent coupling is requested.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpstir/distributions.hpp"
#include "cpstir/estimate.hpp"
#include "cpstir/rng.hpp"

namespace cpstir {

struct RenewalSpec {
  DistributionSpec u1;
  DistributionSpec u2;
  DistributionSpec v;

  /// "u1=...;u2=...;v=..." using DistributionSpec::to_string.
  std::string describe() const;
};

struct RenewalPath {
  /// S_0, S_1, ..., S_{2N_t+2}; the last point is the first even point past t.
  std::vector<double> s_points;
  double horizon = 0.0;
  double kappa = 0.0;
  std::int64_t n_t = 0;

  /// |[0,t] ∩ union of u-blocks [S_2n, S_2n+1]|.
  double kappa_from_u_blocks() const;
  /// t - |[0,t] ∩ union of v-blocks [S_2n+1, S_2n+2]|.
  double kappa_from_v_blocks() const;
  /// N_t recomputed by search over s_points.
  std::int64_t count_renewals() const;
};

/// Lazily drawn i.i.d. sequence with a fixed stream, so index n always maps to
/// the same value no matter how far the sequence was extended.
class LazySequence {
 public:
  LazySequence(DistributionSpec spec, SeededStream stream) : spec_(std::move(spec)), stream_(stream) {}
  double operator[](std::size_t n);
  const std::vector<double>& drawn() const noexcept { return values_; }

 private:
  DistributionSpec spec_;
  SeededStream stream_;
  std::vector<double> values_;
};

enum class VCoupling {
  shared,       ///< one V-sequence feeds both paths
  independent,  ///< sensitivity option, not the coupling the ratio theorem uses
};

struct PairOptions {
  VCoupling v_coupling = VCoupling::shared;
  /// Drive both U-sequences from one stream (only meaningful when u1 == u2).
  bool common_u = false;
};

struct RenewalPair {
  RenewalPath first;
  RenewalPath second;
  std::vector<double> u1;  ///< U^(1)_n drawn so far
  std::vector<double> u2;
  std::vector<double> v1;  ///< V_n read by path 1
  std::vector<double> v2;  ///< V_n read by path 2 (equals v1 prefix when shared)
};

/// Builds one path from its sequences. Used by simulate_pair; exposed for tests.
RenewalPath build_path(double horizon, LazySequence& u, LazySequence& v);

RenewalPair simulate_pair(const RenewalSpec& spec, double horizon, const SeededStream& s,
                          PairOptions options = {});

/// E[kappa^(1)_t] / E[kappa^(2)_t], ratio of means with delta-method error.
/// Adds a note (no failure) when V has a finite mean.
EstimateReport kappa_ratio(const RenewalSpec& spec, double horizon, std::uint64_t n_reps, const SeededStream& s,
                           unsigned workers = 1, PairOptions options = {});

/// Delta_m: the largest distance between a point of the m-th u1-block window
/// [sum_{n<m} u1_n, sum_{n<=m} u1_n] and a point of the m-th u2-block window.
double delta_m(std::span<const double> u1, std::span<const double> u2, std::size_t m);

/// Delta_0..Delta_{m_max} in one pass.
std::vector<double> delta_sequence(std::span<const double> u1, std::span<const double> u2, std::size_t m_max);

/// E[max_{0<=m<=k} Delta_m] with U^(1) = 1. u2 must have mean 1 and a finite
/// second moment.
EstimateReport delta_max_statistic(const DistributionSpec& u2, std::uint64_t k, std::uint64_t n_reps,
                                   const SeededStream& s, unsigned workers = 1);

/// E[N_t] / t for path 1 at each horizon (one path per replication serves all
/// horizons). Horizons must be positive and increasing.
std::vector<EstimateReport> n_t_sublinearity(const RenewalSpec& spec, std::span<const double> horizons,
                                             std::uint64_t n_reps, const SeededStream& s, unsigned workers = 1);

struct BoundCheckResult {
  std::uint64_t paths = 0;
  std::uint64_t violations = 0;
  /// Smallest observed value of (max Delta_m) - |kappa2 - kappa1|.
  double min_slack = 0.0;
};

/// Checks |kappa^(2)_t - kappa^(1)_t| <= max_{0<=m<=N^(1)_t} Delta_m path by
/// path. Requires u1 = det:1.
BoundCheckResult kappa_difference_bound_check(const RenewalSpec& spec, double horizon, std::uint64_t n_reps,
                                              const SeededStream& s, unsigned workers = 1);

}  // namespace cpstir
