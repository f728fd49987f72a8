#pragma once

// Two particles under rate-1 exclusion dynamics, seen through their
// difference X = A - B, and the free comparison walk Y.
//
// Rate conventions: each of A, B jumps across each incident edge at rate 1, so
// the difference moves by each unit vector at rate 2 and jumps at total rate
// 4d away from N_0. Two independent walks that each jump at total rate 2d have
// a difference that also jumps at rate 4d; that is Y. On N_0 the exclusion
// difference cannot enter the origin and instead swaps z -> -z at rate 1 (the
// shared edge rings), giving total rate 1 + 2(2d - 1).

#include <cstdint>
#include <span>
#include <vector>

#include "cpstir/estimate.hpp"
#include "cpstir/lattice.hpp"
#include "cpstir/rng.hpp"

namespace cpstir {

enum class WalkKind { exclusion_difference, free_difference };

/// N_0 is the set of neighbours of the origin; N̄_0 adds the origin.
enum class TrackedSet { neighbors, closed_neighbors };

enum class ExcursionTarget {
  u_x,     ///< first exit time of X from N_0
  u_y,     ///< first exit time of Y from N̄_0
  u_y_n0,  ///< time Y spends in N_0 before that exit
  u_y_0,   ///< time Y spends at the origin before that exit
};

struct DifferenceState {
  Site position;
  double clock = 0.0;
  double local_time_n0 = 0.0;
  double local_time_origin = 0.0;
};

struct StepOutcome {
  DifferenceState state;
  double holding_time = 0.0;
};

/// Total jump rate of the given walk at `x` (rate_scale = 1).
double total_jump_rate(const Site& x, WalkKind kind);

/// Samples a jump target from `x` given that a jump occurs.
Site sample_jump(const Site& x, WalkKind kind, SeededStream& s);

/// One holding interval plus the jump that ends it. All rates are multiplied
/// by `rate_scale` (the time change of a rate-N flow). Local-time counters
/// advance by the holding time while the pre-jump position is in N_0 or at 0.
/// Throws std::logic_error for the exclusion difference at the origin.
StepOutcome step(const DifferenceState& state, WalkKind kind, SeededStream& s, double rate_scale = 1.0);

/// Uniform point of N_0 (the initial condition A_0 ~ B_0).
Site uniform_start(int dim, SeededStream& s);

bool in_tracked_set(const Site& x, TrackedSet set) noexcept;

struct ExcursionSample {
  double u_x = 0.0;
  double u_y = 0.0;
  double u_y_n0 = 0.0;
  double u_y_0 = 0.0;
};

/// One excursion from a uniform start in N_0. For the exclusion difference only
/// `u_x` is filled; for the free walk the three Y fields are.
ExcursionSample sample_excursion(WalkKind kind, int dim, SeededStream& s);

EstimateReport excursion_mean(WalkKind kind, ExcursionTarget target, int dim, std::uint64_t n_reps,
                              const SeededStream& s, unsigned workers = 1);

/// Expected occupation time of `set` up to each horizon, all horizons from the
/// same replications (so the series is path-wise nondecreasing). Horizons must
/// be nonnegative and nondecreasing. Accumulation is exact (holding times), no
/// time grid. Each report carries extra "horizon".
std::vector<EstimateReport> local_time_series(WalkKind kind, TrackedSet set, std::span<const double> horizons,
                                              int dim, std::uint64_t n_reps, const SeededStream& s,
                                              unsigned workers = 1, double rate_scale = 1.0);

/// Least-squares slope of the occupation time against log t over `horizons`,
/// computed per path so the standard error accounts for the correlation
/// between horizons. Horizons must be positive and nondecreasing.
EstimateReport local_time_log_slope(WalkKind kind, TrackedSet set, std::span<const double> horizons, int dim,
                                    std::uint64_t n_reps, const SeededStream& s, unsigned workers = 1);

EstimateReport local_time_estimate(WalkKind kind, TrackedSet set, double horizon, int dim, std::uint64_t n_reps,
                                   const SeededStream& s, unsigned workers = 1, double rate_scale = 1.0);

/// G(0,0) of discrete-time simple random walk on Z^3, by Gauss-Legendre
/// quadrature of the lattice integral after integrating out one momentum
/// analytically and removing the 1/|k| singularity with a Duffy transform.
double green_origin_d3_quadrature(int order = 64);

/// Value of green_origin_d3_quadrature() at convergence (order >= 48).
inline constexpr double kGreenOriginD3 = 1.5163860591519780;

/// G(0,0) for Z^3.
double green_constant_d3();

/// Walk-simulation estimate of G(0,0) for Z^3: visits to the origin of a
/// discrete-time walk during `max_steps` steps, plus the asymptotic tail of
/// the return probabilities beyond that (extra "tail_correction").
EstimateReport green_origin_d3_walk(std::uint64_t max_steps, std::uint64_t n_reps, const SeededStream& s,
                                    unsigned workers = 1);

/// (G(0,0) - 1) / 2: limit of the N_0 local time in d = 3.
inline double local_time_limit_d3() { return (green_constant_d3() - 1.0) / 2.0; }

struct PairSnapshot {
  double time = 0.0;
  Site a;
  Site b;
};

/// Literal two-particle exclusion with rate 1 per edge (a ring of the shared
/// edge swaps the particles). Starts with B_0 at the origin and A_0 uniform on
/// its neighbours. Returns the state after every event up to `horizon`,
/// beginning with the initial state at time 0.
std::vector<PairSnapshot> dual_pair_trace(int dim, double horizon, SeededStream& s);

/// State of a trace at time t (the last snapshot with time <= t).
const PairSnapshot& pair_state_at(std::span<const PairSnapshot> trace, double t);

}  // namespace cpstir
