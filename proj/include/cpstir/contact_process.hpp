#pragma once

// Direct simulation of the contact process with stirring on Z^d: each particle
// dies at rate 1 and gives birth at rate lambda onto a uniform neighbour (void
// if occupied); each edge rings at rate N and swaps the contents of its
// endpoints. Configurations are finite sets stored sparsely.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cpstir/estimate.hpp"
#include "cpstir/lattice.hpp"
#include "cpstir/rng.hpp"

namespace cpstir {

struct ContactOptions {
  double lambda = 1.0;
  /// Stirring rate per edge.
  double n_rate = 0.0;
  int dim = 2;
};

class ContactProcess {
 public:
  enum class Event { death, birth, void_birth, stir };

  /// Starts from the single occupied site at the origin.
  explicit ContactProcess(const ContactOptions& options);
  ContactProcess(const ContactOptions& options, const std::vector<Site>& initial);

  const ContactOptions& options() const noexcept { return options_; }
  double time() const noexcept { return time_; }
  std::size_t size() const noexcept { return sites_.size(); }
  bool empty() const noexcept { return sites_.empty(); }
  bool contains(const Site& x) const { return index_.count(x) != 0; }
  /// Occupied sites in internal order.
  const std::vector<Site>& sites() const noexcept { return sites_; }

  /// Edges with at least one occupied endpoint.
  std::uint64_t active_edges() const noexcept { return mixed_edges_ + full_edges_; }
  /// Edges with exactly one occupied endpoint: the only rings that change the set.
  std::uint64_t mixed_edges() const noexcept { return mixed_edges_; }
  /// #particles (1 + lambda) + N #active edges.
  double total_rate() const noexcept;
  /// Rate of events that can change the configuration: rings on edges with
  /// both endpoints occupied are skipped because a swap leaves the set as is.
  double effective_rate() const noexcept;
  /// Both counts rebuilt from scratch: {mixed, full}.
  std::pair<std::uint64_t, std::uint64_t> recount_edges() const;

  /// One Gillespie step over the effective events. Throws std::logic_error
  /// on the empty (absorbing) configuration. Returns the holding time.
  double step(SeededStream& s);
  Event last_event() const noexcept { return last_; }

  /// Runs until `horizon`, extinction, or size >= `cap` (0 = no cap).
  void run_until(double horizon, SeededStream& s, std::size_t cap = 0);

 private:
  void apply_event(SeededStream& s);
  void insert(const Site& x);
  void erase(const Site& x);

  ContactOptions options_;
  double time_ = 0.0;
  std::vector<Site> sites_;
  std::unordered_map<Site, std::size_t, SiteHash> index_;
  std::uint64_t mixed_edges_ = 0;
  std::uint64_t full_edges_ = 0;
  Event last_ = Event::stir;
};

/// Survival proxy from a single particle at the origin: alive at `horizon`, or
/// population reaching `cap` earlier. Extras: alive_at_horizon and hit_cap
/// (fractions of replications).
EstimateReport survival_probability(const ContactOptions& options, double horizon, std::size_t cap,
                                    std::uint64_t n_reps, const SeededStream& s, unsigned workers = 1,
                                    std::uint64_t first_rep = 0);

struct LambdaProbe {
  double lambda;
  double survival;
  double std_error;
  std::uint64_t n_reps;
  bool above;  ///< survival >= threshold
};

struct LambdaCSearch {
  int dim = 2;
  double n_rate = 0.0;
  double horizon = 50.0;
  std::size_t cap = 10000;
  double threshold = 0.02;
  double tol = 0.05;
  double lower = 1.0;
  double upper = 3.0;
  /// Replications per probe when the early stop does not trigger.
  std::uint64_t reps_per_probe = 2000;
  /// Batch size between early-stop checks.
  std::uint64_t batch = 200;
};

struct LambdaCInterval {
  double lower;
  double upper;
  std::vector<LambdaProbe> probes;
  std::string note;
};

/// Bisection on lambda for survival >= threshold. Every probe replays the same
/// replication streams, so the survival curve is seed-coupled across lambda.
/// A threshold <= 0 returns the lower endpoint (every lambda survives). Throws
/// std::invalid_argument if the initial interval does not bracket.
LambdaCInterval estimate_lambda_c(const LambdaCSearch& search, const SeededStream& s, unsigned workers = 1);

/// 1 + (G(0,0) - 1)/(2 d N) for d = 3 and 1 + log N/(4 pi N) for d = 2.
double asymptotic_lower_bound(int dim, double n_rate);

}  // namespace cpstir
