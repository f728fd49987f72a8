#pragma once

// Coupled genealogy: the free branching process Psi on the tree of potential
// particles, particle locations driven by the stirring flow, and the thinned
// genealogy Xi whose present particles form the contact process with stirring
// xi (at most one particle per site).
//
// Tree: the root o has children s_1(o), s_2(o), ...; a birth on B_alpha creates
// the lowest-indexed child of alpha that has never been present. A new child is
// placed at its parent's location plus a uniform unit displacement M. The flow
// rings each edge at rate N and swaps the contents of its endpoints. Only edges
// with at least one occupied endpoint are ever scheduled: rings on empty edges
// move nothing, so dropping them leaves the law of every tracked trajectory
// unchanged (Poisson thinning), and the ringing edge among the active ones is
// uniform (superposition).

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cpstir/distributions.hpp"
#include "cpstir/estimate.hpp"
#include "cpstir/lattice.hpp"
#include "cpstir/rng.hpp"

namespace cpstir {

/// Vertex of the genealogy tree: the sequence of child indices from the root.
class TreeAddress {
 public:
  TreeAddress() = default;
  /// Throws std::invalid_argument if any index is zero.
  explicit TreeAddress(std::vector<std::uint32_t> path);

  static TreeAddress root() { return {}; }
  /// s_n(this); n >= 1.
  TreeAddress child(std::uint32_t n) const;
  /// p(this); throws std::logic_error on the root.
  TreeAddress parent() const;
  /// n such that this == s_n(parent()); throws std::logic_error on the root.
  std::uint32_t child_index() const;

  bool is_root() const noexcept { return path_.empty(); }
  std::size_t depth() const noexcept { return path_.size(); }
  const std::vector<std::uint32_t>& path() const noexcept { return path_; }

  /// "o" for the root, otherwise "o.1.2" style.
  std::string to_string() const;
  /// Inverse of to_string().
  static TreeAddress parse(std::string_view text);

  friend bool operator==(const TreeAddress&, const TreeAddress&) = default;
  friend auto operator<=>(const TreeAddress&, const TreeAddress&) = default;

 private:
  std::vector<std::uint32_t> path_;
};

/// Status of a particle in Psi or Xi. Transitions: unborn -> present,
/// present -> removed, and (Xi only, blocked birth) unborn -> removed.
enum class Status : std::int8_t { removed = -1, unborn = 0, present = 1 };

/// Breach of a coupling invariant; carries a diagnostic message.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positions of tracked tokens under the stirring flow on Z^d. Several tokens
/// may share a site; a ring on edge {x, y} swaps the full contents of x and y.
class StirringEngine {
 public:
  StirringEngine(int dim, double rate_per_edge);

  int dim() const noexcept { return dim_; }
  double rate_per_edge() const noexcept { return rate_; }

  /// Tokens are small dense integers chosen by the caller.
  void add(std::uint32_t token, const Site& x);
  void remove(std::uint32_t token);
  const Site& position(std::uint32_t token) const { return position_.at(token); }
  bool is_tracked(std::uint32_t token) const noexcept {
    return token < tracked_.size() && tracked_[token];
  }

  std::size_t tokens_at(const Site& x) const;
  bool occupied(const Site& x) const { return cells_.count(x) != 0; }
  std::size_t occupied_sites() const noexcept { return occupied_.size(); }

  /// Edges with at least one occupied endpoint, maintained incrementally.
  std::uint64_t active_edges() const noexcept { return active_edges_; }
  /// Same count rebuilt from the occupied sites.
  std::uint64_t recount_active_edges() const;
  double total_rate() const noexcept { return rate_ * static_cast<double>(active_edges_); }

  struct Edge {
    Site a;
    Site b;
  };
  /// Uniform active edge. Requires at least one occupied site.
  Edge sample_active_edge(SeededStream& s) const;
  /// Swaps the contents of two adjacent sites.
  void swap_sites(const Site& a, const Site& b);

  /// Runs rings from `now` until `until` and returns the number of rings.
  /// `on_ring(edge, time)` is called after each swap. The ring that would
  /// overshoot `until` is discarded.
  template <class OnRing>
  std::uint64_t advance(double now, double until, SeededStream& s, OnRing&& on_ring) {
    std::uint64_t rings = 0;
    double t = now;
    while (active_edges_ > 0 && rate_ > 0.0) {
      t += sample_exponential(s, total_rate());
      if (t >= until) break;
      const Edge e = sample_active_edge(s);
      swap_sites(e.a, e.b);
      ++rings;
      on_ring(e, t);
    }
    return rings;
  }
  std::uint64_t advance(double now, double until, SeededStream& s) {
    return advance(now, until, s, [](const Edge&, double) {});
  }

 private:
  struct Cell {
    std::vector<std::uint32_t> tokens;
    std::size_t slot = 0;  // index in occupied_
  };

  void occupy(const Site& x, std::vector<std::uint32_t> tokens);
  std::vector<std::uint32_t> vacate(const Site& x);

  int dim_;
  double rate_;
  std::unordered_map<Site, Cell, SiteHash> cells_;
  std::vector<Site> occupied_;
  std::vector<Site> position_;
  std::vector<bool> tracked_;
  std::uint64_t active_edges_ = 0;
};

/// How often CoupledProcess checks its invariants.
enum class AuditLevel {
  none,
  genealogical,  ///< after every birth and death
  every_event,   ///< also after every ring
};

struct CoupledOptions {
  double lambda = 1.0;
  /// Stirring rate per edge.
  double n_rate = 1.0;
  int dim = 2;
  /// Psi population at which the run stops with the truncation flag set.
  std::size_t population_cap = 100000;
  AuditLevel audit = AuditLevel::every_event;
  bool record_events = false;
};

struct EventRecord {
  enum class Kind { birth, blocked_birth, death, ring };
  double time;
  Kind kind;
  std::string address;  ///< particle address; empty for rings
  std::string site;     ///< birth/death site, or "x|y" for a ring
};

std::string_view to_string(EventRecord::Kind kind);

/// Psi, Xi and xi built on shared clocks. The root is present at the origin at
/// time 0. Drawing order inside one process is fixed, so a process is a pure
/// function of its options and stream.
class CoupledProcess {
 public:
  using Id = std::uint32_t;
  static constexpr Id kRoot = 0;

  CoupledProcess(const CoupledOptions& options, const SeededStream& stream);

  double time() const noexcept { return time_; }
  const CoupledOptions& options() const noexcept { return options_; }

  std::size_t psi_present() const noexcept { return psi_list_.size(); }
  std::size_t xi_present() const noexcept { return xi_count_; }
  std::size_t xi_occupied_sites() const noexcept { return xi_sites_.size(); }
  bool truncated() const noexcept { return truncated_; }
  std::size_t particles_touched() const noexcept { return nodes_.size(); }

  Status psi_status(Id id) const { return nodes_.at(id).psi; }
  Status xi_status(Id id) const { return nodes_.at(id).xi; }
  /// Location of a Psi-present particle.
  const Site& position(Id id) const;
  TreeAddress address(Id id) const;
  /// Child s_n(parent) if it was ever touched.
  std::optional<Id> child(Id parent, std::uint32_t n) const;
  /// Number of Xi-present particles at x.
  std::size_t xi_at(const Site& x) const;

  /// B-clock ring of a Psi-present particle with displacement direction
  /// `direction`; returns the new child. Applies the blocked-birth rule in Xi.
  Id birth(Id parent, int direction);
  /// D-clock ring of a Psi-present particle.
  void death(Id id);
  /// Advances the flow alone to time t >= time().
  void stir_until(double t);
  /// Full dynamics (clocks, displacements and flow) until time t.
  void run_until(double t);

  /// Checks every coupling invariant; throws InvariantViolation.
  void audit() const;

  const std::vector<EventRecord>& events() const noexcept { return events_; }

 private:
  struct Node {
    Node(Id p, std::uint32_t i) : parent(p), index(i) {}
    Id parent;
    std::uint32_t index;  // n with this == s_n(parent); 0 for the root
    Status psi = Status::unborn;
    Status xi = Status::unborn;
    double psi_born = -1.0, psi_died = -1.0;
    double xi_born = -1.0, xi_died = -1.0;
    std::size_t slot = 0;  // index in psi_list_ while present
    std::vector<Id> children;
  };

  void maybe_audit(AuditLevel level) const;
  void record(EventRecord::Kind kind, Id id, const std::string& site);
  void on_ring(const StirringEngine::Edge& e, double t);
  void fail(const std::string& what) const;

  CoupledOptions options_;
  SeededStream clock_stream_;
  SeededStream mark_stream_;
  SeededStream flow_stream_;
  StirringEngine engine_;
  std::vector<Node> nodes_;
  std::vector<Id> psi_list_;
  std::unordered_map<Site, std::uint32_t, SiteHash> xi_sites_;
  std::size_t xi_count_ = 0;
  double time_ = 0.0;
  bool truncated_ = false;
  std::vector<EventRecord> events_;
};

/// Present-count trajectory of Psi alone.
struct PsiTrajectory {
  std::vector<std::uint64_t> present;  ///< one entry per checkpoint
  bool truncated = false;
};

/// Psi from the single root with birth rate lambda and death rate 1, sampled at
/// increasing checkpoints. Stops with the truncation flag once the population
/// exceeds `population_cap`.
PsiTrajectory evolve_psi(double lambda, std::span<const double> checkpoints, SeededStream& s,
                         std::size_t population_cap = 100000);

/// E[#Psi present at t]; truncated runs are excluded and counted in the
/// "truncated" extra. The "target" extra is exp((lambda - 1) t).
EstimateReport psi_mean(double lambda, double horizon, std::uint64_t n_reps, const SeededStream& s,
                        unsigned workers = 1, std::size_t population_cap = 100000);

/// Counts of a coupled run at each checkpoint.
struct CoupledCheckpoint {
  double time;
  std::uint64_t psi_present;
  std::uint64_t xi_present;
  std::uint64_t xi_sites;
};

struct CoupledTrajectory {
  std::vector<CoupledCheckpoint> checkpoints;
  std::vector<EventRecord> events;
  bool truncated = false;
};

/// One coupled run audited per `options.audit`. Throws InvariantViolation.
CoupledTrajectory evolve_coupled(const CoupledOptions& options, std::span<const double> checkpoints,
                                 const SeededStream& s);

/// Aggregate of many coupled runs.
struct CoupledSummary {
  std::uint64_t runs = 0;
  std::uint64_t violations = 0;  ///< runs aborted by an invariant breach
  std::uint64_t truncated = 0;
  std::uint64_t strict_runs = 0;  ///< runs with #Xi < #Psi at the horizon
  MeanAccumulator psi;            ///< #Psi present at the horizon
  MeanAccumulator xi;             ///< #Xi present at the horizon
  std::string first_violation;

  void merge(const CoupledSummary& o);
};

CoupledSummary coupled_summary(const CoupledOptions& options, double horizon, std::uint64_t n_reps,
                               const SeededStream& s, unsigned workers = 1);

/// t* = 1 / log N. Throws std::invalid_argument unless N > e.
double star_time(double n_rate);

/// P[E] = (lambda t*)^2 / 2 * exp(-3 t* - 3 lambda t*).
double event_E_probability(double lambda, double n_rate);

struct EventEstimate {
  EstimateReport probability;   ///< frequency of I (or J)
  EstimateReport pattern;       ///< frequency of the clock pattern in the same runs
  std::uint64_t occurrences = 0;
  /// Occurrences violating #Psi = 3 and #Xi <= 2 among fresh descendants at t*.
  std::uint64_t audit_violations = 0;
};

/// Frequency of the clock pattern E on [0, t*]: no deaths of o, beta = s_1(o),
/// gamma = s_2(o), no births of beta or gamma, two births of o.
EstimateReport estimate_event_E(double lambda, double n_rate, std::uint64_t n_reps, const SeededStream& s,
                                unsigned workers = 1);

/// P[I(o,0)]: pattern E and, at the second birth T2 of o, location(o) + M_gamma
/// equals location(beta).
EventEstimate estimate_I_prob(double lambda, double n_rate, int dim, std::uint64_t n_reps, const SeededStream& s,
                              unsigned workers = 1);

/// P[J(o,0)]: one birth T1 of o, one birth T2 > T1 of beta, no deaths of o, beta,
/// gamma' = s_1(beta), no births of gamma', and location(o) equals
/// location(beta) + M_gamma' at T2.
EventEstimate estimate_J_prob(double lambda, double n_rate, int dim, std::uint64_t n_reps, const SeededStream& s,
                              unsigned workers = 1);

enum class CriterionVerdict { extinct_guaranteed, inconclusive };
std::string_view to_string(CriterionVerdict v);

struct CriterionResult {
  CriterionVerdict verdict;
  /// exp(t* (lambda - 1)) - 2 p.
  double growth_factor;
  double p_used;
};

/// Extinction guaranteed iff exp(t* (lambda - 1)) - 2 p < 1 with p in [0, 1].
CriterionResult extinction_criterion(double lambda, double n_rate, double p_lower);
/// Same with p = max(0, mean - 3 std_error) of an I estimate.
CriterionResult extinction_criterion(double lambda, double n_rate, const EstimateReport& p_I);

/// Mean #Xi at k t* for k = 0..k_max+1 and the ratio of consecutive means.
struct KeyRecursionResult {
  std::vector<EstimateReport> xi_mean;  ///< k = 0..k_max+1
  std::vector<EstimateReport> ratio;    ///< E[#Xi((k+1)t*)] / E[#Xi(k t*)], k = 0..k_max
  std::uint64_t truncated = 0;
};

KeyRecursionResult key_estimate_recursion(const CoupledOptions& options, int k_max, std::uint64_t n_reps,
                                          const SeededStream& s, unsigned workers = 1);

}  // namespace cpstir
