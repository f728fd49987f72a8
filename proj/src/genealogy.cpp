#include "cpstir/genealogy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpstir/replicate.hpp"

namespace cpstir {

// ---------------------------------------------------------------- TreeAddress

TreeAddress::TreeAddress(std::vector<std::uint32_t> path) : path_(std::move(path)) {
  for (auto n : path_) {
    if (n == 0) throw std::invalid_argument("tree address indices start at 1");
  }
}

TreeAddress TreeAddress::child(std::uint32_t n) const {
  if (n == 0) throw std::invalid_argument("child index starts at 1");
  TreeAddress a = *this;
  a.path_.push_back(n);
  return a;
}

TreeAddress TreeAddress::parent() const {
  if (is_root()) throw std::logic_error("the root has no parent");
  TreeAddress a = *this;
  a.path_.pop_back();
  return a;
}

std::uint32_t TreeAddress::child_index() const {
  if (is_root()) throw std::logic_error("the root has no child index");
  return path_.back();
}

std::string TreeAddress::to_string() const {
  std::string out = "o";
  for (auto n : path_) {
    out += '.';
    out += std::to_string(n);
  }
  return out;
}

TreeAddress TreeAddress::parse(std::string_view text) {
  if (text.empty() || text[0] != 'o') throw std::invalid_argument("tree address must start with 'o'");
  std::vector<std::uint32_t> path;
  std::size_t i = 1;
  while (i < text.size()) {
    if (text[i] != '.') throw std::invalid_argument("malformed tree address");
    ++i;
    std::uint64_t v = 0;
    const std::size_t start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      v = v * 10 + static_cast<std::uint64_t>(text[i] - '0');
      if (v > 0xffffffffULL) throw std::invalid_argument("tree address index too large");
      ++i;
    }
    if (i == start) throw std::invalid_argument("malformed tree address");
    path.push_back(static_cast<std::uint32_t>(v));
  }
  return TreeAddress(std::move(path));
}

// ------------------------------------------------------------- StirringEngine

StirringEngine::StirringEngine(int dim, double rate_per_edge) : dim_(dim), rate_(rate_per_edge) {
  check_dimension(dim);
  if (!(rate_per_edge >= 0.0) || !std::isfinite(rate_per_edge)) {
    throw std::invalid_argument("stirring rate must be finite and non-negative");
  }
}

void StirringEngine::occupy(const Site& x, std::vector<std::uint32_t> tokens) {
  for (int dir = 0; dir < num_directions(dim_); ++dir) {
    if (!occupied(x.shifted(dir))) ++active_edges_;
  }
  for (auto t : tokens) position_[t] = x;
  Cell cell{std::move(tokens), occupied_.size()};
  occupied_.push_back(x);
  cells_.emplace(x, std::move(cell));
}

std::vector<std::uint32_t> StirringEngine::vacate(const Site& x) {
  auto it = cells_.find(x);
  std::vector<std::uint32_t> tokens = std::move(it->second.tokens);
  const std::size_t slot = it->second.slot;
  cells_.erase(it);
  if (slot + 1 != occupied_.size()) {
    occupied_[slot] = occupied_.back();
    cells_.at(occupied_[slot]).slot = slot;
  }
  occupied_.pop_back();
  for (int dir = 0; dir < num_directions(dim_); ++dir) {
    if (!occupied(x.shifted(dir))) --active_edges_;
  }
  return tokens;
}

void StirringEngine::add(std::uint32_t token, const Site& x) {
  if (x.dim() != dim_) throw std::invalid_argument("site dimension mismatch");
  if (is_tracked(token)) throw std::logic_error("token already tracked");
  if (token >= tracked_.size()) {
    tracked_.resize(token + 1, false);
    position_.resize(token + 1);
  }
  tracked_[token] = true;
  auto it = cells_.find(x);
  if (it != cells_.end()) {
    it->second.tokens.push_back(token);
    position_[token] = x;
  } else {
    occupy(x, {token});
  }
}

void StirringEngine::remove(std::uint32_t token) {
  if (!is_tracked(token)) throw std::logic_error("token not tracked");
  tracked_[token] = false;
  const Site x = position_[token];
  auto& tokens = cells_.at(x).tokens;
  tokens.erase(std::find(tokens.begin(), tokens.end(), token));
  if (tokens.empty()) vacate(x);
}

std::size_t StirringEngine::tokens_at(const Site& x) const {
  auto it = cells_.find(x);
  return it == cells_.end() ? 0 : it->second.tokens.size();
}

std::uint64_t StirringEngine::recount_active_edges() const {
  std::uint64_t both = 0, one = 0;
  for (const auto& x : occupied_) {
    for (int dir = 0; dir < num_directions(dim_); ++dir) {
      if (occupied(x.shifted(dir))) {
        ++both;
      } else {
        ++one;
      }
    }
  }
  return one + both / 2;
}

StirringEngine::Edge StirringEngine::sample_active_edge(SeededStream& s) const {
  if (occupied_.empty()) throw std::logic_error("no active edge");
  // Occupied endpoint then direction; edges with two occupied endpoints are
  // proposed twice as often and accepted with probability 1/2.
  for (;;) {
    const Site& x = occupied_[s.below(occupied_.size())];
    const Site y = x.shifted(sample_direction(s, dim_));
    if (!occupied(y) || (s.next_u64() >> 63) == 0) return {x, y};
  }
}

void StirringEngine::swap_sites(const Site& a, const Site& b) {
  const bool occ_a = occupied(a), occ_b = occupied(b);
  if (occ_a && occ_b) {
    auto& ca = cells_.at(a).tokens;
    auto& cb = cells_.at(b).tokens;
    std::swap(ca, cb);
    for (auto t : ca) position_[t] = a;
    for (auto t : cb) position_[t] = b;
  } else if (occ_a) {
    const Site to = b;
    occupy(to, vacate(a));
  } else if (occ_b) {
    const Site to = a;
    occupy(to, vacate(b));
  }
}

// ------------------------------------------------------------ CoupledProcess

std::string_view to_string(EventRecord::Kind kind) {
  switch (kind) {
    case EventRecord::Kind::birth:
      return "birth";
    case EventRecord::Kind::blocked_birth:
      return "blocked_birth";
    case EventRecord::Kind::death:
      return "death";
    case EventRecord::Kind::ring:
      return "ring";
  }
  return "?";
}

namespace {

void validate(const CoupledOptions& o) {
  if (!(o.lambda >= 0.0) || !std::isfinite(o.lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(o.n_rate >= 0.0) || !std::isfinite(o.n_rate)) throw std::invalid_argument("N must be >= 0");
  check_dimension(o.dim);
  if (o.population_cap == 0) throw std::invalid_argument("population cap must be positive");
}

}  // namespace

CoupledProcess::CoupledProcess(const CoupledOptions& options, const SeededStream& stream)
    : options_((validate(options), options)),
      clock_stream_(stream.child("clock")),
      mark_stream_(stream.child("mark")),
      flow_stream_(stream.child("flow")),
      engine_(options.dim, options.n_rate) {
  Node root(kRoot, 0);
  root.psi = Status::present;
  root.xi = Status::present;
  root.psi_born = root.xi_born = 0.0;
  nodes_.push_back(std::move(root));
  psi_list_.push_back(kRoot);
  const Site origin = Site::origin(options.dim);
  engine_.add(kRoot, origin);
  xi_sites_[origin] = 1;
  xi_count_ = 1;
  record(EventRecord::Kind::birth, kRoot, origin.to_string());
}

const Site& CoupledProcess::position(Id id) const {
  if (nodes_.at(id).psi != Status::present) throw std::logic_error("particle is not present");
  return engine_.position(id);
}

TreeAddress CoupledProcess::address(Id id) const {
  std::vector<std::uint32_t> path;
  for (Id cur = id; cur != kRoot; cur = nodes_.at(cur).parent) path.push_back(nodes_[cur].index);
  std::reverse(path.begin(), path.end());
  return TreeAddress(std::move(path));
}

std::optional<CoupledProcess::Id> CoupledProcess::child(Id parent, std::uint32_t n) const {
  const auto& kids = nodes_.at(parent).children;
  if (n == 0 || n > kids.size()) return std::nullopt;
  return kids[n - 1];
}

std::size_t CoupledProcess::xi_at(const Site& x) const {
  auto it = xi_sites_.find(x);
  return it == xi_sites_.end() ? 0 : it->second;
}

void CoupledProcess::fail(const std::string& what) const {
  std::ostringstream msg;
  msg << "invariant violation at t=" << time_ << ": " << what;
  throw InvariantViolation(msg.str());
}

void CoupledProcess::record(EventRecord::Kind kind, Id id, const std::string& site) {
  if (!options_.record_events) return;
  events_.push_back({time_, kind, kind == EventRecord::Kind::ring ? std::string() : address(id).to_string(), site});
}

void CoupledProcess::maybe_audit(AuditLevel level) const {
  if (options_.audit != AuditLevel::none && options_.audit >= level) audit();
}

CoupledProcess::Id CoupledProcess::birth(Id parent, int direction) {
  if (nodes_.at(parent).psi != Status::present) throw std::logic_error("birth from an absent particle");
  if (direction < 0 || direction >= num_directions(options_.dim)) throw std::invalid_argument("bad direction");
  const Node& p = nodes_[parent];
  // Children are created in index order and never return to unborn, so the
  // lowest Psi-unborn child index is one past the last created child.
  const auto n = static_cast<std::uint32_t>(p.children.size() + 1);
  const bool parent_in_xi = p.xi == Status::present;
  std::uint32_t xi_next = n;
  if (parent_in_xi) {
    for (std::size_t i = 0; i < p.children.size(); ++i) {
      if (nodes_[p.children[i]].xi == Status::unborn) {
        xi_next = static_cast<std::uint32_t>(i + 1);
        break;
      }
    }
  }
  const Site target = engine_.position(parent).shifted(direction);
  const auto id = static_cast<Id>(nodes_.size());
  nodes_.emplace_back(parent, n);
  nodes_[parent].children.push_back(id);
  Node& c = nodes_[id];
  c.psi = Status::present;
  c.psi_born = time_;
  c.slot = psi_list_.size();
  psi_list_.push_back(id);
  engine_.add(id, target);

  auto kind = EventRecord::Kind::birth;
  if (parent_in_xi) {
    if (xi_next != n) {
      fail("next free child of " + address(parent).to_string() + " differs: Xi " + std::to_string(xi_next) +
           ", Psi " + std::to_string(n));
    }
    if (xi_at(target) > 0) {
      c.xi = Status::removed;
      kind = EventRecord::Kind::blocked_birth;
    } else {
      c.xi = Status::present;
      c.xi_born = time_;
      ++xi_sites_[target];
      ++xi_count_;
    }
  }
  record(kind, id, target.to_string());
  if (psi_list_.size() > options_.population_cap) truncated_ = true;
  maybe_audit(AuditLevel::genealogical);
  return id;
}

void CoupledProcess::death(Id id) {
  Node& a = nodes_.at(id);
  if (a.psi != Status::present) throw std::logic_error("death of an absent particle");
  const Site x = engine_.position(id);
  a.psi = Status::removed;
  a.psi_died = time_;
  const std::size_t slot = a.slot;
  if (slot + 1 != psi_list_.size()) {
    psi_list_[slot] = psi_list_.back();
    nodes_[psi_list_[slot]].slot = slot;
  }
  psi_list_.pop_back();
  if (a.xi == Status::present) {
    a.xi = Status::removed;
    a.xi_died = time_;
    auto it = xi_sites_.find(x);
    if (it == xi_sites_.end()) fail("Xi-present particle " + address(id).to_string() + " missing from xi");
    if (--it->second == 0) xi_sites_.erase(it);
    --xi_count_;
  }
  engine_.remove(id);
  record(EventRecord::Kind::death, id, x.to_string());
  maybe_audit(AuditLevel::genealogical);
}

void CoupledProcess::on_ring(const StirringEngine::Edge& e, double t) {
  time_ = t;
  auto ia = xi_sites_.find(e.a);
  auto ib = xi_sites_.find(e.b);
  const std::uint32_t ca = ia == xi_sites_.end() ? 0 : ia->second;
  const std::uint32_t cb = ib == xi_sites_.end() ? 0 : ib->second;
  if (ca != cb) {
    if (ia != xi_sites_.end()) xi_sites_.erase(ia);
    if (ib != xi_sites_.end()) xi_sites_.erase(e.b);
    if (ca) xi_sites_[e.b] = ca;
    if (cb) xi_sites_[e.a] = cb;
  }
  if (options_.record_events) events_.push_back({t, EventRecord::Kind::ring, {}, e.a.to_string() + "|" + e.b.to_string()});
  maybe_audit(AuditLevel::every_event);
}

void CoupledProcess::stir_until(double t) {
  if (t < time_) throw std::invalid_argument("cannot stir backwards in time");
  engine_.advance(time_, t, flow_stream_, [this](const StirringEngine::Edge& e, double when) { on_ring(e, when); });
  time_ = t;
}

void CoupledProcess::run_until(double t) {
  if (t < time_) throw std::invalid_argument("cannot run backwards in time");
  const double lambda = options_.lambda;
  while (!truncated_) {
    const std::size_t present = psi_list_.size();
    if (present == 0) {
      time_ = t;
      return;
    }
    const double rate = static_cast<double>(present) * (lambda + 1.0);
    const double next = time_ + sample_exponential(clock_stream_, rate);
    if (next >= t) {
      stir_until(t);
      return;
    }
    stir_until(next);
    const Id a = psi_list_[clock_stream_.below(present)];
    if (clock_stream_.uniform() * (lambda + 1.0) < lambda) {
      birth(a, sample_direction(mark_stream_, options_.dim));
    } else {
      death(a);
    }
  }
}

void CoupledProcess::audit() const {
  std::unordered_map<Site, std::uint32_t, SiteHash> xi_recount;
  std::size_t xi_seen = 0;
  for (std::size_t i = 0; i < psi_list_.size(); ++i) {
    const Id id = psi_list_[i];
    const Node& a = nodes_[id];
    if (a.psi != Status::present || a.slot != i) fail("Psi present list corrupt at " + address(id).to_string());
    if (!engine_.is_tracked(id)) fail("Psi-present particle " + address(id).to_string() + " has no location");
    if (a.xi != Status::present) continue;
    ++xi_seen;
    const Site& x = engine_.position(id);
    if (++xi_recount[x] > 1) fail("two Xi-present particles at " + x.to_string());
    std::uint32_t xi_next = 0, psi_next = 0;
    for (std::size_t k = 0; k < a.children.size(); ++k) {
      const Node& c = nodes_[a.children[k]];
      if (!xi_next && c.xi == Status::unborn) xi_next = static_cast<std::uint32_t>(k + 1);
      if (!psi_next && c.psi == Status::unborn) psi_next = static_cast<std::uint32_t>(k + 1);
    }
    const auto past_last = static_cast<std::uint32_t>(a.children.size() + 1);
    if ((xi_next ? xi_next : past_last) != (psi_next ? psi_next : past_last)) {
      fail("next free child of " + address(id).to_string() + " differs between Xi and Psi");
    }
  }
  // Xi-present particles outside the Psi-present set are missed above.
  if (xi_seen != xi_count_) fail("Xi-present set is not contained in the Psi-present set");
  if (xi_sites_.size() != xi_count_) fail("xi-occupied site count differs from Xi-present count");
  if (xi_recount.size() != xi_sites_.size()) fail("xi occupancy map out of date");
  for (const auto& [x, c] : xi_recount) {
    if (xi_at(x) != c) fail("xi occupancy at " + x.to_string() + " out of date");
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& a = nodes_[id];
    if (a.xi_born >= 0.0 && a.xi_born != a.psi_born) fail("Xi and Psi appearance times differ");
    if (a.xi_died >= 0.0 && a.xi_died != a.psi_died) fail("Xi and Psi removal times differ");
    if (a.xi == Status::present && a.psi != Status::present) fail("Xi-present particle absent from Psi");
  }
  if (engine_.recount_active_edges() != engine_.active_edges()) fail("active edge count out of date");
}

// ------------------------------------------------------------------ Psi only

PsiTrajectory evolve_psi(double lambda, std::span<const double> checkpoints, SeededStream& s,
                         std::size_t population_cap) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 0.0 || (i && checkpoints[i] < checkpoints[i - 1])) {
      throw std::invalid_argument("checkpoints must be non-negative and non-decreasing");
    }
  }
  struct Node {
    std::uint32_t parent;
    std::uint32_t next_child;  // lowest never-present child index
    std::size_t slot;
  };
  std::vector<Node> nodes{{0, 1, 0}};
  std::vector<std::uint32_t> present{0};

  PsiTrajectory out;
  double t = 0.0;
  for (double cp : checkpoints) {
    while (!present.empty() && !out.truncated) {
      const double next = t + sample_exponential(s, static_cast<double>(present.size()) * (lambda + 1.0));
      if (next >= cp) break;  // overshoot discarded: clocks are memoryless
      t = next;
      const auto pick = present[s.below(present.size())];
      if (s.uniform() * (lambda + 1.0) < lambda) {
        const auto id = static_cast<std::uint32_t>(nodes.size());
        ++nodes[pick].next_child;
        nodes.push_back({pick, 1, present.size()});
        present.push_back(id);
        if (present.size() > population_cap) out.truncated = true;
      } else {
        const std::size_t slot = nodes[pick].slot;
        present[slot] = present.back();
        nodes[present[slot]].slot = slot;
        present.pop_back();
      }
    }
    t = cp;
    out.present.push_back(present.size());
  }
  return out;
}

EstimateReport psi_mean(double lambda, double horizon, std::uint64_t n_reps, const SeededStream& s, unsigned workers,
                        std::size_t population_cap) {
  require_replications(n_reps);
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  struct Acc {
    MeanAccumulator mean;
    std::uint64_t truncated = 0;
    void merge(const Acc& o) {
      mean.merge(o.mean);
      truncated += o.truncated;
    }
  };
  const double checkpoint[] = {horizon};
  auto acc = replicate(
      n_reps, workers, s, [] { return Acc{}; },
      [&](std::uint64_t, SeededStream& rs, Acc& a) {
        const auto traj = evolve_psi(lambda, checkpoint, rs, population_cap);
        if (traj.truncated) {
          ++a.truncated;
        } else {
          a.mean.add(static_cast<double>(traj.present[0]));
        }
      });
  auto r = acc.mean.report();
  r.with("horizon", horizon)
      .with("target", std::exp((lambda - 1.0) * horizon))
      .with("truncated", static_cast<double>(acc.truncated));
  if (acc.truncated) r.notes.push_back("runs stopped at the population cap were excluded");
  return r;
}

// ------------------------------------------------------------ coupled runs

CoupledTrajectory evolve_coupled(const CoupledOptions& options, std::span<const double> checkpoints,
                                 const SeededStream& s) {
  CoupledProcess proc(options, s);
  CoupledTrajectory out;
  for (double cp : checkpoints) {
    proc.run_until(cp);
    if (proc.truncated()) {
      out.truncated = true;
      break;
    }
    out.checkpoints.push_back({cp, proc.psi_present(), proc.xi_present(), proc.xi_occupied_sites()});
  }
  out.events = proc.events();
  return out;
}

void CoupledSummary::merge(const CoupledSummary& o) {
  runs += o.runs;
  violations += o.violations;
  truncated += o.truncated;
  strict_runs += o.strict_runs;
  psi.merge(o.psi);
  xi.merge(o.xi);
  if (first_violation.empty()) first_violation = o.first_violation;
}

CoupledSummary coupled_summary(const CoupledOptions& options, double horizon, std::uint64_t n_reps,
                               const SeededStream& s, unsigned workers) {
  validate(options);
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  const double checkpoint[] = {horizon};
  return replicate(
      n_reps, workers, s, [] { return CoupledSummary{}; },
      [&](std::uint64_t rep, SeededStream& rs, CoupledSummary& a) {
        ++a.runs;
        try {
          const auto traj = evolve_coupled(options, checkpoint, rs);
          if (traj.truncated) {
            ++a.truncated;
            return;
          }
          const auto& c = traj.checkpoints.back();
          a.psi.add(static_cast<double>(c.psi_present));
          a.xi.add(static_cast<double>(c.xi_present));
          if (c.xi_present < c.psi_present) ++a.strict_runs;
        } catch (const InvariantViolation& e) {
          ++a.violations;
          if (a.first_violation.empty()) a.first_violation = "rep " + std::to_string(rep) + ": " + e.what();
        }
      });
}

// ------------------------------------------------------------------ events

double star_time(double n_rate) {
  if (!(n_rate > std::exp(1.0)) || !std::isfinite(n_rate)) throw std::invalid_argument("t* needs N > e");
  return 1.0 / std::log(n_rate);
}

double event_E_probability(double lambda, double n_rate) {
  const double ts = star_time(n_rate);
  const double lt = lambda * ts;
  return lt * lt / 2.0 * std::exp(-3.0 * ts - 3.0 * lt);
}

namespace {

std::size_t clock_count(const SeededStream& rs, std::string_view label, double rate, double window,
                        std::vector<double>* points = nullptr) {
  if (rate == 0.0) return 0;
  SeededStream s = rs.child(label);
  auto pts = sample_poisson_points(s, rate, window);
  const std::size_t n = pts.size();
  if (points) *points = std::move(pts);
  return n;
}

void validate_event_args(double lambda, double n_rate, int dim) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  star_time(n_rate);
  check_dimension(dim);
}

// Clock pattern of I(o,0): returns {T1, T2} or nothing.
std::optional<std::pair<double, double>> i_pattern(const SeededStream& rs, double lambda, double ts) {
  std::vector<double> b_o;
  if (clock_count(rs, "B_o", lambda, ts, &b_o) != 2) return std::nullopt;
  if (clock_count(rs, "D_o", 1.0, ts) || clock_count(rs, "D_beta", 1.0, ts) ||
      clock_count(rs, "D_gamma", 1.0, ts) || clock_count(rs, "B_beta", lambda, ts) ||
      clock_count(rs, "B_gamma", lambda, ts)) {
    return std::nullopt;
  }
  return std::make_pair(b_o[0], b_o[1]);
}

// Clock pattern of J(o,0): returns {T1, T2} or nothing.
std::optional<std::pair<double, double>> j_pattern(const SeededStream& rs, double lambda, double ts) {
  std::vector<double> b_o, b_beta;
  if (clock_count(rs, "B_o", lambda, ts, &b_o) != 1) return std::nullopt;
  if (clock_count(rs, "B_beta", lambda, ts, &b_beta) != 1 || !(b_o[0] < b_beta[0])) return std::nullopt;
  if (clock_count(rs, "D_o", 1.0, ts) || clock_count(rs, "D_beta", 1.0, ts) ||
      clock_count(rs, "D_gamma_prime", 1.0, ts) || clock_count(rs, "B_gamma_prime", lambda, ts)) {
    return std::nullopt;
  }
  return std::make_pair(b_o[0], b_beta[0]);
}

struct EventAcc {
  MeanAccumulator hit;
  MeanAccumulator pattern;
  std::uint64_t occurrences = 0;
  std::uint64_t violations = 0;
  void merge(const EventAcc& o) {
    hit.merge(o.hit);
    pattern.merge(o.pattern);
    occurrences += o.occurrences;
    violations += o.violations;
  }
};

int draw_direction(const SeededStream& rs, std::string_view label, int dim) {
  SeededStream m = rs.child(label);
  return sample_direction(m, dim);
}

template <class Body>
EventEstimate estimate_event(double lambda, double n_rate, int dim, std::uint64_t n_reps, const SeededStream& s,
                             unsigned workers, Body body) {
  validate_event_args(lambda, n_rate, dim);
  require_replications(n_reps);
  const double ts = star_time(n_rate);
  CoupledOptions opt;
  opt.lambda = lambda;
  opt.n_rate = n_rate;
  opt.dim = dim;
  opt.audit = AuditLevel::every_event;
  auto acc = replicate(
      n_reps, workers, s, [] { return EventAcc{}; },
      [&](std::uint64_t, SeededStream& rs, EventAcc& a) { body(rs, opt, ts, a); });
  EventEstimate out;
  out.probability = acc.hit.report();
  out.probability.with("t_star", ts).with("pattern_closed_form", event_E_probability(lambda, n_rate));
  out.pattern = acc.pattern.report();
  out.pattern.with("t_star", ts).with("target", event_E_probability(lambda, n_rate));
  out.occurrences = acc.occurrences;
  out.audit_violations = acc.violations;
  return out;
}

// Fresh descendants of o at time 0 are all particles, so the counts at t* are
// the whole Psi and Xi populations.
void audit_occurrence(const CoupledProcess& proc, EventAcc& a) {
  ++a.occurrences;
  if (proc.psi_present() != 3 || proc.xi_present() > 2) ++a.violations;
}

}  // namespace

EstimateReport estimate_event_E(double lambda, double n_rate, std::uint64_t n_reps, const SeededStream& s,
                                unsigned workers) {
  validate_event_args(lambda, n_rate, 1);
  require_replications(n_reps);
  const double ts = star_time(n_rate);
  auto acc = replicate(
      n_reps, workers, s, [] { return MeanAccumulator{}; },
      [&](std::uint64_t, SeededStream& rs, MeanAccumulator& a) { a.add(i_pattern(rs, lambda, ts) ? 1.0 : 0.0); });
  auto r = acc.report();
  r.with("t_star", ts).with("target", event_E_probability(lambda, n_rate));
  return r;
}

EventEstimate estimate_I_prob(double lambda, double n_rate, int dim, std::uint64_t n_reps, const SeededStream& s,
                              unsigned workers) {
  return estimate_event(
      lambda, n_rate, dim, n_reps, s, workers,
      [](const SeededStream& rs, const CoupledOptions& opt, double ts, EventAcc& a) {
        const auto times = i_pattern(rs, opt.lambda, ts);
        a.pattern.add(times ? 1.0 : 0.0);
        if (!times) {
          a.hit.add(0.0);
          return;
        }
        CoupledProcess proc(opt, rs.child("world"));
        proc.stir_until(times->first);
        const auto beta = proc.birth(CoupledProcess::kRoot, draw_direction(rs, "M_beta", opt.dim));
        proc.stir_until(times->second);
        const int dir_gamma = draw_direction(rs, "M_gamma", opt.dim);
        const bool occurs = proc.position(CoupledProcess::kRoot).shifted(dir_gamma) == proc.position(beta);
        proc.birth(CoupledProcess::kRoot, dir_gamma);
        proc.stir_until(ts);
        a.hit.add(occurs ? 1.0 : 0.0);
        if (occurs) audit_occurrence(proc, a);
      });
}

EventEstimate estimate_J_prob(double lambda, double n_rate, int dim, std::uint64_t n_reps, const SeededStream& s,
                              unsigned workers) {
  return estimate_event(
      lambda, n_rate, dim, n_reps, s, workers,
      [](const SeededStream& rs, const CoupledOptions& opt, double ts, EventAcc& a) {
        const auto times = j_pattern(rs, opt.lambda, ts);
        a.pattern.add(times ? 1.0 : 0.0);
        if (!times) {
          a.hit.add(0.0);
          return;
        }
        CoupledProcess proc(opt, rs.child("world"));
        proc.stir_until(times->first);
        const auto beta = proc.birth(CoupledProcess::kRoot, draw_direction(rs, "M_beta", opt.dim));
        proc.stir_until(times->second);
        const int dir = draw_direction(rs, "M_gamma_prime", opt.dim);
        const bool occurs = proc.position(CoupledProcess::kRoot) == proc.position(beta).shifted(dir);
        proc.birth(beta, dir);
        proc.stir_until(ts);
        a.hit.add(occurs ? 1.0 : 0.0);
        if (occurs) audit_occurrence(proc, a);
      });
}

// --------------------------------------------------------------- criterion

std::string_view to_string(CriterionVerdict v) {
  return v == CriterionVerdict::extinct_guaranteed ? "extinct_guaranteed" : "inconclusive";
}

CriterionResult extinction_criterion(double lambda, double n_rate, double p_lower) {
  if (!(p_lower >= 0.0 && p_lower <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  const double growth = std::exp(star_time(n_rate) * (lambda - 1.0)) - 2.0 * p_lower;
  return {growth < 1.0 ? CriterionVerdict::extinct_guaranteed : CriterionVerdict::inconclusive, growth, p_lower};
}

CriterionResult extinction_criterion(double lambda, double n_rate, const EstimateReport& p_I) {
  return extinction_criterion(lambda, n_rate, std::clamp(p_I.mean - 3.0 * p_I.std_error, 0.0, 1.0));
}

KeyRecursionResult key_estimate_recursion(const CoupledOptions& options, int k_max, std::uint64_t n_reps,
                                          const SeededStream& s, unsigned workers) {
  validate(options);
  require_replications(n_reps);
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  const double ts = star_time(options.n_rate);
  const std::size_t n_points = static_cast<std::size_t>(k_max) + 2;
  struct Acc {
    AccumulatorArray<MeanAccumulator> mean;
    AccumulatorArray<RatioAccumulator> ratio;
    std::uint64_t truncated = 0;
    void merge(const Acc& o) {
      mean.merge(o.mean);
      ratio.merge(o.ratio);
      truncated += o.truncated;
    }
  };
  auto acc = replicate(
      n_reps, workers, s,
      [n_points] { return Acc{AccumulatorArray<MeanAccumulator>(n_points), AccumulatorArray<RatioAccumulator>(n_points - 1)}; },
      [&](std::uint64_t, SeededStream& rs, Acc& a) {
        CoupledProcess proc(options, rs);
        std::vector<double> xi(n_points, 0.0);
        for (std::size_t k = 0; k < n_points; ++k) {
          proc.run_until(static_cast<double>(k) * ts);
          if (proc.truncated()) {
            ++a.truncated;
            return;
          }
          xi[k] = static_cast<double>(proc.xi_present());
          if (proc.xi_present() == 0) break;  // Xi cannot revive
        }
        for (std::size_t k = 0; k < n_points; ++k) a.mean[k].add(xi[k]);
        for (std::size_t k = 0; k + 1 < n_points; ++k) a.ratio[k].add(xi[k + 1], xi[k]);
      });
  KeyRecursionResult out;
  out.truncated = acc.truncated;
  for (std::size_t k = 0; k < n_points; ++k) {
    auto r = acc.mean[k].report();
    r.with("k", static_cast<double>(k)).with("time", static_cast<double>(k) * ts);
    out.xi_mean.push_back(std::move(r));
  }
  for (std::size_t k = 0; k + 1 < n_points; ++k) {
    auto r = acc.ratio[k].report();
    r.with("k", static_cast<double>(k));
    out.ratio.push_back(std::move(r));
  }
  return out;
}

}  // namespace cpstir
