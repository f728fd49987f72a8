#include "cpstir/distributions.hpp"

#include <cstdlib>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cpstir {

double sample_exponential(SeededStream& s, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("exponential rate must be positive and finite");
  }
  return -std::log(s.uniform()) / rate;
}

std::vector<double> sample_poisson_points(SeededStream& s, double rate, double window_end) {
  std::vector<double> points;
  if (window_end <= 0.0) return points;
  double t = sample_exponential(s, rate);
  while (t <= window_end) {
    points.push_back(t);
    t += sample_exponential(s, rate);
  }
  return points;
}

Site sample_uniform_neighbor(SeededStream& s, int dim) {
  return Site::origin(dim).shifted(sample_direction(s, dim));
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be a positive finite real");
  }
}

std::vector<double> parse_numbers(std::string_view body) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto comma = body.find(',', pos);
    const auto token = body.substr(pos, comma == std::string_view::npos ? body.size() - pos : comma - pos);
    std::string tmp(token);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
      throw std::invalid_argument("malformed number '" + tmp + "' in distribution spec");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

DistributionSpec DistributionSpec::deterministic(double value) {
  require_positive(value, "deterministic value");
  return DistributionSpec(Deterministic{value});
}

DistributionSpec DistributionSpec::exponential(double rate) {
  require_positive(rate, "exponential rate");
  return DistributionSpec(Exponential{rate});
}

DistributionSpec DistributionSpec::pareto(double shape, double scale) {
  require_positive(shape, "pareto shape");
  require_positive(scale, "pareto scale");
  return DistributionSpec(Pareto{shape, scale});
}

DistributionSpec DistributionSpec::two_point(double first, double p, double second) {
  require_positive(first, "two-point value");
  require_positive(second, "two-point value");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("two-point probability must be in (0, 1]");
  return DistributionSpec(TwoPoint{first, p, second});
}

DistributionSpec DistributionSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("distribution spec needs the form kind:params, got '" + std::string(text) + "'");
  }
  const auto name = text.substr(0, colon);
  const auto args = parse_numbers(text.substr(colon + 1));
  auto expect = [&](std::size_t n) {
    if (args.size() != n) {
      throw std::invalid_argument("distribution '" + std::string(name) + "' takes " + std::to_string(n) +
                                  " parameter(s)");
    }
  };
  if (name == "det") {
    expect(1);
    return deterministic(args[0]);
  }
  if (name == "exp") {
    expect(1);
    return exponential(args[0]);
  }
  if (name == "pareto") {
    expect(2);
    return pareto(args[0], args[1]);
  }
  if (name == "two") {
    expect(3);
    return two_point(args[0], args[1], args[2]);
  }
  throw std::invalid_argument("unknown distribution kind '" + std::string(name) + "' (det, exp, pareto, two)");
}

std::string DistributionSpec::to_string() const {
  struct Visitor {
    std::string operator()(const Deterministic& d) const { return "det:" + fmt(d.value); }
    std::string operator()(const Exponential& e) const { return "exp:" + fmt(e.rate); }
    std::string operator()(const Pareto& p) const { return "pareto:" + fmt(p.shape) + "," + fmt(p.scale); }
    std::string operator()(const TwoPoint& t) const {
      return "two:" + fmt(t.first) + "," + fmt(t.p) + "," + fmt(t.second);
    }
  };
  return std::visit(Visitor{}, kind_);
}

double DistributionSpec::mean() const {
  struct Visitor {
    double operator()(const Deterministic& d) const { return d.value; }
    double operator()(const Exponential& e) const { return 1.0 / e.rate; }
    double operator()(const Pareto& p) const {
      if (p.shape <= 1.0) return std::numeric_limits<double>::infinity();
      return p.shape * p.scale / (p.shape - 1.0);
    }
    double operator()(const TwoPoint& t) const { return t.p * t.first + (1.0 - t.p) * t.second; }
  };
  return std::visit(Visitor{}, kind_);
}

bool DistributionSpec::has_finite_second_moment() const {
  if (const auto* p = std::get_if<Pareto>(&kind_)) return p->shape > 2.0;
  return true;
}

double sample_distribution(const DistributionSpec& spec, SeededStream& s) {
  struct Visitor {
    SeededStream& s;
    double operator()(const DistributionSpec::Deterministic& d) const { return d.value; }
    double operator()(const DistributionSpec::Exponential& e) const { return -std::log(s.uniform()) / e.rate; }
    double operator()(const DistributionSpec::Pareto& p) const {
      return p.scale * std::pow(s.uniform(), -1.0 / p.shape);
    }
    double operator()(const DistributionSpec::TwoPoint& t) const {
      return s.uniform() < t.p ? t.first : t.second;
    }
  };
  return std::visit(Visitor{s}, spec.kind());
}

}  // namespace cpstir
