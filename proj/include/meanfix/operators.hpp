#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meanfix/errors.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix {

/// Default number of ℓ² coordinates kept by the built-in operators.
inline constexpr std::size_t kDefaultTruncation = 64;

/// The convex set C a map acts on: a closed ball of ℓ^p, or the whole
/// (truncated) space. The whole space is only samplable when a finite
/// sampling radius is attached.
struct Domain {
  enum class Kind { Ball, WholeSpace };

  Kind kind = Kind::Ball;
  double radius = 1.0;
  double ambient_p = 2.0;
  std::size_t dim = kDefaultTruncation;
  std::optional<double> sampling_radius;

  static Domain ball(double radius, double p, std::size_t dim) {
    return Domain{Kind::Ball, radius, p, dim, radius};
  }
  static Domain whole(double p, std::size_t dim, std::optional<double> sampling_radius = {}) {
    return Domain{Kind::WholeSpace, std::numeric_limits<double>::infinity(), p, dim, sampling_radius};
  }

  bool contains(const SeqVector& x, double tol = 1e-12) const {
    if (x.p() != ambient_p) return false;
    if (x.support() > dim) return false;
    return kind == Kind::WholeSpace || norm(x) <= radius + tol;
  }

  std::string describe() const {
    const std::string space = "l^" + format_double(ambient_p) + " (dim " + std::to_string(dim) + ")";
    if (kind == Kind::Ball) return "ball of radius " + format_double(radius) + " in " + space;
    return "all of " + space;
  }
};

/// A named self-map T : C -> C. The rule must be pure.
class Operator {
 public:
  using Rule = std::function<SeqVector(const SeqVector&)>;

  Operator(std::string name, Domain domain, Rule rule, std::string summary = {})
      : name_(std::move(name)), domain_(domain), rule_(std::move(rule)), summary_(std::move(summary)) {}

  const std::string& name() const noexcept { return name_; }
  const Domain& domain() const noexcept { return domain_; }
  const std::string& summary() const noexcept { return summary_; }

  /// Evaluates T on the first `domain().dim` coordinates of x.
  SeqVector operator()(const SeqVector& x) const {
    if (x.p() != domain_.ambient_p)
      throw AmbientSpaceError(name_ + ": expected a vector of l^" + format_double(domain_.ambient_p));
    return rule_(x.size() > domain_.dim ? x.truncated(domain_.dim) : x);
  }

 private:
  std::string name_;
  Domain domain_;
  Rule rule_;
  std::string summary_;
};

// ---------------------------------------------------------------------------
// The piecewise-linear scalar map τ : [-1, 1] -> [-1, 1].

inline const double kSqrt2 = std::sqrt(2.0);
/// Half-width of the flat middle branch, (√2 - 1)/√2.
inline const double kTauKink = (std::sqrt(2.0) - 1.0) / std::sqrt(2.0);
/// Weight √(2/3) applied to the third coordinate by the example map.
inline const double kExampleWeight = std::sqrt(2.0 / 3.0);

/// Arguments up to 1 + 1e-12 in magnitude are accepted so that points on the
/// boundary of the unit ball survive rounding.
inline double tau(double t) {
  if (!(std::abs(t) <= 1.0 + 1e-12))
    throw DomainError("tau: argument " + format_double(t) + " outside [-1, 1]");
  if (t <= -kTauKink) return kSqrt2 * t + (kSqrt2 - 1.0);
  if (t >= kTauKink) return kSqrt2 * t - (kSqrt2 - 1.0);
  return 0.0;
}

/// (x1, x2, x3, ...) ↦ (τ(x2), √(2/3)·x3, x4, x5, ...) on the closed unit
/// ball of ℓ². Mean nonexpansive for α = (½, ½), p = 2, while every iterate
/// has Lipschitz constant above one.
inline SeqVector example_map(const SeqVector& x) {
  if (x.p() != 2.0) throw AmbientSpaceError("example_map: defined on l^2 only");
  const double r = norm(x);
  if (r > 1.0 + 1e-12)
    throw DomainError("example_map: ||x||_2 = " + format_double(r) + " exceeds the unit ball");
  const std::size_t n = x.size();
  if (n <= 1) return SeqVector::zero(2.0);
  std::vector<double> out(n - 1);
  out[0] = tau(x.coord(2));
  if (n >= 3) out[1] = kExampleWeight * x.coord(3);
  for (std::size_t j = 3; j + 1 <= n; ++j) out[j - 1] = x.coord(j + 1);
  return SeqVector(std::move(out), 2.0);
}

inline Operator make_example_operator(std::size_t dim = kDefaultTruncation) {
  return Operator("example", Domain::ball(1.0, 2.0, dim), example_map,
                  "(x1,x2,x3,...) -> (tau(x2), sqrt(2/3) x3, x4, ...) on the unit ball of l^2");
}

inline Operator make_identity_operator(std::size_t dim = kDefaultTruncation) {
  return Operator("identity", Domain::ball(1.0, 2.0, dim), [](const SeqVector& x) { return x; },
                  "x -> x");
}

inline Operator make_scale_operator(double c, std::size_t dim = kDefaultTruncation) {
  return Operator("scale:" + format_double(c), Domain::ball(1.0, 2.0, dim),
                  [c](const SeqVector& x) { return c * x; }, "x -> c x");
}

/// (a, b) ↦ (a, b/2) on ℝ²; nonexpansive with fixed-point line b = 0.
inline Operator make_planar_halving_operator() {
  return Operator(
      "planar-halving", Domain::whole(2.0, 2, 10.0),
      [](const SeqVector& x) { return SeqVector({x.coord(1), 0.5 * x.coord(2)}, x.p()); },
      "(a,b) -> (a, b/2) on R^2");
}

/// Backward shift (x1, x2, ...) ↦ (x2, x3, ...) on the unit ball.
inline Operator make_shift_operator(std::size_t dim = kDefaultTruncation) {
  return Operator(
      "shift", Domain::ball(1.0, 2.0, dim),
      [](const SeqVector& x) {
        if (x.size() <= 1) return SeqVector::zero(x.p());
        return SeqVector(std::vector<double>(x.coeffs().begin() + 1, x.coeffs().end()), x.p());
      },
      "(x1,x2,...) -> (x2,x3,...) on the unit ball of l^2");
}

/// Looks up a corpus operator by name; parameters follow a colon ("scale:0.5").
inline Operator make_operator(const std::string& spec, std::size_t dim = kDefaultTruncation) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string param = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (head != "scale" && colon != std::string::npos)
    throw InvalidArgument("operator '" + head + "' takes no parameter");
  if (head == "example") return make_example_operator(dim);
  if (head == "identity") return make_identity_operator(dim);
  if (head == "shift") return make_shift_operator(dim);
  if (head == "planar-halving") return make_planar_halving_operator();
  if (head == "scale") {
    if (param.empty()) throw InvalidArgument("scale needs a factor, e.g. scale:0.5");
    return make_scale_operator(parse_double(param), dim);
  }
  throw InvalidArgument("unknown operator '" + spec + "'");
}

inline std::vector<std::string> corpus_names() {
  return {"example", "identity", "scale:<c>", "planar-halving", "shift"};
}

/// T^k x; k = 0 returns x.
inline SeqVector iterate_k(const Operator& op, SeqVector x, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i) x = op(x);
  return x;
}

/// ‖Tx - x‖.
inline double residual(const Operator& op, const SeqVector& x) { return distance(op(x), x); }

}  // namespace meanfix
