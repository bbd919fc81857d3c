#pragma once

// Probes of the geometric hypotheses behind weak convergence of Picard
// iterates: Opial margins, duality maps with a gauge, the modulus of
// convexity, and minimization of φ(y) = lim ‖T^n x - y‖ over fixed points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "meanfix/errors.hpp"
#include "meanfix/iteration.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sampling.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix {

/// Strictly increasing continuous μ : [0, ∞) → [0, ∞) with μ(0) = 0.
class GaugeFunction {
 public:
  GaugeFunction(std::string name, std::function<double(double)> rule)
      : name_(std::move(name)), rule_(std::move(rule)) {
    validate();
  }

  /// μ(t) = t^{p-1}, the gauge of the canonical duality map of ℓ^p.
  static GaugeFunction power(double p) {
    if (!(p > 1.0)) throw InvalidArgument("power gauge needs p > 1");
    GaugeFunction g("t^" + format_double(p - 1.0), [e = p - 1.0](double t) {
      return e == 1.0 ? t : std::pow(t, e);
    });
    g.power_exponent_ = p - 1.0;
    return g;
  }

  double operator()(double t) const { return rule_(t); }
  const std::string& name() const noexcept { return name_; }
  /// Set for t^e gauges.
  std::optional<double> power_exponent() const noexcept { return power_exponent_; }

 private:
  // Spot-checks the gauge axioms on a grid of [0, 16].
  void validate() const {
    if (rule_(0.0) != 0.0) throw InvalidArgument("gauge " + name_ + ": mu(0) must be 0");
    double prev = 0.0;
    for (int i = 1; i <= 256; ++i) {
      const double v = rule_(i / 16.0);
      if (!std::isfinite(v) || !(v > prev))
        throw InvalidArgument("gauge " + name_ + ": not strictly increasing on the sample grid");
      prev = v;
    }
  }

  std::string name_;
  std::function<double(double)> rule_;
  std::optional<double> power_exponent_;
};

/// Conjugate exponent p/(p-1).
inline double conjugate_exponent(double p) {
  if (!(p > 1.0)) throw InvalidArgument("conjugate exponent needs p > 1");
  return p / (p - 1.0);
}

// ---------------------------------------------------------------------------
// Opial margin

using SequenceGenerator = std::function<SeqVector(std::size_t)>;

/// n ↦ e_n in ℓ^p.
inline SequenceGenerator basis_sequence(double p) {
  return [p](std::size_t n) { return basis(n, p); };
}

struct OpialMargin {
  double liminf_to_limit = 0.0;
  double liminf_to_other = 0.0;
  /// liminf ‖u_n - v‖ - liminf ‖u_n - u‖; positive for Opial data.
  double margin = 0.0;
  /// weak_distance(u_N, u); small when u_n ⇀ u is plausible.
  double weak_gap = 0.0;
  std::size_t tail_begin = 0;
  std::size_t n = 0;
};

/// liminf estimates are minima over the tail n ∈ [⌈N/2⌉, N].
inline OpialMargin opial_margin(const SequenceGenerator& seq, const SeqVector& u, const SeqVector& v,
                                std::size_t n_terms) {
  if (n_terms == 0) throw InvalidArgument("opial_margin: N must be >= 1");
  OpialMargin out;
  out.n = n_terms;
  out.tail_begin = std::max<std::size_t>(1, (n_terms + 1) / 2);
  out.liminf_to_limit = out.liminf_to_other = std::numeric_limits<double>::infinity();
  for (std::size_t n = out.tail_begin; n <= n_terms; ++n) {
    const SeqVector un = seq(n);
    out.liminf_to_limit = std::min(out.liminf_to_limit, distance(un, u));
    out.liminf_to_other = std::min(out.liminf_to_other, distance(un, v));
    if (n == n_terms) out.weak_gap = weak_distance(un, u);
  }
  out.margin = out.liminf_to_other - out.liminf_to_limit;
  return out;
}

// ---------------------------------------------------------------------------
// Duality map

/// J x with (Jx)(x) = ‖Jx‖_q ‖x‖_p = μ(‖x‖_p) ‖x‖_p, returned as an element of
/// ℓ^q. For the power gauge t^{p-1} this is (|x_j|^{p-1} sgn x_j)_j.
inline SeqVector duality_map(const SeqVector& x, const GaugeFunction& mu) {
  const double p = x.p();
  if (p == 1.0) throw InvalidArgument("duality_map: l^1 has no single-valued duality map");
  const double q = conjugate_exponent(p);
  if (x.is_zero()) return SeqVector::zero(q);
  const double e = p - 1.0;
  std::vector<double> c(x.coeffs());
  for (double& v : c) {
    const double a = std::abs(v);
    const double mag = e == 1.0 ? a : std::pow(a, e);
    v = v < 0 ? -mag : mag;
  }
  if (mu.power_exponent() != e) {
    const double r = norm(x);
    const double s = mu(r) / (e == 1.0 ? r : std::pow(r, e));
    for (double& v : c) v *= s;
  }
  return SeqVector(std::move(c), q);
}

struct DualityIdentity {
  double pairing = 0.0;        // (Jx)(x)
  double norm_product = 0.0;   // ‖Jx‖_q ‖x‖_p
  double gauge_product = 0.0;  // μ(‖x‖_p) ‖x‖_p
  double max_error() const {
    return std::max({std::abs(pairing - norm_product), std::abs(pairing - gauge_product),
                     std::abs(norm_product - gauge_product)});
  }
};

inline DualityIdentity duality_identity(const SeqVector& x, const GaugeFunction& mu) {
  const SeqVector jx = duality_map(x, mu);
  const double r = norm(x);
  return {pairing(jx, x), norm(jx) * r, mu(r) * r};
}

struct WeakContinuityProbe {
  bool passed = false;
  /// Per test vector: max |(J u_n)(w)| over the second half of the run.
  std::vector<double> tail_max;
  std::vector<SeqVector> panel;
  double tol = 1e-9;
};

/// Default test vectors: e1, e2, e1 + e2 - e3, and (2^{-j})_{j ≤ 64}.
inline std::vector<SeqVector> default_weak_panel(double p) {
  std::vector<double> geometric(64);
  for (std::size_t j = 0; j < geometric.size(); ++j) geometric[j] = std::ldexp(1.0, -static_cast<int>(j + 1));
  return {basis(1, p), basis(2, p), SeqVector({1.0, 1.0, -1.0}, p), SeqVector(geometric, p)};
}

/// Evaluates (J u_n)(w) along a sequence and reports whether every pairing
/// has decayed below tol over n ∈ [⌈N/2⌉, N].
inline WeakContinuityProbe probe_weak_continuity_along(const SequenceGenerator& seq, const GaugeFunction& mu,
                                                       std::size_t n_terms, std::vector<SeqVector> panel,
                                                       double tol = 1e-9) {
  if (n_terms == 0) throw InvalidArgument("weak continuity probe: N must be >= 1");
  WeakContinuityProbe out;
  out.panel = std::move(panel);
  out.tol = tol;
  out.tail_max.assign(out.panel.size(), 0.0);
  for (std::size_t n = std::max<std::size_t>(1, (n_terms + 1) / 2); n <= n_terms; ++n) {
    const SeqVector jn = duality_map(seq(n), mu);
    for (std::size_t i = 0; i < out.panel.size(); ++i)
      out.tail_max[i] = std::max(out.tail_max[i], std::abs(pairing(jn, out.panel[i])));
  }
  out.passed = std::all_of(out.tail_max.begin(), out.tail_max.end(), [tol](double m) { return m <= tol; });
  return out;
}

/// J along the weakly null sequence (e_n) of ℓ^p against the default panel.
inline WeakContinuityProbe weak_continuity_probe(const GaugeFunction& mu, double p, std::size_t n_terms,
                                                 double tol = 1e-9) {
  if (!(p > 1.0)) throw InvalidArgument("weak continuity probe needs p > 1");
  return probe_weak_continuity_along(basis_sequence(p), mu, n_terms, default_weak_panel(p), tol);
}

// ---------------------------------------------------------------------------
// Modulus of convexity

struct ModulusEstimate {
  double eps = 0.0;
  double delta = 1.0;
  SeqVector u, v;
  std::size_t feasible_pairs = 0;
};

/// Sampled upper bounds on δ(ε) = inf{1 - ‖(u+v)/2‖ : ‖u‖,‖v‖ ≤ 1, ‖u-v‖ ≥ ε}
/// for every ε in `eps`, all read off one candidate pool. For each draw the
/// pool holds the pair (u, w) of sphere points, the antipodal pair (u, -u),
/// and the pairs (u, v_k) with v_k the normalized points of the segment from w
/// to -u, which sweeps ‖u - v‖ up to 2. Because the pool does not depend on
/// ε, the estimates are non-decreasing in ε.
inline std::vector<ModulusEstimate> modulus_of_convexity_curve(double p, const std::vector<double>& eps,
                                                               std::size_t samples, std::uint64_t seed,
                                                               std::size_t dim = 2) {
  if (!(p >= 1.0)) throw InvalidArgument("modulus: p must be >= 1");
  if (dim < 2) throw InvalidArgument("modulus: need at least two coordinates");
  for (double e : eps)
    if (!(e > 0.0 && e <= 2.0)) throw InvalidArgument("modulus: eps must lie in (0, 2]");
  std::vector<ModulusEstimate> out(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) out[i].eps = eps[i];

  auto consider = [&](const SeqVector& u, const SeqVector& v) {
    const double gap = distance(u, v);
    const double value = 1.0 - 0.5 * norm(u + v);
    for (auto& est : out) {
      // A few ulps of slack so that exact antipodes count for eps = 2.
      if (gap < est.eps * (1.0 - 4 * std::numeric_limits<double>::epsilon())) continue;
      ++est.feasible_pairs;
      if (value < est.delta || est.feasible_pairs == 1) {
        est.delta = value;
        est.u = u;
        est.v = v;
      }
    }
  };
  constexpr int kPathPoints = 8;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = make_stream(seed, i);
    const SeqVector u = sample_sphere(rng, dim, p);
    const SeqVector w = sample_sphere(rng, dim, p);
    consider(u, w);
    consider(u, -u);
    for (int k = 1; k < kPathPoints; ++k) {
      const double lam = static_cast<double>(k) / kPathPoints;
      const SeqVector s = (1.0 - lam) * w - lam * u;
      const double r = norm(s);
      if (r > 1e-12) consider(u, (1.0 / r) * s);
    }
  }
  return out;
}

inline ModulusEstimate modulus_of_convexity(double p, double eps, std::size_t samples, std::uint64_t seed,
                                            std::size_t dim = 2) {
  return modulus_of_convexity_curve(p, {eps}, samples, seed, dim).front();
}

/// δ(ε) = 1 - √(1 - ε²/4) in any inner-product space.
inline double hilbert_modulus(double eps) { return 1.0 - std::sqrt(1.0 - eps * eps / 4.0); }

// ---------------------------------------------------------------------------
// Asymptotic center over a candidate set of fixed points

struct AsymptoticCenterResult {
  double r0 = 0.0;
  SeqVector y0;
  std::size_t y0_index = 0;
  std::vector<SeqVector> candidates;
  std::vector<double> phi;
  std::string search_set;
  std::size_t tail_begin = 0;

  /// |{y : φ(y) ≤ r}| for each level; the sets F_r are nested.
  std::vector<std::size_t> level_counts(const std::vector<double>& levels) const {
    std::vector<std::size_t> counts;
    for (double r : levels)
      counts.push_back(static_cast<std::size_t>(std::count_if(phi.begin(), phi.end(), [r](double f) { return f <= r; })));
    return counts;
  }

  /// Diameter of {y : φ(y) ≤ r0 + slack}.
  double level_set_diameter(double slack) const {
    double diam = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (phi[i] > r0 + slack) continue;
      for (std::size_t j = i + 1; j < candidates.size(); ++j)
        if (phi[j] <= r0 + slack) diam = std::max(diam, distance(candidates[i], candidates[j]));
    }
    return diam;
  }
};

/// φ(y) = ‖T^n x - y‖ averaged over the last 10% of the orbit.
inline double phi_estimate(const IterationTrace& trace, const SeqVector& y, std::size_t tail_begin) {
  double s = 0.0;
  for (std::size_t n = tail_begin; n < trace.iterates.size(); ++n) s += distance(trace.iterates[n], y);
  return s / static_cast<double>(trace.iterates.size() - tail_begin);
}

/// Minimizes φ over `fixed_set`, each member of which must be a fixed point
/// of `op`. Ties go to the lowest candidate index.
inline AsymptoticCenterResult asymptotic_center(const Operator& op, const IterationTrace& trace,
                                                std::vector<SeqVector> fixed_set, std::string search_set = {},
                                                unsigned threads = 1) {
  if (fixed_set.empty()) throw InvalidArgument("asymptotic_center: empty candidate set");
  if (trace.iterates.empty()) throw InvalidArgument("asymptotic_center: empty trace");
  for (const auto& y : fixed_set) {
    const double r = residual(op, y);
    if (!(r <= kFixedPointTol))
      throw InvalidArgument("asymptotic_center: candidate " + to_string(y) + " is not fixed (residual " +
                            format_double(r) + ")");
  }
  AsymptoticCenterResult out;
  out.search_set = std::move(search_set);
  out.candidates = std::move(fixed_set);
  const std::size_t len = trace.iterates.size();
  out.tail_begin = len - std::max<std::size_t>(1, len / 10);
  out.phi.assign(out.candidates.size(), 0.0);
  parallel_chunks(out.candidates.size(), threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) out.phi[i] = phi_estimate(trace, out.candidates[i], out.tail_begin);
  });
  out.y0_index = static_cast<std::size_t>(std::min_element(out.phi.begin(), out.phi.end()) - out.phi.begin());
  out.y0 = out.candidates[out.y0_index];
  out.r0 = out.phi[out.y0_index];
  return out;
}

/// {lo·d, (lo+step)·d, …, hi·d}.
inline std::vector<SeqVector> line_grid(const SeqVector& direction, double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidArgument("grid: need step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<SeqVector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back((lo + static_cast<double>(k) * step) * direction);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const OpialMargin& m) {
  j = nlohmann::json{{"liminf_to_limit", m.liminf_to_limit},
                     {"liminf_to_other", m.liminf_to_other},
                     {"margin", m.margin},
                     {"weak_gap", m.weak_gap},
                     {"tail_begin", m.tail_begin},
                     {"n", m.n}};
}

inline void to_json(nlohmann::json& j, const WeakContinuityProbe& w) {
  j = nlohmann::json{{"passed", w.passed}, {"tail_max", w.tail_max}, {"panel", w.panel}, {"tol", w.tol}};
}

inline void to_json(nlohmann::json& j, const ModulusEstimate& m) {
  j = nlohmann::json{{"eps", m.eps}, {"delta", m.delta}, {"u", m.u}, {"v", m.v}, {"feasible_pairs", m.feasible_pairs}};
}

inline void to_json(nlohmann::json& j, const AsymptoticCenterResult& a) {
  j = nlohmann::json{{"r0", a.r0},          {"y0", a.y0},
                     {"y0_index", a.y0_index}, {"search_set", a.search_set},
                     {"phi", a.phi},        {"tail_begin", a.tail_begin}};
}

}  // namespace meanfix
