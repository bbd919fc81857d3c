#pragma once

// Picard iteration and the constructive steps behind the weak-convergence
// argument: the monotone index selection (k_n), the limit q of ‖T^n x - y‖,
// the weak cluster points of the orbit, and the check ω_w(x) ⊆ F(T).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "meanfix/errors.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix {

inline constexpr std::size_t kDefaultIterations = 200;
inline constexpr double kDefaultIterationTol = 1e-8;
/// A reference point must satisfy ‖Ty - y‖ ≤ this to count as fixed.
inline constexpr double kFixedPointTol = 1e-10;

struct IterationTrace {
  std::string operator_name;
  SeqVector start;
  /// T^0 x, …, T^N x.
  std::vector<SeqVector> iterates;
  /// r_n = ‖T^n x - T^{n+1} x‖, n = 0..N-1.
  std::vector<double> residuals;
  std::optional<SeqVector> reference;
  /// d_n = ‖T^n x - y‖, n = 0..N (empty without a reference).
  std::vector<double> distances;
  std::vector<std::size_t> functional_indices;
  /// functional_values[n][i] = f_i(T^n x).
  std::vector<std::vector<double>> functional_values;

  std::size_t steps() const noexcept { return residuals.size(); }
};

/// Runs N Picard steps from x. A reference y, when given, must be an
/// approximate fixed point; the distance sequence is only meaningful then.
inline IterationTrace run_iteration(const Operator& op, const SeqVector& x, std::size_t n_steps,
                                    const std::optional<SeqVector>& reference = std::nullopt,
                                    const std::vector<CoordinateFunctional>& functionals = {}) {
  if (!op.domain().contains(x))
    throw DomainError("run_iteration: start " + to_string(x) + " is not in " + op.domain().describe());
  if (reference) {
    const double r = residual(op, *reference);
    if (!(r <= kFixedPointTol))
      throw InvalidArgument("run_iteration: reference " + to_string(*reference) + " has residual " +
                            format_double(r) + " > " + format_double(kFixedPointTol) +
                            "; distances to it need a fixed point of T");
  }
  IterationTrace t;
  t.operator_name = op.name();
  t.start = x;
  t.reference = reference;
  for (const auto& f : functionals) t.functional_indices.push_back(f.index());
  t.iterates.reserve(n_steps + 1);
  t.iterates.push_back(x);
  for (std::size_t n = 0; n < n_steps; ++n) {
    SeqVector next = op(t.iterates.back());
    t.residuals.push_back(distance(t.iterates.back(), next));
    t.iterates.push_back(std::move(next));
  }
  for (const auto& v : t.iterates) {
    if (reference) t.distances.push_back(distance(v, *reference));
    std::vector<double> row;
    for (const auto& f : functionals) row.push_back(f(v));
    t.functional_values.push_back(std::move(row));
  }
  return t;
}

/// Greedy selection k_0 = 0, k_{n+1} = smallest i in {k_n+1, …, k_n+n0} with
/// d[i] ≤ d[k_n]. Stops once a window runs past the end of `d`. A complete
/// window without an admissible index raises ExtractionError: for a fixed y
/// and an α-nonexpansive T one always exists.
inline std::vector<std::size_t> extract_monotone_subsequence(std::span<const double> d, std::size_t n0) {
  if (n0 == 0) throw InvalidArgument("extract_monotone_subsequence: n0 must be >= 1");
  for (double v : d)
    if (!(v >= 0.0)) throw InvalidArgument("extract_monotone_subsequence: distances must be >= 0");
  std::vector<std::size_t> k;
  if (d.empty()) return k;
  k.push_back(0);
  for (;;) {
    const std::size_t cur = k.back();
    const std::size_t lo = cur + 1;
    if (lo >= d.size()) break;
    const std::size_t hi = std::min(cur + n0, d.size() - 1);
    std::optional<std::size_t> pick;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (d[i] <= d[cur]) {
        pick = i;
        break;
      }
    }
    if (pick) {
      k.push_back(*pick);
      continue;
    }
    if (cur + n0 <= d.size() - 1)
      throw ExtractionError("no index in window [" + std::to_string(lo) + ", " + std::to_string(cur + n0) +
                                "] has distance <= " + format_double(d[cur]) +
                                "; the reference is not fixed or T is not alpha-nonexpansive",
                            lo, cur + n0);
    break;  // the admissible index may lie past the end of the data
  }
  return k;
}

/// For each index m of [0, length) not in `k`: (m, j, i) with m = k_j + i.
struct SkippedIndex {
  std::size_t m;
  std::size_t j;
  std::size_t i;
};

inline std::vector<SkippedIndex> fill_skipped(std::span<const std::size_t> k, std::size_t length) {
  std::vector<SkippedIndex> out;
  std::size_t j = 0;
  for (std::size_t m = 0; m < length; ++m) {
    while (j + 1 < k.size() && k[j + 1] <= m) ++j;
    if (k.empty() || k[j] == m) continue;
    out.push_back({m, j, m - k[j]});
  }
  return out;
}

struct DistanceLimit {
  double q = 0.0;
  bool converged = false;
  std::vector<std::size_t> k;
  /// max |d_n - q| over the last quarter of the trace.
  double tail_deviation = 0.0;
  std::size_t tail_begin = 0;
};

/// q is the distance at the last selected index; converged iff every d_n in
/// the final quarter (selected or not) is within tol of q.
inline DistanceLimit distance_limit(const IterationTrace& trace, std::size_t n0,
                                    double tol = kDefaultIterationTol) {
  if (!trace.reference || trace.distances.empty())
    throw InvalidArgument("distance_limit: trace has no reference point");
  DistanceLimit out;
  out.k = extract_monotone_subsequence(trace.distances, n0);
  out.q = trace.distances[out.k.back()];
  const std::size_t len = trace.distances.size();
  out.tail_begin = len - std::max<std::size_t>(1, len / 4);
  for (std::size_t n = out.tail_begin; n < len; ++n)
    out.tail_deviation = std::max(out.tail_deviation, std::abs(trace.distances[n] - out.q));
  out.converged = out.tail_deviation <= tol;
  return out;
}

/// Checks |d_m - q| ≤ Σ_{t=k_j}^{m-1} r_t + |d_{k_j} - q| at every skipped
/// index m = k_j + i (the triangle-inequality chain that fills the gaps of
/// the monotone selection). Returns the smallest slack; negative means broken.
inline double gap_filling_slack(const IterationTrace& trace, std::span<const std::size_t> k, double q) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& s : fill_skipped(k, trace.distances.size())) {
    double path = 0.0;
    for (std::size_t t = k[s.j]; t < s.m; ++t) path += trace.residuals[t];
    const double bound = path + std::abs(trace.distances[k[s.j]] - q);
    worst = std::min(worst, bound - std::abs(trace.distances[s.m] - q));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Weak cluster points

/// Σ_i 2^{-i} min(1, |x_i - y_i|): metrizes coordinate-wise (weak) convergence
/// on bounded sets.
inline double weak_distance(const SeqVector& x, const SeqVector& y) {
  const std::size_t n = std::max(x.size(), y.size());
  double s = 0.0;
  double w = 0.5;
  for (std::size_t i = 1; i <= n; ++i, w *= 0.5) s += w * std::min(1.0, std::abs(x.coord(i) - y.coord(i)));
  return s;
}

struct WeakClusterEstimate {
  std::vector<SeqVector> clusters;
  /// Orbit indices n of the members of each cluster, increasing.
  std::vector<std::vector<std::size_t>> members;
  /// Largest weak distance from a member to its representative.
  std::vector<double> spread;
  double tol = kDefaultIterationTol;
  std::size_t tail_begin = 0;
};

/// Clusters the last quarter of the orbit under weak_distance. The tail is
/// scanned from the newest iterate backwards; each cluster is represented by
/// its newest member and every member lies within tol of it.
inline WeakClusterEstimate estimate_weak_clusters(const IterationTrace& trace, double tol = kDefaultIterationTol) {
  WeakClusterEstimate est;
  est.tol = tol;
  const std::size_t len = trace.iterates.size();
  if (len == 0) return est;
  est.tail_begin = len - std::max<std::size_t>(1, len / 4);
  for (std::size_t n = len; n-- > est.tail_begin;) {
    const SeqVector& v = trace.iterates[n];
    bool placed = false;
    for (std::size_t c = 0; c < est.clusters.size(); ++c) {
      const double dist = weak_distance(v, est.clusters[c]);
      if (dist <= tol) {
        est.members[c].push_back(n);
        est.spread[c] = std::max(est.spread[c], dist);
        placed = true;
        break;
      }
    }
    if (!placed) {
      est.clusters.push_back(v);
      est.members.push_back({n});
      est.spread.push_back(0.0);
    }
  }
  for (auto& m : est.members) std::reverse(m.begin(), m.end());
  return est;
}

/// True iff every cluster point z has ‖Tz - z‖ ≤ tol.
inline bool check_demiclosedness_conclusion(const Operator& op, const WeakClusterEstimate& est,
                                            double tol = kDefaultIterationTol) {
  return std::all_of(est.clusters.begin(), est.clusters.end(),
                     [&](const SeqVector& z) { return residual(op, z) <= tol; });
}

// ---------------------------------------------------------------------------
// Export

inline void to_json(nlohmann::json& j, const IterationTrace& t) {
  j = nlohmann::json{{"operator", t.operator_name},
                     {"start", t.start},
                     {"steps", t.steps()},
                     {"residuals", t.residuals},
                     {"functional_indices", t.functional_indices},
                     {"functional_values", t.functional_values},
                     {"final_iterate", t.iterates.back()}};
  if (t.reference) {
    j["reference"] = *t.reference;
    j["distances"] = t.distances;
  }
}

inline void to_json(nlohmann::json& j, const WeakClusterEstimate& e) {
  j = nlohmann::json{{"clusters", e.clusters}, {"members", e.members}, {"spread", e.spread},
                     {"tol", e.tol}, {"tail_begin", e.tail_begin}};
}

/// Columns n,residual,distance,f_<i>...; the last row has no residual and the
/// distance column is empty without a reference.
inline std::string trace_csv(const IterationTrace& t) {
  std::string out = "n,residual,distance";
  for (std::size_t idx : t.functional_indices) out += ",f" + std::to_string(idx);
  out += "\n";
  for (std::size_t n = 0; n < t.iterates.size(); ++n) {
    out += std::to_string(n) + ",";
    if (n < t.residuals.size()) out += format_double(t.residuals[n]);
    out += ",";
    if (!t.distances.empty()) out += format_double(t.distances[n]);
    for (double v : t.functional_values[n]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

/// Two whitespace-separated columns for gnuplot.
inline std::string two_column(std::span<const double> xs, std::span<const double> ys) {
  std::string out;
  for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i)
    out += format_double(xs[i]) + " " + format_double(ys[i]) + "\n";
  return out;
}

}  // namespace meanfix
