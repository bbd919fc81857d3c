#pragma once

// Sampled falsification of the mean-nonexpansive inequality
//
//     Σ_j α_j ‖T^j x - T^j y‖^p  ≤  ‖x - y‖^p,
//
// plus Lipschitz lower bounds for the iterates and the asymptotic-regularity
// residual profile of an orbit. Nothing here proves an inequality; a run can
// only fail to find a counterexample.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "meanfix/errors.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sampling.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix {

/// Weights α = (α_1, …, α_{n0}) and exponent p of (α, p)-nonexpansiveness.
class MultiIndex {
 public:
  MultiIndex(std::vector<double> weights, double exponent = 1.0)
      : weights_(std::move(weights)), exponent_(exponent) {
    if (weights_.empty()) throw InvalidArgument("multi-index must have at least one weight");
    double sum = 0.0;
    for (double a : weights_) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("multi-index weights must be >= 0");
      sum += a;
    }
    if (!(weights_.front() > 0.0) || !(weights_.back() > 0.0))
      throw InvalidArgument("multi-index needs alpha_1 > 0 and alpha_n0 > 0");
    if (std::abs(sum - 1.0) > 1e-12)
      throw InvalidArgument("multi-index weights sum to " + format_double(sum) + ", not 1");
    if (!(exponent_ >= 1.0) || !std::isfinite(exponent_))
      throw InvalidArgument("multi-index exponent must be >= 1");
  }

  const std::vector<double>& weights() const noexcept { return weights_; }
  double exponent() const noexcept { return exponent_; }
  /// Length n0 of the multi-index.
  std::size_t length() const noexcept { return weights_.size(); }

  MultiIndex with_exponent(double p) const { return MultiIndex(weights_, p); }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += (i ? "," : "") + format_double(weights_[i]);
    return s;
  }

 private:
  std::vector<double> weights_;
  double exponent_;
};

using PointPair = std::pair<SeqVector, SeqVector>;

/// ‖x-y‖^p - Σ_j α_j ‖T^j x - T^j y‖^p. Nonnegative iff the inequality holds at (x, y).
inline double mean_nonexpansive_margin(const Operator& op, const MultiIndex& alpha, const SeqVector& x,
                                       const SeqVector& y) {
  const double p = alpha.exponent();
  auto pw = [p](double t) { return p == 1.0 ? t : std::pow(t, p); };
  double lhs = 0.0;
  SeqVector tx = x, ty = y;
  for (double a : alpha.weights()) {
    tx = op(tx);
    ty = op(ty);
    if (a != 0.0) lhs += a * pw(distance(tx, ty));
  }
  return pw(distance(x, y)) - lhs;
}

struct SamplingOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  /// Worker threads; 0 picks hardware concurrency. Results do not depend on it.
  unsigned threads = 1;
  /// Pairs evaluated ahead of the random ones (indices 0..pool-1).
  std::vector<PointPair> witness_pool;
};

/// Pair number `index` of a sampling run: witness-pool pairs first, then
/// random pairs keyed by (seed, index - pool size).
inline PointPair sample_pair(const Domain& d, const SamplingOptions& opt, std::size_t index) {
  if (index < opt.witness_pool.size()) return opt.witness_pool[index];
  Rng rng = make_stream(opt.seed, index - opt.witness_pool.size());
  SeqVector x = sample_domain(rng, d);
  SeqVector y = sample_domain(rng, d);
  return {std::move(x), std::move(y)};
}

struct LipschitzEstimate {
  std::size_t iterate = 1;
  double lower_bound = 0.0;
  std::optional<std::size_t> witness_index;
  PointPair witness;
};

struct CertificationReport {
  std::string operator_name;
  std::string domain;
  MultiIndex alpha{{1.0}, 1.0};
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t witness_index = 0;
  PointPair witness;
  /// Sampled lower bounds on k(T^j), j = 1..n0.
  std::vector<LipschitzEstimate> lipschitz;
  bool violation = false;
  /// Margin re-evaluated at the stored witness confirms the violation.
  bool violation_reproduced = false;
};

namespace detail {

struct PairScan {
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t min_index = 0;
  std::vector<double> ratio;
  std::vector<std::size_t> ratio_index;
  std::vector<bool> ratio_seen;
};

// Evaluates one pair: margin and ratios ‖T^j x - T^j y‖ / ‖x - y‖ for j = 1..n.
inline void scan_pair(const Operator& op, const MultiIndex* alpha, std::size_t n_iterates,
                      const PointPair& pr, std::size_t index, PairScan& acc) {
  const double gap = distance(pr.first, pr.second);
  const double p = alpha ? alpha->exponent() : 1.0;
  auto pw = [p](double t) { return p == 1.0 ? t : std::pow(t, p); };
  double lhs = 0.0;
  SeqVector tx = pr.first, ty = pr.second;
  for (std::size_t j = 0; j < n_iterates; ++j) {
    tx = op(tx);
    ty = op(ty);
    const double dj = distance(tx, ty);
    if (alpha && alpha->weights()[j] != 0.0) lhs += alpha->weights()[j] * pw(dj);
    if (gap >= 1e-9) {
      const double r = dj / gap;
      if (!acc.ratio_seen[j] || r > acc.ratio[j]) {
        acc.ratio[j] = r;
        acc.ratio_index[j] = index;
        acc.ratio_seen[j] = true;
      }
    }
  }
  if (alpha) {
    const double m = pw(gap) - lhs;
    if (m < acc.min_margin) {
      acc.min_margin = m;
      acc.min_index = index;
    }
  }
}

inline PairScan scan_pairs(const Operator& op, const MultiIndex* alpha, std::size_t n_iterates,
                           const SamplingOptions& opt) {
  require_samplable(op.domain());
  const std::size_t total = opt.witness_pool.size() + opt.samples;
  auto fresh = [n_iterates] {
    PairScan s;
    s.ratio.assign(n_iterates, 0.0);
    s.ratio_index.assign(n_iterates, 0);
    s.ratio_seen.assign(n_iterates, false);
    return s;
  };
  const unsigned workers = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  std::vector<PairScan> partial(workers, fresh());
  const std::size_t chunks = parallel_chunks(
      total, workers,
      [&](std::size_t begin, std::size_t end, std::size_t chunk) {
        PairScan& acc = partial[chunk];
        for (std::size_t i = begin; i < end; ++i)
          scan_pair(op, alpha, n_iterates, sample_pair(op.domain(), opt, i), i, acc);
      });
  // Chunks cover increasing index ranges; strict comparisons keep the
  // smallest index on ties.
  PairScan out = fresh();
  for (std::size_t c = 0; c < chunks; ++c) {
    const PairScan& s = partial[c];
    if (s.min_margin < out.min_margin) {
      out.min_margin = s.min_margin;
      out.min_index = s.min_index;
    }
    for (std::size_t j = 0; j < n_iterates; ++j) {
      if (s.ratio_seen[j] && (!out.ratio_seen[j] || s.ratio[j] > out.ratio[j])) {
        out.ratio[j] = s.ratio[j];
        out.ratio_index[j] = s.ratio_index[j];
        out.ratio_seen[j] = true;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Draws pairs from C and reports the smallest margin of the (α, p)
/// inequality. The violation flag is set when min margin < -tol.
inline CertificationReport certify_mean_nonexpansive(const Operator& op, const MultiIndex& alpha,
                                                     const SamplingOptions& opt, double tol = 1e-10) {
  if (opt.samples + opt.witness_pool.size() == 0) throw InvalidArgument("certify: need at least one sample");
  const detail::PairScan scan = detail::scan_pairs(op, &alpha, alpha.length(), opt);

  CertificationReport rep;
  rep.operator_name = op.name();
  rep.domain = op.domain().describe();
  rep.alpha = alpha;
  rep.samples = opt.samples + opt.witness_pool.size();
  rep.seed = opt.seed;
  rep.tolerance = tol;
  rep.min_margin = scan.min_margin;
  rep.witness_index = scan.min_index;
  rep.witness = sample_pair(op.domain(), opt, scan.min_index);
  for (std::size_t j = 0; j < alpha.length(); ++j) {
    LipschitzEstimate est;
    est.iterate = j + 1;
    if (scan.ratio_seen[j]) {
      est.lower_bound = scan.ratio[j];
      est.witness_index = scan.ratio_index[j];
      est.witness = sample_pair(op.domain(), opt, scan.ratio_index[j]);
    }
    rep.lipschitz.push_back(std::move(est));
  }
  rep.violation = rep.min_margin < -tol;
  if (rep.violation)
    rep.violation_reproduced =
        mean_nonexpansive_margin(op, alpha, rep.witness.first, rep.witness.second) < -tol;
  return rep;
}

/// Sampled lower bound on the Lipschitz constant of T^j. Pairs closer than
/// 1e-9 are skipped.
inline LipschitzEstimate estimate_lipschitz(const Operator& op, std::size_t j, const SamplingOptions& opt) {
  if (j == 0) throw InvalidArgument("estimate_lipschitz: iterate must be >= 1");
  // Only the j-th ratio matters, but scanning computes 1..j on the way.
  const detail::PairScan scan = detail::scan_pairs(op, nullptr, j, opt);
  LipschitzEstimate est;
  est.iterate = j;
  if (scan.ratio_seen[j - 1]) {
    est.lower_bound = scan.ratio[j - 1];
    est.witness_index = scan.ratio_index[j - 1];
    est.witness = sample_pair(op.domain(), opt, scan.ratio_index[j - 1]);
  }
  return est;
}

/// r_n = ‖T^n x - T^{n+1} x‖ for n = 0..N-1.
inline std::vector<double> asymptotic_regularity_profile(const Operator& op, const SeqVector& x,
                                                         std::size_t n_steps) {
  if (n_steps == 0) throw InvalidArgument("asymptotic_regularity_profile: N must be >= 1");
  std::vector<double> r;
  r.reserve(n_steps);
  SeqVector cur = x;
  for (std::size_t n = 0; n < n_steps; ++n) {
    SeqVector next = op(cur);
    r.push_back(distance(cur, next));
    cur = std::move(next);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const LipschitzEstimate& e) {
  j = nlohmann::json{{"iterate", e.iterate}, {"lower_bound", e.lower_bound}};
  if (e.witness_index) {
    j["witness_index"] = *e.witness_index;
    j["witness"] = {{"x", e.witness.first}, {"y", e.witness.second}};
  }
}

inline void to_json(nlohmann::json& j, const CertificationReport& r) {
  j = nlohmann::json{{"operator", r.operator_name},
                     {"domain", r.domain},
                     {"alpha", r.alpha.weights()},
                     {"p", r.alpha.exponent()},
                     {"samples", r.samples},
                     {"seed", r.seed},
                     {"tolerance", r.tolerance},
                     {"min_margin", r.min_margin},
                     {"witness_index", r.witness_index},
                     {"witness", {{"x", r.witness.first}, {"y", r.witness.second}}},
                     {"lipschitz", r.lipschitz},
                     {"violation", r.violation},
                     {"violation_reproduced", r.violation_reproduced}};
}

inline std::string certification_csv_header() {
  return "operator,alpha,p,samples,seed,min_margin,violation,lipschitz_lower_bounds\n";
}

/// One summary row per (operator, α, p). Fields containing commas are quoted.
inline std::string certification_csv_row(const CertificationReport& r) {
  std::string lips;
  for (std::size_t i = 0; i < r.lipschitz.size(); ++i)
    lips += (i ? ";" : "") + format_double(r.lipschitz[i].lower_bound);
  return r.operator_name + ",\"" + r.alpha.to_string() + "\"," + format_double(r.alpha.exponent()) + "," +
         std::to_string(r.samples) + "," + std::to_string(r.seed) + "," + format_double(r.min_margin) + "," +
         (r.violation ? "true" : "false") + "," + lips + "\n";
}

}  // namespace meanfix
