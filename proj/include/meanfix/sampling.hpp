#pragma once

// Deterministic sampling. Every draw is keyed by (seed, stream index), so the
// value of sample i does not depend on which thread produced it or in what
// order the indices were visited.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "meanfix/errors.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix {

using Rng = std::mt19937_64;

/// Generator for stream `index` under `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6d6e78u};
  return Rng(seq);
}

/// Point on the unit sphere of ℓ^p in `dim` coordinates (normalized Gaussian).
inline SeqVector sample_sphere(Rng& rng, std::size_t dim, double p) {
  std::normal_distribution<double> gauss;
  std::vector<double> c(dim);
  for (;;) {
    for (double& v : c) v = gauss(rng);
    SeqVector g(c, p);
    const double r = norm(g);
    if (r > 1e-300) return (1.0 / r) * g;
  }
}

/// Point in the ball of ℓ^p: sphere direction scaled by radius·U^{1/dim}.
/// Uniform for p = 2; for other p only the radial law is uniform.
inline SeqVector sample_ball(Rng& rng, std::size_t dim, double p, double radius) {
  SeqVector dir = sample_sphere(rng, dim, p);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  return r * dir;
}

inline void require_samplable(const Domain& d) {
  if (d.dim == 0) throw InvalidArgument("domain has zero truncation dimension");
  if (d.kind == Domain::Kind::WholeSpace && !d.sampling_radius)
    throw InvalidArgument("domain '" + d.describe() + "' is unbounded and has no sampling radius");
}

inline SeqVector sample_domain(Rng& rng, const Domain& d) {
  require_samplable(d);
  return sample_ball(rng, d.dim, d.ambient_p, d.kind == Domain::Kind::Ball ? d.radius : *d.sampling_radius);
}

/// Splits [0, count) into contiguous chunks and runs `body(begin, end, chunk)`
/// on up to `threads` workers (0 = hardware concurrency). Returns the number of
/// chunks; callers combine per-chunk partial results in chunk order. The first
/// exception thrown by a worker is rethrown after all workers join.
template <class Body>
std::size_t parallel_chunks(std::size_t count, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
  const std::size_t per = (count + chunks - 1) / chunks;
  if (chunks == 1) {
    body(std::size_t{0}, count, std::size_t{0});
    return 1;
  }
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = std::min(count, c * per);
      const std::size_t end = std::min(count, begin + per);
      workers.emplace_back([&body, &errors, begin, end, c] {
        try {
          body(begin, end, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return chunks;
}

struct SelfMapCheck {
  std::size_t samples = 0;
  /// Largest ‖Tx‖ - radius seen (≤ 0 means every image stayed inside C).
  double worst_excess = -std::numeric_limits<double>::infinity();
  SeqVector worst_point;
  bool holds(double tol = 1e-12) const { return worst_excess <= tol; }
};

/// Samples C and records how far T pushes points outside it. Only meaningful
/// for ball domains; the whole space is trivially invariant.
inline SelfMapCheck check_self_map(const Operator& op, std::size_t samples, std::uint64_t seed) {
  const Domain& d = op.domain();
  SelfMapCheck out;
  out.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = make_stream(seed, i);
    SeqVector x = sample_domain(rng, d);
    const double excess = d.kind == Domain::Kind::Ball ? norm(op(x)) - d.radius : 0.0;
    if (excess > out.worst_excess) {
      out.worst_excess = excess;
      out.worst_point = x;
    }
  }
  return out;
}

}  // namespace meanfix
