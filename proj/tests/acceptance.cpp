// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "meanfix/certification.hpp"
#include "meanfix/cli.hpp"
#include "meanfix/geometry.hpp"
#include "meanfix/iteration.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sampling.hpp"
#include "oracles.hpp"

using namespace meanfix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failed check; later checks still run so the detail line
// shows the earliest problem.
struct Checker {
  Outcome out;
  void require(bool cond, const std::string& what) {
    if (!cond && out.ok) {
      out.ok = false;
      out.detail = what;
    }
  }
};

std::string fmt(double v) { return format_double(v); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int quiet_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run_cli(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

const double kSqrt2 = std::sqrt(2.0);
const double kTwoOverSqrt3 = 2.0 / std::sqrt(3.0);

Outcome c1_example_certification() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  std::string text;
  const int code = quiet_cli({"certify", "--op", "example", "--dim", "64", "--alpha", "0.5,0.5", "--p", "2",
                              "--samples", "100000", "--seed", "20240601"},
                             &text);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(code == 0, "exit code " + std::to_string(code) + ": " + text);

  SamplingOptions opt;
  opt.samples = 100000;
  opt.seed = 20240601;
  const auto rep = certify_mean_nonexpansive(make_example_operator(64), MultiIndex({0.5, 0.5}, 2.0), opt);
  c.require(rep.min_margin >= -1e-10, "min margin " + fmt(rep.min_margin));
  c.require(secs <= 10.0, "runtime " + fmt(secs) + " s");
  if (c.out.ok) c.out.detail = "min_margin=" + fmt(rep.min_margin) + " runtime=" + fmt(secs) + "s";
  return c.out;
}

Outcome c2_lipschitz_witnesses() {
  Checker c;
  const Operator T = make_example_operator();
  const std::vector<std::pair<std::size_t, double>> cases{{1, kSqrt2}, {2, kTwoOverSqrt3}};
  const std::vector<PointPair> witnesses{{basis(2), 0.5 * basis(2)}, {basis(3), 0.5 * basis(3)}};
  std::string detail;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto [j, k] = cases[i];
    SamplingOptions pooled;
    pooled.samples = 0;
    pooled.witness_pool = {witnesses[i]};
    const double w = estimate_lipschitz(T, j, pooled).lower_bound;
    c.require(std::abs(w - k) <= 1e-12, "witness ratio for T^" + std::to_string(j) + " = " + fmt(w));

    SamplingOptions sampled;
    sampled.samples = 100000;
    sampled.seed = 7 + j;
    const double s = estimate_lipschitz(T, j, sampled).lower_bound;
    c.require(s <= k + 1e-9, "sampled ratio for T^" + std::to_string(j) + " = " + fmt(s));
    detail += "k(T^" + std::to_string(j) + "): witness=" + fmt(w) + " sampled_max=" + fmt(s) + " ";
  }
  if (c.out.ok) c.out.detail = detail;
  return c.out;
}

Outcome c3_tau_properties() {
  Checker c;
  constexpr int kPoints = 1000000;
  double max_slope = 0.0;
  double prev_t = -1.0, prev_v = tau(-1.0);
  for (int i = 0; i < kPoints; ++i) {
    const double t = -1.0 + 2.0 * i / (kPoints - 1);
    const double v = tau(t);
    if (!(std::abs(v) <= std::abs(t))) c.require(false, "|tau(t)| > |t| at t=" + fmt(t));
    if (i > 0) max_slope = std::max(max_slope, std::abs(v - prev_v) / (t - prev_t));
    prev_t = t;
    prev_v = v;
  }
  c.require(max_slope <= kSqrt2 + 1e-9, "max slope " + fmt(max_slope));
  c.require(tau(1.0) == 1.0 && tau(-1.0) == -1.0 && tau(0.0) == 0.0, "endpoint values");
  if (c.out.ok) c.out.detail = "max_slope=" + fmt(max_slope);
  return c.out;
}

Outcome c4_orbit_collapse() {
  Checker c;
  const Operator T = make_example_operator(64);
  std::size_t checked = 0;
  for (std::size_t d = 1; d <= 64; ++d) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng = make_stream(4000 + d, s);
      const SeqVector x = sample_ball(rng, d, 2.0, 1.0);
      const std::size_t steps = d + 8;
      const IterationTrace t = run_iteration(T, x, steps);
      const auto brute = oracle::example_orbit(x.coeffs(), steps);
      for (std::size_t n = 0; n <= steps; ++n) {
        const SeqVector& got = t.iterates[n];
        const auto& want = brute[n];
        const std::size_t len = std::max(got.size(), want.size());
        for (std::size_t i = 1; i <= len; ++i)
          if (std::abs(got.coord(i) - oracle::at(want, i)) > 1e-14)
            c.require(false, "orbit mismatch d=" + std::to_string(d) + " n=" + std::to_string(n));
        if (n >= d + 2) {
          c.require(got.is_zero() && oracle::all_zero(want), "not collapsed by d+2, d=" + std::to_string(d));
          if (n < steps) c.require(t.residuals[n] == 0.0, "nonzero residual after collapse");
        }
      }
      ++checked;
    }
    // e_d is the slowest start of support d.
    c.require(iterate_k(T, basis(d), d + 2).is_zero(), "e_" + std::to_string(d) + " survives d+2 steps");
  }
  if (c.out.ok) c.out.detail = std::to_string(checked) + " random orbits, supports 1..64";
  return c.out;
}

std::vector<IterationTrace> stored_traces() {
  std::vector<IterationTrace> traces;
  const Operator T = make_example_operator();
  for (std::uint64_t s = 0; s < 40; ++s) {
    Rng rng = make_stream(505, s);
    traces.push_back(run_iteration(T, sample_ball(rng, 1 + s % 64, 2.0, 1.0), 200, SeqVector::zero()));
  }
  traces.push_back(run_iteration(T, basis(3), 200, SeqVector::zero()));
  const Operator H = make_planar_halving_operator();
  for (double c : {-1.0, 0.0, 1.0, 2.5})
    traces.push_back(run_iteration(H, SeqVector({1.0, 1.0}), 200, SeqVector({c, 0.0})));
  const Operator I = make_identity_operator();
  traces.push_back(run_iteration(I, SeqVector({0.3, -0.2}), 50, SeqVector({0.1})));
  return traces;
}

Outcome c5_monotone_extraction() {
  Checker c;
  constexpr std::size_t n0 = 2;
  std::size_t n_traces = 0;
  for (const auto& t : stored_traces()) {
    const auto k = extract_monotone_subsequence(t.distances, n0);
    for (std::size_t j = 0; j + 1 < k.size(); ++j) {
      c.require(k[j + 1] - k[j] >= 1 && k[j + 1] - k[j] <= n0, "gap outside [1, n0]");
      c.require(t.distances[k[j + 1]] <= t.distances[k[j]], "extracted distances increase");
    }
    const auto skipped = fill_skipped(k, t.distances.size());
    for (const auto& s : skipped)
      c.require(s.m == k[s.j] + s.i && s.i >= 1 && s.i <= n0 - 1, "bad filling at m=" + std::to_string(s.m));
    c.require(skipped.size() + k.size() == t.distances.size(), "filling does not cover the trace");
    ++n_traces;
  }
  const std::vector<double> hand{1.0, 1.2, 0.9, 1.1, 0.8};
  c.require(extract_monotone_subsequence(hand, 2) == std::vector<std::size_t>{0, 2, 4}, "hand-traced case");
  if (c.out.ok) c.out.detail = std::to_string(n_traces) + " traces; hand case -> (0, 2, 4)";
  return c.out;
}

Outcome c6_distance_limit() {
  Checker c;
  double worst = 0.0;
  auto check = [&](const IterationTrace& t, const std::string& label) {
    const auto lim = distance_limit(t, 2, 1e-8);
    c.require(lim.converged && lim.tail_deviation <= 1e-8, label + ": tail deviation " + fmt(lim.tail_deviation));
    worst = std::max(worst, lim.tail_deviation);
  };
  const Operator T = make_example_operator();
  check(run_iteration(T, basis(3), 200, SeqVector::zero()), "example e3");
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng = make_stream(606, s);
    check(run_iteration(T, sample_ball(rng, 64, 2.0, 1.0), 200, SeqVector::zero()), "example random");
  }
  const Operator H = make_planar_halving_operator();
  check(run_iteration(H, SeqVector({1.0, 1.0}), 200, SeqVector({1.0, 0.0})), "planar ref (1,0)");
  check(run_iteration(H, SeqVector({1.0, 1.0}), 200, SeqVector({0.0, 0.0})), "planar ref (0,0)");
  check(run_iteration(H, SeqVector({-3.0, 4.0}), 200, SeqVector({2.0, 0.0})), "planar ref (2,0)");
  if (c.out.ok) c.out.detail = "max tail deviation " + fmt(worst);
  return c.out;
}

Outcome c7_opial_margins() {
  Checker c;
  std::string detail;
  for (double p : {1.5, 2.0, 3.0}) {
    const OpialMargin m = opial_margin(basis_sequence(p), SeqVector::zero(p), basis(1, p), 64);
    const double closed = std::pow(1.0 + std::pow(norm(basis(1, p)), p), 1.0 / p) - 1.0;
    c.require(std::abs(m.margin - closed) <= 1e-10, "p=" + fmt(p) + " margin " + fmt(m.margin));
    detail += "p=" + fmt(p) + ":" + fmt(m.margin) + " ";
  }
  c.require(std::abs(opial_margin(basis_sequence(2.0), SeqVector::zero(), basis(1), 64).margin - (kSqrt2 - 1.0)) <= 1e-10,
            "p=2 closed form");
  c.require(std::abs(opial_margin(basis_sequence(3.0), SeqVector::zero(3.0), basis(1, 3.0), 64).margin -
                     (std::cbrt(2.0) - 1.0)) <= 1e-10,
            "p=3 closed form");
  if (c.out.ok) c.out.detail = detail;
  return c.out;
}

Outcome c8_duality() {
  Checker c;
  double worst = 0.0;
  for (double p : {1.5, 3.0}) {
    const GaugeFunction mu = GaugeFunction::power(p);
    for (std::uint64_t s = 0; s < 10000; ++s) {
      Rng rng = make_stream(808, s);
      const std::size_t dim = 1 + s % 16;
      const SeqVector x = sample_ball(rng, dim, p, 3.0);
      const double err = duality_identity(x, mu).max_error();
      worst = std::max(worst, err);
      c.require(err <= 1e-10, "p=" + fmt(p) + " identity error " + fmt(err));
    }
  }
  const GaugeFunction mu2 = GaugeFunction::power(2.0);
  for (std::uint64_t s = 0; s < 10000; ++s) {
    Rng rng = make_stream(809, s);
    const SeqVector x = sample_ball(rng, 1 + s % 16, 2.0, 3.0);
    c.require(duality_map(x, mu2) == x, "p=2: Jx != x");
  }
  if (c.out.ok) c.out.detail = "max identity error " + fmt(worst) + "; p=2 exact";
  return c.out;
}

Outcome c9_modulus() {
  Checker c;
  const std::vector<double> grid{0.25, 0.5, 1.0, 1.5, 2.0};
  const auto curve = modulus_of_convexity_curve(2.0, grid, 200000, 1);
  const double analytic = hilbert_modulus(1.0);
  const double d1 = curve[2].delta;
  c.require(d1 >= analytic - 1e-12, "delta(1) below analytic: " + fmt(d1));
  c.require(d1 >= 0.133975 && d1 <= 0.133975 + 5e-3, "delta(1) outside window: " + fmt(d1));
  for (std::size_t i = 1; i < curve.size(); ++i)
    c.require(curve[i].delta >= curve[i - 1].delta, "not monotone at eps=" + fmt(grid[i]));
  if (c.out.ok) {
    c.out.detail = "delta:";
    for (const auto& e : curve) c.out.detail += " " + fmt(e.eps) + "->" + fmt(e.delta);
  }
  return c.out;
}

Outcome c10_asymptotic_center() {
  Checker c;
  const Operator H = make_planar_halving_operator();
  const IterationTrace t = run_iteration(H, SeqVector({1.0, 1.0}), 200);
  constexpr double kStep = 0.01;
  const auto res = asymptotic_center(H, t, line_grid(basis(1), -2.0, 2.0, kStep), "line");
  const double off = distance(res.y0, SeqVector({1.0, 0.0}));
  c.require(off <= kStep / 2, "y0 = " + to_string(res.y0));
  c.require(res.r0 <= 1e-8, "r0 = " + fmt(res.r0));
  const auto est = estimate_weak_clusters(t);
  c.require(est.clusters.size() == 1, std::to_string(est.clusters.size()) + " clusters");
  double gap = -1.0;
  if (est.clusters.size() == 1) {
    gap = distance(res.y0, est.clusters[0]);
    c.require(gap <= 1e-6, "y0 to cluster " + fmt(gap));
  }
  const double diam = res.level_set_diameter(1e-6);
  c.require(diam <= 2 * kStep + 1e-12, "level set diameter " + fmt(diam));
  if (c.out.ok)
    c.out.detail = "y0=" + to_string(res.y0) + " r0=" + fmt(res.r0) + " |y0-cluster|=" + fmt(gap) +
                   " diam=" + fmt(diam);
  return c.out;
}

Outcome c11_determinism() {
  Checker c;
  const fs::path dir = fs::temp_directory_path() / "meanfix_acceptance_c11";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::vector<std::string>> commands{
      {"certify", "--op", "example", "--samples", "20000", "--seed", "3", "--threads", "2"},
      {"certify", "--op", "scale:2", "--alpha", "1", "--p", "1", "--samples", "500"},
      {"iterate", "--op", "example", "--start", "e3;e9;0.1,0.2,0.3", "--ref", "zero", "--functionals", "1,2"},
      {"iterate", "--op", "planar-halving", "--start", "1,1", "--ref", "1,0"},
      {"probe", "opial", "--p", "1.5"},
      {"probe", "duality", "--p", "3", "--x", "1,-2"},
      {"probe", "modulus", "--samples", "20000", "--seed", "9"},
      {"probe", "center", "--op", "planar-halving", "--threads", "2"},
  };
  std::size_t i = 0;
  for (auto cmd : commands) {
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / ("c" + std::to_string(i) + "_" + std::to_string(rep) + ".json");
      auto args = cmd;
      args.insert(args.end(), {"--json", out.string()});
      const int code = quiet_cli(args);
      c.require(code == 0 || code == 2, cmd.front() + " exited " + std::to_string(code));
      bytes[rep] = slurp(out);
    }
    c.require(!bytes[0].empty() && bytes[0] == bytes[1], "JSON differs for command #" + std::to_string(i));
    ++i;
  }
  // Thread count must not leak into the payload either.
  std::string one, four;
  for (auto [threads, dst] : {std::pair{"1", &one}, std::pair{"4", &four}}) {
    const fs::path out = dir / (std::string("threads_") + threads + ".json");
    quiet_cli({"certify", "--op", "example", "--samples", "20000", "--threads", threads, "--json", out.string()});
    *dst = slurp(out);
  }
  c.require(!one.empty() && one == four, "certify JSON depends on --threads");
  fs::remove_all(dir);
  if (c.out.ok) c.out.detail = std::to_string(commands.size()) + " commands rerun byte-identically";
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"C1  example certification", c1_example_certification},
      {"C2  Lipschitz witnesses", c2_lipschitz_witnesses},
      {"C3  tau properties", c3_tau_properties},
      {"C4  orbit collapse", c4_orbit_collapse},
      {"C5  monotone extraction", c5_monotone_extraction},
      {"C6  distance limit", c6_distance_limit},
      {"C7  Opial margins", c7_opial_margins},
      {"C8  duality map", c8_duality},
      {"C9  modulus of convexity", c9_modulus},
      {"C10 asymptotic center", c10_asymptotic_center},
      {"C11 determinism", c11_determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.ok) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
