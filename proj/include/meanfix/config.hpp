#pragma once

// Experiment settings shared by every subcommand. The same struct backs the
// command-line flags and the flat key=value config file (--config); flags
// given on the command line override values read from the file.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "meanfix/errors.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix {

struct ExperimentConfig {
  std::string op = "example";
  std::vector<double> alpha{0.5, 0.5};
  /// Exponent of the (α,p) inequality for certify; ambient ℓ^p for probes.
  std::optional<double> p;
  std::vector<std::string> starts;
  std::optional<std::size_t> n;
  std::size_t dim = kDefaultTruncation;
  std::uint64_t seed = 1;
  std::optional<std::size_t> samples;
  unsigned threads = 1;
  std::optional<double> tol;
  std::optional<std::string> ref;
  std::vector<std::size_t> functionals;
  std::optional<std::size_t> n0;
  std::string u = "zero";
  std::string v = "e1";
  std::string x = "1,-2";
  std::vector<double> eps;
  std::string grid = "-2:2:0.01";
  std::string direction = "e1";
  std::string json_path;
  std::string csv_path;
  std::string plot_path;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  /// Flat key=value text that reads back into an equal config.
  std::string to_ini() const {
    std::string s;
    auto put = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    auto quoted = [](const std::string& v) { return "\"" + v + "\""; };
    auto list = [](const auto& xs, auto fmt) {
      std::string out;
      for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt(xs[i]);
      return out;
    };
    auto num = [](double d) { return format_double(d); };
    auto uint = [](std::size_t k) { return std::to_string(k); };
    put("op", quoted(op));
    if (!alpha.empty()) put("alpha", list(alpha, num));
    if (p) put("p", num(*p));
    if (!starts.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < starts.size(); ++i) joined += (i ? ";" : "") + starts[i];
      put("start", quoted(joined));
    }
    if (n) put("n", uint(*n));
    put("dim", uint(dim));
    put("seed", std::to_string(seed));
    if (samples) put("samples", uint(*samples));
    put("threads", std::to_string(threads));
    if (tol) put("tol", num(*tol));
    if (ref) put("ref", quoted(*ref));
    if (!functionals.empty()) put("functionals", list(functionals, uint));
    if (n0) put("n0", uint(*n0));
    put("u", quoted(u));
    put("v", quoted(v));
    put("x", quoted(x));
    if (!eps.empty()) put("eps", list(eps, num));
    put("grid", quoted(grid));
    put("direction", quoted(direction));
    if (!json_path.empty()) put("json", quoted(json_path));
    if (!csv_path.empty()) put("csv", quoted(csv_path));
    if (!plot_path.empty()) put("plot-data", quoted(plot_path));
    return s;
  }
};

/// Registers every ExperimentConfig field as a configurable option of `app`.
inline void bind_options(CLI::App& app, ExperimentConfig& c) {
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "Read settings from a key=value file; flags override it");
  app.add_option("--op", c.op, "Operator name (see `corpus`), parameters after ':'");
  app.add_option("--alpha", c.alpha, "Multi-index weights, comma separated")->delimiter(',');
  app.add_option("--p", c.p, "Inequality exponent (certify) or ambient l^p exponent (probe)");
  app.add_option("--start", c.starts, "Start vector(s): e<k>, zero, or a comma list")->delimiter(';');
  app.add_option("--n", c.n, "Iteration count / sequence length");
  app.add_option("--dim", c.dim, "Truncation dimension for l^2 operators");
  app.add_option("--seed", c.seed, "Sampling seed");
  app.add_option("--samples", c.samples, "Number of sampled pairs");
  app.add_option("--threads", c.threads, "Worker threads (0 = all cores); results do not depend on it");
  app.add_option("--tol", c.tol, "Tolerance override");
  app.add_option("--ref", c.ref, "Reference fixed point for distances: e<k>, zero, or a comma list");
  app.add_option("--functionals", c.functionals, "Coordinate functionals to record (1-based)")->delimiter(',');
  app.add_option("--n0", c.n0, "Window length of the monotone selection (default: length of alpha)");
  app.add_option("--u", c.u, "Weak limit of the probe sequence");
  app.add_option("--v", c.v, "Competitor point for the Opial margin");
  app.add_option("--x", c.x, "Point at which to evaluate the duality map");
  app.add_option("--eps", c.eps, "Distances for the modulus of convexity")->delimiter(',');
  app.add_option("--grid", c.grid, "lo:hi:step of the candidate line c*direction");
  app.add_option("--direction", c.direction, "Direction of the candidate line");
  app.add_option("--json", c.json_path, "Write the JSON report here");
  app.add_option("--csv", c.csv_path, "Write the CSV table here");
  app.add_option("--plot-data", c.plot_path, "Write two-column gnuplot data here");
}

/// Parses "zero", "e<k>", or a comma-separated coefficient list.
inline SeqVector parse_vector_spec(const std::string& spec, double p) {
  if (spec.empty()) throw InvalidArgument("empty vector specification");
  if (spec == "zero" || spec == "0") return SeqVector::zero(p);
  if (spec.size() >= 2 && spec[0] == 'e' && spec.find_first_not_of("0123456789", 1) == std::string::npos)
    return basis(std::stoul(spec.substr(1)), p);
  std::vector<double> c;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = spec.find(',', pos);
    c.push_back(parse_double(std::string_view(spec).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return SeqVector(std::move(c), p);
}

struct GridSpec {
  double lo, hi, step;
};

inline GridSpec parse_grid(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) throw InvalidArgument("grid must look like lo:hi:step");
  return {parse_double(std::string_view(spec).substr(0, a)), parse_double(std::string_view(spec).substr(a + 1, b - a - 1)),
          parse_double(std::string_view(spec).substr(b + 1))};
}

}  // namespace meanfix
