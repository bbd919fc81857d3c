#pragma once

// The `meanfix` command line: certify, iterate, probe {opial|duality|modulus|center}, corpus.
//
// Exit status: 0 success, 1 usage or configuration error, 2 a mathematical
// violation was detected (failed certification, failed monotone selection).

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"

#include "meanfix/certification.hpp"
#include "meanfix/config.hpp"
#include "meanfix/errors.hpp"
#include "meanfix/geometry.hpp"
#include "meanfix/iteration.hpp"
#include "meanfix/operators.hpp"
#include "meanfix/sequence_space.hpp"

namespace meanfix::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kViolation = 2 };

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace detail {

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void emit(const ExperimentConfig& c, const nlohmann::json& report, const std::string& csv,
                 const std::string& plot) {
  if (!c.json_path.empty()) write_atomically(c.json_path, dump(report));
  if (!c.csv_path.empty() && !csv.empty()) write_atomically(c.csv_path, csv);
  if (!c.plot_path.empty() && !plot.empty()) write_atomically(c.plot_path, plot);
}

inline int cmd_corpus(std::ostream& out) {
  for (const char* name : {"example", "identity", "scale:0.5", "planar-halving", "shift"}) {
    const Operator op = make_operator(name);
    out << op.name() << "\t" << op.domain().describe() << "\t" << op.summary() << "\n";
  }
  return kOk;
}

inline int cmd_certify(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const Operator op = make_operator(c.op, c.dim);
  const MultiIndex alpha(c.alpha, c.p.value_or(1.0));
  SamplingOptions opt;
  opt.samples = c.samples.value_or(10000);
  opt.seed = c.seed;
  opt.threads = c.threads;
  const CertificationReport rep = certify_mean_nonexpansive(op, alpha, opt, c.tol.value_or(1e-10));
  emit(c, nlohmann::json(rep), certification_csv_header() + certification_csv_row(rep), {});
  out << "certify " << rep.operator_name << " alpha=" << alpha.to_string()
      << " p=" << format_double(alpha.exponent()) << " samples=" << rep.samples
      << " min_margin=" << format_double(rep.min_margin) << " violation=" << (rep.violation ? "true" : "false")
      << "\n";
  for (const auto& l : rep.lipschitz)
    out << "  k(T^" << l.iterate << ") >= " << format_double(l.lower_bound) << "\n";
  if (rep.violation) {
    err << "violation at pair #" << rep.witness_index << ": x = " << to_string(rep.witness.first)
        << ", y = " << to_string(rep.witness.second) << " (margin " << format_double(rep.min_margin)
        << (rep.violation_reproduced ? ", reproduced" : ", NOT reproduced") << ")\n";
    return kViolation;
  }
  return kOk;
}

inline int cmd_iterate(const ExperimentConfig& c, std::ostream& out) {
  const Operator op = make_operator(c.op, c.dim);
  const double ap = op.domain().ambient_p;
  const std::size_t steps = c.n.value_or(kDefaultIterations);
  const double tol = c.tol.value_or(kDefaultIterationTol);
  const std::size_t n0 = c.n0.value_or(c.alpha.size() >= 2 ? c.alpha.size() : 2);
  std::optional<SeqVector> ref;
  if (c.ref) ref = parse_vector_spec(*c.ref, ap);
  std::vector<CoordinateFunctional> fns;
  for (std::size_t i : c.functionals) fns.emplace_back(i);

  const std::vector<std::string> starts = c.starts.empty() ? std::vector<std::string>{"e3"} : c.starts;
  nlohmann::json runs = nlohmann::json::array();
  std::string csv, plot;
  for (const auto& s : starts) {
    const SeqVector x = parse_vector_spec(s, ap);
    const IterationTrace trace = run_iteration(op, x, steps, ref, fns);
    const WeakClusterEstimate clusters = estimate_weak_clusters(trace, tol);
    const bool demiclosed = check_demiclosedness_conclusion(op, clusters, tol);
    nlohmann::json run{{"trace", trace}, {"clusters", clusters}, {"demiclosed", demiclosed}};
    out << "iterate " << op.name() << " start=" << s << " n=" << steps;
    if (ref) {
      const DistanceLimit lim = distance_limit(trace, n0, tol);
      run["distance_limit"] = {{"q", lim.q},
                               {"converged", lim.converged},
                               {"tail_deviation", lim.tail_deviation},
                               {"k", lim.k},
                               {"n0", n0}};
      out << " q=" << format_double(lim.q) << " converged=" << (lim.converged ? "true" : "false");
    }
    out << " residual_N=" << format_double(trace.residuals.empty() ? 0.0 : trace.residuals.back())
        << " clusters=" << clusters.clusters.size() << " demiclosed=" << (demiclosed ? "true" : "false") << "\n";
    for (const auto& z : clusters.clusters) out << "  cluster " << to_string(z) << "\n";
    runs.push_back(std::move(run));
    if (csv.empty()) csv = trace_csv(trace);
    if (plot.empty()) {
      std::vector<double> idx(trace.residuals.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
      plot = two_column(idx, trace.residuals);
    }
  }
  emit(c, nlohmann::json{{"operator", op.name()}, {"runs", runs}}, csv, plot);
  return kOk;
}

inline int cmd_opial(const ExperimentConfig& c, std::ostream& out) {
  const double p = c.p.value_or(2.0);
  const SeqVector u = parse_vector_spec(c.u, p);
  const SeqVector v = parse_vector_spec(c.v, p);
  const OpialMargin m = opial_margin(basis_sequence(p), u, v, c.n.value_or(64));
  emit(c, nlohmann::json{{"probe", "opial"}, {"p", p}, {"u", u}, {"v", v}, {"result", m}}, {}, {});
  out << "opial p=" << format_double(p) << " liminf|u_n-u|=" << format_double(m.liminf_to_limit)
      << " liminf|u_n-v|=" << format_double(m.liminf_to_other) << " margin=" << format_double(m.margin) << "\n";
  return kOk;
}

inline int cmd_duality(const ExperimentConfig& c, std::ostream& out) {
  const double p = c.p.value_or(2.0);
  if (!(p > 1.0)) throw InvalidArgument("duality map needs p > 1 (l^1 has no single-valued duality map)");
  const GaugeFunction mu = GaugeFunction::power(p);
  const SeqVector x = parse_vector_spec(c.x, p);
  const SeqVector jx = duality_map(x, mu);
  const DualityIdentity id = duality_identity(x, mu);
  const WeakContinuityProbe weak = weak_continuity_probe(mu, p, c.n.value_or(64));
  emit(c,
       nlohmann::json{{"probe", "duality"},
                      {"p", p},
                      {"gauge", mu.name()},
                      {"x", x},
                      {"Jx", jx},
                      {"pairing", id.pairing},
                      {"norm_product", id.norm_product},
                      {"gauge_product", id.gauge_product},
                      {"weak_continuity", weak}},
       {}, {});
  out << "duality p=" << format_double(p) << " Jx=" << to_string(jx) << " (Jx)(x)=" << format_double(id.pairing)
      << " |Jx||x|=" << format_double(id.norm_product) << " mu(|x|)|x|=" << format_double(id.gauge_product)
      << " weakly_continuous_on_panel=" << (weak.passed ? "true" : "false") << "\n";
  return kOk;
}

inline int cmd_modulus(const ExperimentConfig& c, std::ostream& out) {
  const double p = c.p.value_or(2.0);
  const std::vector<double> eps = c.eps.empty() ? std::vector<double>{0.25, 0.5, 1.0, 1.5, 2.0} : c.eps;
  const auto curve = modulus_of_convexity_curve(p, eps, c.samples.value_or(200000), c.seed);
  std::string csv = "eps,delta\n";
  std::vector<double> es, ds;
  for (const auto& e : curve) {
    csv += format_double(e.eps) + "," + format_double(e.delta) + "\n";
    es.push_back(e.eps);
    ds.push_back(e.delta);
    out << "modulus p=" << format_double(p) << " eps=" << format_double(e.eps) << " delta<=" << format_double(e.delta)
        << "\n";
  }
  emit(c, nlohmann::json{{"probe", "modulus"}, {"p", p}, {"seed", c.seed}, {"estimates", curve}}, csv,
       two_column(es, ds));
  return kOk;
}

inline int cmd_center(const ExperimentConfig& c, std::ostream& out) {
  const Operator op = make_operator(c.op, c.dim);
  const double ap = op.domain().ambient_p;
  const SeqVector x = parse_vector_spec(c.starts.empty() ? std::string("1,1") : c.starts.front(), ap);
  const GridSpec g = parse_grid(c.grid);
  const SeqVector dir = parse_vector_spec(c.direction, ap);
  const IterationTrace trace = run_iteration(op, x, c.n.value_or(kDefaultIterations));
  const AsymptoticCenterResult res =
      asymptotic_center(op, trace, line_grid(dir, g.lo, g.hi, g.step), "c*" + c.direction + ", c in " + c.grid,
                        c.threads);
  const WeakClusterEstimate clusters = estimate_weak_clusters(trace, c.tol.value_or(kDefaultIterationTol));
  double gap = -1.0;
  if (clusters.clusters.size() == 1) gap = distance(res.y0, clusters.clusters.front());
  std::string csv = "c,phi\n";
  std::vector<double> cs;
  for (std::size_t i = 0; i < res.phi.size(); ++i) {
    cs.push_back(g.lo + static_cast<double>(i) * g.step);
    csv += format_double(cs.back()) + "," + format_double(res.phi[i]) + "\n";
  }
  emit(c,
       nlohmann::json{{"probe", "center"},
                      {"operator", op.name()},
                      {"start", x},
                      {"result", res},
                      {"clusters", clusters},
                      {"level_set_diameter", res.level_set_diameter(1e-9)},
                      {"center_to_cluster", gap}},
       csv, two_column(cs, res.phi));
  out << "center " << op.name() << " y0=" << to_string(res.y0) << " r0=" << format_double(res.r0)
      << " clusters=" << clusters.clusters.size();
  if (gap >= 0) out << " |y0-cluster|=" << format_double(gap);
  out << "\n";
  return kOk;
}

}  // namespace detail

/// Runs the command line `args` (without the program name).
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  ExperimentConfig cfg;
  CLI::App app("Numerical laboratory for mean nonexpansive maps on l^p", "meanfix");
  app.require_subcommand(1);
  bind_options(app, cfg);
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the effective config as key=value text and exit");
  auto* certify = app.add_subcommand("certify", "Sample the (alpha,p) mean-nonexpansive inequality");
  auto* iterate = app.add_subcommand("iterate", "Picard iteration with limit and cluster diagnostics");
  auto* probe = app.add_subcommand("probe", "Geometry probes");
  auto* corpus = app.add_subcommand("corpus", "List the built-in operators");
  probe->require_subcommand(1);
  auto* opial = probe->add_subcommand("opial", "Opial margin along (e_n)");
  auto* duality = probe->add_subcommand("duality", "Duality map, its identities, and weak continuity");
  auto* modulus = probe->add_subcommand("modulus", "Sampled modulus of convexity");
  auto* center = probe->add_subcommand("center", "Asymptotic center over a line of fixed points");
  for (auto* s : {certify, iterate, probe, corpus, opial, duality, modulus, center}) s->fallthrough();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    if (dump_config) {
      out << cfg.to_ini();
      return kOk;
    }
    if (corpus->parsed()) return detail::cmd_corpus(out);
    if (certify->parsed()) return detail::cmd_certify(cfg, out, err);
    if (iterate->parsed()) return detail::cmd_iterate(cfg, out);
    if (opial->parsed()) return detail::cmd_opial(cfg, out);
    if (duality->parsed()) return detail::cmd_duality(cfg, out);
    if (modulus->parsed()) return detail::cmd_modulus(cfg, out);
    if (center->parsed()) return detail::cmd_center(cfg, out);
  } catch (const ExtractionError& e) {
    err << "error: " << e.what() << "\n";
    return kViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace meanfix::cli
