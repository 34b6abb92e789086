#include "ctbn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <CLI11.hpp>

#include "ctbn/ep.hpp"
#include "ctbn/exact.hpp"
#include "ctbn/io.hpp"
#include "ctbn/kl.hpp"
#include "ctbn/model.hpp"
#include "ctbn/sampler.hpp"

namespace ctbn {

namespace {

// Human-readable label of a joint state: state names joined by commas.
std::string joint_label(const CtbnModel& model, const Scope& scope, long idx) {
  std::string s;
  for (int i = 0; i < scope.size(); ++i) {
    if (i) s += ",";
    const Variable& v = model.variables[model.var_index(scope[i].name)];
    s += v.states[scope.digit(idx, i)];
  }
  return s;
}

Json number_or_string(double x) {
  if (std::isfinite(x)) return round6(x);
  return x > 0 ? "infinity" : "-infinity";
}

Json distribution_json(const CtbnModel& model, const PointDistribution& d) {
  Json out = Json::object();
  for (size_t i = 0; i < d.retained.size(); ++i)
    out[joint_label(model, d.scope, d.retained[i])] = round6(d.p[i]);
  return out;
}

std::string distribution_text(const CtbnModel& model, const PointDistribution& d) {
  std::string s;
  for (size_t i = 0; i < d.retained.size(); ++i) {
    if (i) s += " ";
    s += joint_label(model, d.scope, d.retained[i]) + "=" + fmt6(d.p[i]);
  }
  return s;
}

std::string vars_label(const std::vector<std::string>& vars) {
  std::string s;
  for (size_t i = 0; i < vars.size(); ++i) {
    if (i) s += ",";
    s += vars[i];
  }
  return s;
}

void print_segment_reports(std::ostream& out, const std::vector<SegmentReport>& reports) {
  for (const auto& r : reports)
    out << "segment " << r.index << " [" << fmt6(r.t_begin) << "," << fmt6(r.t_end)
        << "): " << (r.converged ? "converged" : "NOT CONVERGED") << " in " << r.sweeps
        << " sweep" << (r.sweeps == 1 ? "" : "s") << ", residual " << fmt6(r.residual)
        << "\n";
}

Json segment_reports_json(const std::vector<SegmentReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports)
    arr.push_back({{"index", r.index},
                   {"t_begin", round6(r.t_begin)},
                   {"t_end", round6(r.t_end)},
                   {"converged", r.converged},
                   {"sweeps", r.sweeps},
                   {"residual", number_or_string(r.residual)}});
  return arr;
}

std::string topology_text(const CtbnModel& model, const ClusterTopology& topo) {
  std::string s;
  for (int c = 0; c < topo.n_clusters(); ++c) {
    if (c) s += " ";
    s += "{";
    for (size_t i = 0; i < topo.clusters[c].size(); ++i) {
      if (i) s += ",";
      s += model.variables[topo.clusters[c][i]].name;
    }
    s += "}";
  }
  return s;
}

int cmd_validate(const std::string& model_path, bool json, std::ostream& out) {
  CtbnModel model = load_model(model_path);
  std::vector<std::string> errors = validate_model(model);
  if (json) {
    Json report;
    report["valid"] = errors.empty();
    report["errors"] = errors;
    out << report.dump(2) << "\n";
  } else if (errors.empty()) {
    out << "model ok: " << model.variables.size() << " variable"
        << (model.variables.size() == 1 ? "" : "s") << ", " << model.edges.size()
        << " edge" << (model.edges.size() == 1 ? "" : "s") << "\n";
  } else {
    out << "invalid model:\n";
    for (const auto& e : errors) out << "  - " << e << "\n";
  }
  return errors.empty() ? kExitOk : kExitValidation;
}

int cmd_exact_query(const std::string& model_path, const std::string& evidence_path,
                    const std::string& query_path, bool json, std::ostream& out) {
  CtbnModel model = load_model(model_path);
  validated(model);
  EvidenceTimeline ev = load_evidence(evidence_path, model);
  QuerySpec spec = load_query(query_path, model);

  if (spec.kind == QueryKind::kEvidenceLikelihood) {
    double like = evidence_likelihood(model, ev);
    if (json) {
      Json report;
      report["kind"] = "evidence-likelihood";
      report["likelihood"] = number_or_string(like);
      out << report.dump(2) << "\n";
    } else {
      out << "evidence likelihood: " << fmt6(like) << "\n";
    }
    return kExitOk;
  }
  if (spec.kind != QueryKind::kMarginal)
    throw ValidationError("the exact engine answers marginal and evidence-likelihood "
                          "queries; expected statistics run under `ep stats`");

  Json results = Json::array();
  for (double t : spec.times) {
    PointDistribution d = exact_query(model, ev, t, spec.variables);
    if (json)
      results.push_back({{"t", round6(t)},
                         {"variables", spec.variables},
                         {"distribution", distribution_json(model, d)}});
    else
      out << "t=" << fmt6(t) << " " << vars_label(spec.variables) << ": "
          << distribution_text(model, d) << "\n";
  }
  if (json) {
    Json report;
    report["kind"] = "marginal";
    report["engine"] = "exact";
    report["results"] = std::move(results);
    out << report.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_ep_query(const std::string& model_path, const std::string& evidence_path,
                 const std::string& query_path, const std::string& topology_path,
                 double tol, int max_iters, bool json, std::ostream& out) {
  CtbnModel model = load_model(model_path);
  validated(model);
  EvidenceTimeline ev = load_evidence(evidence_path, model);
  QuerySpec spec = load_query(query_path, model);
  if (spec.kind != QueryKind::kMarginal)
    throw ValidationError("`ep query` answers marginal queries; use `exact query` or "
                          "`ep stats` for other kinds");

  ClusterTopology topo;
  FilterOptions options;
  options.tol = tol;
  options.max_iters = max_iters;
  if (!topology_path.empty()) {
    topo = load_topology(topology_path, model);
    options.topology = &topo;
  }
  for (double t : spec.times) options.probes.push_back(ProbeSpec{t, spec.variables});

  FilterResult result = run_filter(model, ev, options);

  if (json) {
    Json report;
    report["kind"] = "marginal";
    report["engine"] = "ep";
    report["converged"] = result.all_converged;
    report["segments"] = segment_reports_json(result.reports);
    Json results = Json::array();
    for (size_t i = 0; i < spec.times.size(); ++i)
      results.push_back({{"t", round6(spec.times[i])},
                         {"variables", spec.variables},
                         {"distribution", distribution_json(model, result.probe_answers[i])}});
    report["results"] = std::move(results);
    out << report.dump(2) << "\n";
  } else {
    print_segment_reports(out, result.reports);
    for (size_t i = 0; i < spec.times.size(); ++i)
      out << "t=" << fmt6(spec.times[i]) << " " << vars_label(spec.variables) << ": "
          << distribution_text(model, result.probe_answers[i]) << "\n";
  }
  return result.all_converged ? kExitOk : kExitNotConverged;
}

int cmd_ep_stats(const std::string& model_path, const std::string& evidence_path,
                 int segment, const std::string& topology_path, double tol, int max_iters,
                 bool json, std::ostream& out) {
  CtbnModel model = load_model(model_path);
  validated(model);
  EvidenceTimeline ev = load_evidence(evidence_path, model);

  SegmentedEvidence segmented = partition_evidence(model, ev);
  if (segment < 0 || segment >= static_cast<int>(segmented.segments.size()))
    throw ValidationError("segment index out of range; evidence has " +
                          std::to_string(segmented.segments.size()) + " segments");

  ClusterTopology topo;
  FilterOptions options;
  options.tol = tol;
  options.max_iters = max_iters;
  options.stats_segment = segment;
  if (!topology_path.empty()) {
    topo = load_topology(topology_path, model);
    options.topology = &topo;
  }

  FilterResult result = run_filter(model, ev, options);
  const Segment& seg = segmented.segments[segment];

  if (json) {
    Json report;
    report["kind"] = "expected-statistics";
    report["segment"] = segment;
    report["t_begin"] = round6(seg.t_begin);
    report["t_end"] = round6(seg.t_end);
    report["converged"] = result.all_converged;
    report["segments"] = segment_reports_json(result.reports);
    Json clusters = Json::array();
    for (int c = 0; c < result.topo.n_clusters(); ++c) {
      const SuffStats& s = result.segment_stats[c];
      Json jc;
      jc["index"] = c;
      Json names = Json::array();
      for (int v : result.topo.clusters[c]) names.push_back(model.variables[v].name);
      jc["variables"] = std::move(names);
      Json states = Json::array();
      for (long r : s.retained) states.push_back(joint_label(model, s.scope, r));
      jc["states"] = std::move(states);
      Json time = Json::array(), exits = Json::array(), trans = Json::array();
      for (int i = 0; i < s.dim(); ++i) {
        time.push_back(round6(s.expected_time[i]));
        exits.push_back(round6(s.expected_exit[i]));
        Json row = Json::array();
        for (int k = 0; k < s.dim(); ++k) row.push_back(round6(s.expected_transitions(i, k)));
        trans.push_back(std::move(row));
      }
      jc["expected_time"] = std::move(time);
      jc["expected_transitions"] = std::move(trans);
      jc["expected_exit"] = std::move(exits);
      clusters.push_back(std::move(jc));
    }
    report["clusters"] = std::move(clusters);
    out << report.dump(2) << "\n";
  } else {
    print_segment_reports(out, result.reports);
    out << "expected sufficient statistics, segment " << segment << " ["
        << fmt6(seg.t_begin) << "," << fmt6(seg.t_end) << ")\n";
    for (int c = 0; c < result.topo.n_clusters(); ++c) {
      const SuffStats& s = result.segment_stats[c];
      out << "cluster " << c << " {";
      for (size_t i = 0; i < result.topo.clusters[c].size(); ++i) {
        if (i) out << ",";
        out << model.variables[result.topo.clusters[c][i]].name;
      }
      out << "}\n";
      out << "  expected time:";
      for (int i = 0; i < s.dim(); ++i)
        out << " " << joint_label(model, s.scope, s.retained[i]) << "="
            << fmt6(s.expected_time[i]);
      out << "\n";
      bool any = false;
      for (int i = 0; i < s.dim(); ++i)
        for (int k = 0; k < s.dim(); ++k)
          if (i != k && s.expected_transitions(i, k) != 0) {
            if (!any) out << "  expected transitions:\n";
            any = true;
            out << "    " << joint_label(model, s.scope, s.retained[i]) << " -> "
                << joint_label(model, s.scope, s.retained[k]) << ": "
                << fmt6(s.expected_transitions(i, k)) << "\n";
          }
      if (s.expected_exit.any()) {
        out << "  expected exits:";
        for (int i = 0; i < s.dim(); ++i)
          out << " " << joint_label(model, s.scope, s.retained[i]) << "="
              << fmt6(s.expected_exit[i]);
        out << "\n";
      }
    }
  }
  return result.all_converged ? kExitOk : kExitNotConverged;
}

int cmd_sample(const std::string& model_path, long n, double t_end, std::uint64_t seed,
               std::ostream& out) {
  CtbnModel model = load_model(model_path);
  validated(model);
  if (n < 1) throw ValidationError("--n must be at least 1");
  if (!(t_end > 0)) throw ValidationError("--t-end must be positive");
  std::vector<Trajectory> trajs;
  trajs.reserve(n);
  for (long i = 0; i < n; ++i)
    trajs.push_back(sample_trajectory(model, t_end, seed + static_cast<std::uint64_t>(i)));
  out << trajectories_to_json(trajs, seed, t_end).dump(2) << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& model_path, const std::string& evidence_path,
                long points, double tol, int max_iters, bool json, std::ostream& out) {
  CtbnModel model = load_model(model_path);
  validated(model);
  EvidenceTimeline ev = load_evidence(evidence_path, model);
  if (points < 2) throw ValidationError("--points must be at least 2");

  FilterOptions options;
  options.tol = tol;
  options.max_iters = max_iters;
  options.collect_probe_beliefs = true;
  std::vector<double> times;
  for (long i = 0; i < points; ++i) {
    double t = ev.horizon_start +
               (ev.horizon_end - ev.horizon_start) * i / (points - 1);
    times.push_back(t);
    options.probes.push_back(ProbeSpec{t, {}});
  }

  FilterResult result = run_filter(model, ev, options);

  std::vector<std::string> all_vars;
  for (const auto& v : model.variables) all_vars.push_back(v.name);

  double total = 0, worst = 0;
  Json point_reports = Json::array();
  std::string text;
  for (long i = 0; i < points; ++i) {
    PointDistribution exact = exact_query(model, ev, times[i], all_vars);
    PointDistribution approx = assemble_joint(result.probe_beliefs[i], model, result.topo);
    double kl = kl_divergence(exact.p, approx.p);
    total += kl;
    worst = std::max(worst, kl);
    if (json)
      point_reports.push_back({{"t", round6(times[i])}, {"kl", number_or_string(kl)}});
    else
      text += "t=" + fmt6(times[i]) + " kl=" + fmt6(kl) + "\n";
  }
  double average = total / static_cast<double>(points);

  if (json) {
    Json report;
    report["kind"] = "compare";
    report["topology"] = topology_text(model, result.topo);
    report["points"] = std::move(point_reports);
    report["average_kl"] = number_or_string(average);
    report["max_kl"] = number_or_string(worst);
    report["converged"] = result.all_converged;
    report["segments"] = segment_reports_json(result.reports);
    out << report.dump(2) << "\n";
  } else {
    out << "topology: " << topology_text(model, result.topo) << "\n";
    print_segment_reports(out, result.reports);
    out << text;
    out << "average kl: " << fmt6(average) << "\n";
    out << "max kl: " << fmt6(worst) << "\n";
  }
  return result.all_converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-time Bayesian network inference"};
  app.require_subcommand(1);

  std::string model_path, evidence_path, query_path, topology_path;
  double tol = tols().ep_tol;
  int max_iters = tols().ep_max_iters;
  bool json = false;
  int segment = 0;
  long n = 1, points = 60;
  double t_end = 1.0;
  std::uint64_t seed = 0;

  CLI::App* validate = app.add_subcommand("validate", "Check a model file");
  validate->add_option("model", model_path, "model JSON")->required();
  validate->add_flag("--json", json, "JSON report");

  CLI::App* exact = app.add_subcommand("exact", "Exact (ground-truth) engine");
  exact->require_subcommand(1);
  CLI::App* exact_query_cmd =
      exact->add_subcommand("query", "Marginals / evidence likelihood by full-joint "
                                     "filtering");
  exact_query_cmd->add_option("model", model_path, "model JSON")->required();
  exact_query_cmd->add_option("evidence", evidence_path, "evidence JSON")->required();
  exact_query_cmd->add_option("query", query_path, "query JSON")->required();
  exact_query_cmd->add_flag("--json", json, "JSON report");

  CLI::App* ep = app.add_subcommand("ep", "Expectation-propagation engine");
  ep->require_subcommand(1);
  CLI::App* ep_query_cmd = ep->add_subcommand("query", "Marginals by cluster-graph EP");
  ep_query_cmd->add_option("model", model_path, "model JSON")->required();
  ep_query_cmd->add_option("evidence", evidence_path, "evidence JSON")->required();
  ep_query_cmd->add_option("query", query_path, "query JSON")->required();
  ep_query_cmd->add_option("--tol", tol, "message-change convergence threshold");
  ep_query_cmd->add_option("--max-iters", max_iters, "sweep budget per segment");
  ep_query_cmd->add_option("--topology", topology_path, "cluster topology JSON override");
  ep_query_cmd->add_flag("--json", json, "JSON report");

  CLI::App* ep_stats_cmd =
      ep->add_subcommand("stats", "Expected sufficient statistics per cluster");
  ep_stats_cmd->add_option("model", model_path, "model JSON")->required();
  ep_stats_cmd->add_option("evidence", evidence_path, "evidence JSON")->required();
  ep_stats_cmd->add_option("--segment", segment, "evidence segment index")->required();
  ep_stats_cmd->add_option("--tol", tol, "message-change convergence threshold");
  ep_stats_cmd->add_option("--max-iters", max_iters, "sweep budget per segment");
  ep_stats_cmd->add_option("--topology", topology_path, "cluster topology JSON override");
  ep_stats_cmd->add_flag("--json", json, "JSON report");

  CLI::App* sample = app.add_subcommand("sample", "Forward-sample trajectories");
  sample->add_option("model", model_path, "model JSON")->required();
  sample->add_option("--n", n, "number of trajectories");
  sample->add_option("--t-end", t_end, "trajectory horizon")->required();
  sample->add_option("--seed", seed, "base seed (trajectory i uses seed+i)");

  CLI::App* compare = app.add_subcommand(
      "compare", "Exact-vs-EP joint KL divergence over evenly spaced probes");
  compare->add_option("model", model_path, "model JSON")->required();
  compare->add_option("evidence", evidence_path, "evidence JSON")->required();
  compare->add_option("--points", points, "number of evenly spaced probe times");
  compare->add_option("--tol", tol, "message-change convergence threshold");
  compare->add_option("--max-iters", max_iters, "sweep budget per segment");
  compare->add_flag("--json", json, "JSON report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (validate->parsed()) return cmd_validate(model_path, json, out);
    if (exact_query_cmd->parsed())
      return cmd_exact_query(model_path, evidence_path, query_path, json, out);
    if (ep_query_cmd->parsed())
      return cmd_ep_query(model_path, evidence_path, query_path, topology_path, tol,
                          max_iters, json, out);
    if (ep_stats_cmd->parsed())
      return cmd_ep_stats(model_path, evidence_path, segment, topology_path, tol,
                          max_iters, json, out);
    if (sample->parsed()) return cmd_sample(model_path, n, t_end, seed, out);
    if (compare->parsed())
      return cmd_compare(model_path, evidence_path, points, tol, max_iters, json, out);
  } catch (const SizeCapError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSizeCap;
  } catch (const ImpossibleEvidenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitImpossibleEvidence;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  err << "error: no subcommand selected\n";
  return kExitValidation;
}

}  // namespace ctbn
