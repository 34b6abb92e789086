#include "ctbn/ep.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace ctbn {

namespace {

// Tree rooting for belief recalibration: every component rooted at its
// lowest-index cluster, children listed in BFS order.
struct RootedTree {
  std::vector<int> parent;       // -1 at roots
  std::vector<int> parent_edge;  // -1 at roots
  std::vector<int> bfs;          // roots first within their component
};

RootedTree root_at_lowest(const ClusterTopology& topo) {
  int m = topo.n_clusters();
  std::vector<std::vector<std::pair<int, int>>> adj(m);
  for (int e = 0; e < topo.n_edges(); ++e) {
    auto [i, j] = topo.edges[e];
    adj[i].emplace_back(j, e);
    adj[j].emplace_back(i, e);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  RootedTree tree;
  tree.parent.assign(m, -1);
  tree.parent_edge.assign(m, -1);
  std::vector<bool> seen(m, false);
  for (int start = 0; start < m; ++start) {
    if (seen[start]) continue;
    std::deque<int> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      int c = queue.front();
      queue.pop_front();
      tree.bfs.push_back(c);
      for (auto [nb, e] : adj[c]) {
        if (seen[nb]) continue;
        seen[nb] = true;
        tree.parent[nb] = c;
        tree.parent_edge[nb] = e;
        queue.push_back(nb);
      }
    }
  }
  return tree;
}

// b *= (num / den) on the positions of `sub` inside b's scope; 0/0 -> 0.
void multiply_ratio(PointDistribution& b, const PointDistribution& num,
                    const PointDistribution& den) {
  std::vector<int> pos = b.scope.positions_of(num.scope);
  for (long i = 0; i < b.p.size(); ++i) {
    long s = b.scope.project(i, pos, num.scope);
    double d = den.p[s];
    b.p[i] = (d > 0) ? b.p[i] * (num.p[s] / d) : 0.0;
  }
}

void normalize_in_place(PointDistribution& d, const char* what) {
  double mass = d.p.sum();
  if (mass < tols().underflow)
    throw ImpossibleEvidenceError(std::string(what) + " has no surviving mass");
  d.p /= mass;
}

// Fresh mutually-consistent beliefs from per-cluster distributions (full
// cluster spaces): sepsets seeded from the child side of each tree edge.
CalibratedPointBeliefs beliefs_from_clusters(std::vector<PointDistribution> clusters,
                                             const CtbnModel& model,
                                             const ClusterTopology& topo) {
  CalibratedPointBeliefs bel;
  bel.cluster_beliefs = std::move(clusters);
  bel.sepset_beliefs.resize(topo.n_edges());
  RootedTree tree = root_at_lowest(topo);
  for (int c = 0; c < topo.n_clusters(); ++c) {
    int e = tree.parent_edge[c];
    if (e >= 0)
      bel.sepset_beliefs[e] =
          marginalize(bel.cluster_beliefs[c], sepset_scope(model, topo, e));
  }
  // Loopy topologies may leave extra edges without a tree child; seed those
  // from the lower-index endpoint.
  for (int e = 0; e < topo.n_edges(); ++e)
    if (bel.sepset_beliefs[e].p.size() == 0)
      bel.sepset_beliefs[e] =
          marginalize(bel.cluster_beliefs[topo.edges[e].first],
                      sepset_scope(model, topo, e));
  return bel;
}

int find_edge(const ClusterTopology& topo, int i, int j) {
  int a = std::min(i, j), b = std::max(i, j);
  for (int e = 0; e < topo.n_edges(); ++e)
    if (topo.edges[e] == std::make_pair(a, b)) return e;
  throw ValidationError("send_message: (" + std::to_string(i) + "," + std::to_string(j) +
                        ") is not a topology edge");
}

}  // namespace

ClusterGraphState init_segment(const CtbnModel& model, const ClusterTopology& topo,
                               const std::vector<PointDistribution>& initials_full,
                               const Segment& segment) {
  ClusterGraphState state;
  state.model = &model;
  state.topo = topo;
  state.segment = segment;

  int m = topo.n_clusters();
  state.potentials.reserve(m);
  state.initials_full = initials_full;
  state.initials_retained.reserve(m);
  for (int c = 0; c < m; ++c) {
    Scope sc = cluster_scope(model, topo, c);
    std::vector<long> retained = retained_consistent(sc, segment.active);
    if (retained.empty())
      throw ImpossibleEvidenceError("segment evidence eliminates every state of cluster " +
                                    std::to_string(c));
    IntensityFactor pot = zero_factor(sc, retained);
    for (size_t v = 0; v < model.variables.size(); ++v) {
      if (topo.assignment[v] != c) continue;
      IntensityFactor f = cim_factor(model, model.variables[v].name);
      std::map<std::string, int> local_ev;
      for (const auto& [name, value] : segment.active)
        if (f.scope.contains(name)) local_ev[name] = value;
      pot.m += embed(reduce(f, local_ev), sc, retained).m;
    }
    state.potentials.push_back(std::move(pot));
    state.initials_retained.push_back(restrict_to(initials_full[c], retained, true));
  }

  state.messages.reserve(topo.n_edges());
  for (int e = 0; e < topo.n_edges(); ++e) {
    Scope ss = sepset_scope(model, topo, e);
    std::vector<long> retained = retained_consistent(ss, segment.active);
    state.messages.push_back(zero_factor(ss, retained));
    int n = static_cast<int>(retained.size());
    state.prev_low_high.push_back(Matrix::Zero(n, n));
    state.prev_high_low.push_back(Matrix::Zero(n, n));
  }
  return state;
}

double send_message(ClusterGraphState& state, int i, int j) {
  int e = find_edge(state.topo, i, j);
  Scope ss = sepset_scope(*state.model, state.topo, e);

  IntensityFactor delta = approx_marginalize(
      state.potentials[i], state.initials_retained[i], 0.0, state.segment.length(), ss);

  IntensityFactor& mu = state.messages[e];
  IntensityFactor diff = delta;
  diff.m -= mu.m;
  state.potentials[j].m +=
      embed(diff, state.potentials[j].scope, state.potentials[j].retained).m;

  Matrix& prev = (i < j) ? state.prev_low_high[e] : state.prev_high_low[e];
  double change = (delta.m - prev).cwiseAbs().maxCoeff();
  prev = delta.m;
  mu = std::move(delta);
  return change;
}

EpRunInfo run_segment_ep(ClusterGraphState& state, double tol, int max_iters,
                         const SweepObserver& observer) {
  EpRunInfo info;
  if (state.topo.n_edges() == 0) {
    info.converged = true;
    info.residual = calibration_residual(state);
    return info;
  }

  // Tree topologies sweep leaves-to-root then back; loopy ones sweep the edge
  // list forward (low to high cluster) then backward.
  std::vector<std::pair<int, int>> order;
  if (state.topo.is_forest()) {
    TreeSchedule sched = make_tree_schedule(state.topo);
    for (int c : sched.up_order) order.emplace_back(c, sched.parent[c]);
    for (int c : sched.down_order) order.emplace_back(sched.parent[c], c);
  } else {
    for (const auto& [a, b] : state.topo.edges) order.emplace_back(a, b);
    for (auto it = state.topo.edges.rbegin(); it != state.topo.edges.rend(); ++it)
      order.emplace_back(it->second, it->first);
  }

  for (int sweep = 1; sweep <= max_iters; ++sweep) {
    double change = 0;
    for (const auto& [a, b] : order) change = std::max(change, send_message(state, a, b));
    info.sweeps = sweep;
    info.last_change = change;
    if (observer) observer(state, sweep);
    if (change < tol) {
      info.converged = true;
      break;
    }
  }
  info.residual = calibration_residual(state);
  return info;
}

double calibration_residual(const ClusterGraphState& state) {
  double res = 0;
  for (int e = 0; e < state.topo.n_edges(); ++e) {
    auto [i, j] = state.topo.edges[e];
    Scope ss = sepset_scope(*state.model, state.topo, e);
    IntensityFactor from_i = approx_marginalize(
        state.potentials[i], state.initials_retained[i], 0.0, state.segment.length(), ss);
    IntensityFactor from_j = approx_marginalize(
        state.potentials[j], state.initials_retained[j], 0.0, state.segment.length(), ss);
    res = std::max(res, (from_i.m - from_j.m).cwiseAbs().maxCoeff());
  }
  return res;
}

CalibratedPointBeliefs beliefs_at(const ClusterGraphState& state, double dt) {
  std::vector<PointDistribution> clusters;
  clusters.reserve(state.topo.n_clusters());
  for (int c = 0; c < state.topo.n_clusters(); ++c) {
    PointDistribution b =
        propagate(state.initials_retained[c], state.potentials[c], dt);
    normalize_in_place(b, "cluster belief");
    clusters.push_back(scatter_full(b));
  }
  CalibratedPointBeliefs bel =
      beliefs_from_clusters(std::move(clusters), *state.model, state.topo);
  recalibrate_beliefs(bel, *state.model, state.topo);
  return bel;
}

CalibratedPointBeliefs endpoint_beliefs(const ClusterGraphState& state) {
  return beliefs_at(state, state.segment.length());
}

void recalibrate_beliefs(CalibratedPointBeliefs& beliefs, const CtbnModel& model,
                         const ClusterTopology& topo) {
  RootedTree tree = root_at_lowest(topo);

  auto pass_edge = [&](int from, int to, int e) {
    PointDistribution new_s =
        marginalize(beliefs.cluster_beliefs[from], sepset_scope(model, topo, e));
    multiply_ratio(beliefs.cluster_beliefs[to], new_s, beliefs.sepset_beliefs[e]);
    beliefs.sepset_beliefs[e] = std::move(new_s);
  };

  if (topo.is_forest()) {
    // Upward (children before parents), then downward in BFS order.
    for (auto it = tree.bfs.rbegin(); it != tree.bfs.rend(); ++it)
      if (tree.parent[*it] >= 0) pass_edge(*it, tree.parent[*it], tree.parent_edge[*it]);
    for (int c : tree.bfs)
      if (tree.parent[c] >= 0) pass_edge(tree.parent[c], c, tree.parent_edge[c]);
  } else {
    // Loopy: iterate forward/backward edge sweeps to a fixed point.
    for (int sweep = 0; sweep < tols().ep_max_iters; ++sweep) {
      double change = 0;
      auto tracked_pass = [&](int from, int to, int e) {
        Vector before = beliefs.cluster_beliefs[to].p;
        pass_edge(from, to, e);
        normalize_in_place(beliefs.cluster_beliefs[to], "cluster belief");
        change = std::max(change,
                          (beliefs.cluster_beliefs[to].p - before).cwiseAbs().maxCoeff());
      };
      for (int e = 0; e < topo.n_edges(); ++e)
        tracked_pass(topo.edges[e].first, topo.edges[e].second, e);
      for (int e = topo.n_edges() - 1; e >= 0; --e)
        tracked_pass(topo.edges[e].second, topo.edges[e].first, e);
      if (change < tols().ep_tol) break;
    }
  }

  for (auto& b : beliefs.cluster_beliefs) normalize_in_place(b, "cluster belief");
  for (auto& s : beliefs.sepset_beliefs) normalize_in_place(s, "sepset belief");
}

CalibratedPointBeliefs condition_point_evidence(
    const CalibratedPointBeliefs& beliefs, const CtbnModel& model,
    const ClusterTopology& topo, const std::vector<PointOb>& points,
    const std::vector<TransitionOb>& transitions) {
  CalibratedPointBeliefs out = beliefs;
  if (points.empty() && transitions.empty()) return out;

  auto zero_inconsistent = [&](PointDistribution& d, const std::string& var, int keep) {
    int pos = d.scope.find(var);
    if (pos < 0) return;
    for (long i = 0; i < d.p.size(); ++i)
      if (d.scope.digit(i, pos) != keep) d.p[i] = 0;
  };
  auto zero_everywhere = [&](const std::string& var, int keep) {
    for (auto& b : out.cluster_beliefs) zero_inconsistent(b, var, keep);
    for (auto& s : out.sepset_beliefs) zero_inconsistent(s, var, keep);
  };

  auto state_of = [&](const std::string& var, const std::string& value) {
    int vi = model.var_index(var);
    if (vi < 0) throw ValidationError("evidence names unknown variable '" + var + "'");
    int s = model.variables[vi].state_index(value);
    if (s < 0)
      throw ValidationError("evidence names unknown state '" + value + "' of '" + var +
                            "'");
    return s;
  };

  auto check_mass = [&] {
    for (const auto& b : out.cluster_beliefs)
      if (b.p.sum() < tols().underflow)
        throw ImpossibleEvidenceError("point evidence has probability zero");
  };

  // Transitions bind the left limit: condition on their source states first.
  if (!transitions.empty()) {
    for (const auto& ob : transitions)
      zero_everywhere(ob.var, state_of(ob.var, ob.from_value));
    check_mass();
    recalibrate_beliefs(out, model, topo);
  }

  // Observed transitions: move the conditioned mass to the new state. The
  // relabeling is a bijection applied to every factor containing the
  // variable, so calibration is preserved.
  auto relabel = [&](PointDistribution& d, const std::string& var, int from, int to) {
    int pos = d.scope.find(var);
    if (pos < 0) return;
    Vector next = Vector::Zero(d.p.size());
    long stride = d.scope.stride(pos);
    for (long i = 0; i < d.p.size(); ++i) {
      int digit = d.scope.digit(i, pos);
      if (digit == from)
        next[i + (to - from) * stride] = d.p[i];
      else if (digit != to)
        next[i] = d.p[i];
    }
    d.p = std::move(next);
  };
  for (const auto& ob : transitions) {
    int from = state_of(ob.var, ob.from_value), to = state_of(ob.var, ob.to_value);
    if (from == to)
      throw ValidationError("observed transition on '" + ob.var +
                            "' does not change the state");
    for (auto& b : out.cluster_beliefs) relabel(b, ob.var, from, to);
    for (auto& s : out.sepset_beliefs) relabel(s, ob.var, from, to);
  }

  // Points bind the state at the boundary itself (the right limit), after any
  // observed jumps have moved the mass.
  if (!points.empty()) {
    for (const auto& ob : points) zero_everywhere(ob.var, state_of(ob.var, ob.value));
    check_mass();
    recalibrate_beliefs(out, model, topo);
  }
  return out;
}

PointDistribution assemble_joint(const CalibratedPointBeliefs& beliefs,
                                 const CtbnModel& model, const ClusterTopology& topo) {
  if (!topo.is_forest())
    throw ValidationError("joint reassembly requires a tree topology");
  Scope full = model.full_scope();
  PointDistribution out;
  out.scope = full;
  out.retained = full_retained(full);
  out.p = Vector::Ones(full.n_joint());

  for (int c = 0; c < topo.n_clusters(); ++c) {
    const PointDistribution& b = beliefs.cluster_beliefs[c];
    std::vector<int> pos = full.positions_of(b.scope);
    for (long i = 0; i < out.p.size(); ++i) out.p[i] *= b.p[full.project(i, pos, b.scope)];
  }
  for (int e = 0; e < topo.n_edges(); ++e) {
    const PointDistribution& s = beliefs.sepset_beliefs[e];
    std::vector<int> pos = full.positions_of(s.scope);
    for (long i = 0; i < out.p.size(); ++i) {
      double d = s.p[full.project(i, pos, s.scope)];
      out.p[i] = (d > 0) ? out.p[i] / d : 0.0;
    }
  }
  return normalized(out);
}

FilterResult run_filter(const CtbnModel& model, const EvidenceTimeline& ev,
                        const FilterOptions& options) {
  SegmentedEvidence segmented = partition_evidence(model, ev);

  FilterResult result;
  if (options.topology) {
    validate_topology(model, *options.topology);
    result.topo = *options.topology;
  } else {
    result.topo = build_cluster_tree(model);
  }
  const ClusterTopology& topo = result.topo;

  for (const auto& probe : options.probes)
    if (probe.t < ev.horizon_start || probe.t > ev.horizon_end)
      throw ValidationError("query time outside the evidence horizon");

  result.probe_answers.resize(options.probes.size());
  if (options.collect_probe_beliefs) result.probe_beliefs.resize(options.probes.size());

  // Smallest cluster containing every query variable (ties: lowest index).
  auto answering_cluster = [&](const std::vector<std::string>& vars) {
    int best = -1;
    for (int c = 0; c < topo.n_clusters(); ++c) {
      Scope sc = cluster_scope(model, topo, c);
      bool ok = true;
      for (const auto& v : vars)
        if (!sc.contains(v)) { ok = false; break; }
      if (ok && (best < 0 || topo.clusters[c].size() < topo.clusters[best].size()))
        best = c;
    }
    if (best < 0)
      throw ValidationError(
          "query variables do not share a cluster; use the exact engine or a custom "
          "topology");
    return best;
  };

  CalibratedPointBeliefs beliefs =
      beliefs_from_clusters(cluster_initial_distributions(model, topo), model, topo);
  if (!segmented.at_start_points.empty() || !segmented.at_start_transitions.empty())
    beliefs = condition_point_evidence(beliefs, model, topo, segmented.at_start_points,
                                       segmented.at_start_transitions);

  for (size_t si = 0; si < segmented.segments.size(); ++si) {
    const Segment& seg = segmented.segments[si];

    // Interval evidence starting here conditions the boundary beliefs before
    // the segment runs, so per-cluster restriction below loses no mass.
    if (!seg.active.empty()) {
      std::vector<PointOb> onset;
      for (const auto& [name, value] : seg.active)
        onset.push_back(PointOb{name, model.variables[model.var_index(name)].states[value],
                                seg.t_begin});
      beliefs = condition_point_evidence(beliefs, model, topo, onset, {});
    }

    ClusterGraphState state = init_segment(model, topo, beliefs.cluster_beliefs, seg);
    EpRunInfo info =
        run_segment_ep(state, options.tol, options.max_iters, options.sweep_observer);

    SegmentReport report;
    report.index = static_cast<int>(si);
    report.t_begin = seg.t_begin;
    report.t_end = seg.t_end;
    report.converged = info.converged;
    report.sweeps = info.sweeps;
    report.residual = info.residual;
    result.reports.push_back(report);
    result.all_converged = result.all_converged && info.converged;

    if (options.stats_segment == static_cast<int>(si)) {
      for (int c = 0; c < topo.n_clusters(); ++c)
        result.segment_stats.push_back(expected_suff_stats(
            state.potentials[c], state.initials_retained[c], 0.0, seg.length()));
    }

    for (size_t pi = 0; pi < options.probes.size(); ++pi) {
      const ProbeSpec& probe = options.probes[pi];
      if (!(probe.t >= seg.t_begin && probe.t < seg.t_end)) continue;
      if (!probe.vars.empty()) {
        int c = answering_cluster(probe.vars);
        PointDistribution b = propagate(state.initials_retained[c], state.potentials[c],
                                        probe.t - seg.t_begin);
        normalize_in_place(b, "query distribution");
        result.probe_answers[pi] =
            marginalize(scatter_full(b), model.scope_of(probe.vars));
      }
      if (options.collect_probe_beliefs)
        result.probe_beliefs[pi] = beliefs_at(state, probe.t - seg.t_begin);
    }

    beliefs = endpoint_beliefs(state);
    if (!seg.boundary_points.empty() || !seg.boundary_transitions.empty())
      beliefs = condition_point_evidence(beliefs, model, topo, seg.boundary_points,
                                         seg.boundary_transitions);
  }

  // Probes exactly at the horizon end read the final conditioned beliefs.
  for (size_t pi = 0; pi < options.probes.size(); ++pi) {
    const ProbeSpec& probe = options.probes[pi];
    if (probe.t != ev.horizon_end) continue;
    if (!probe.vars.empty()) {
      int c = answering_cluster(probe.vars);
      result.probe_answers[pi] =
          marginalize(beliefs.cluster_beliefs[c], model.scope_of(probe.vars));
    }
    if (options.collect_probe_beliefs) result.probe_beliefs[pi] = beliefs;
  }

  result.final_beliefs = std::move(beliefs);
  return result;
}

}  // namespace ctbn
