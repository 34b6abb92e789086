#include "ctbn/exact.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ctbn {

namespace {

int state_of(const CtbnModel& model, const std::string& var, const std::string& value) {
  int vi = model.var_index(var);
  if (vi < 0) throw ValidationError("unknown variable '" + var + "'");
  int s = model.variables[vi].state_index(value);
  if (s < 0)
    throw ValidationError("unknown state '" + value + "' of variable '" + var + "'");
  return s;
}

void zero_inconsistent(Vector& p, const Scope& full, const std::string& var, int keep) {
  int pos = full.find(var);
  for (long i = 0; i < p.size(); ++i)
    if (full.digit(i, pos) != keep) p[i] = 0;
}

void relabel(Vector& p, const Scope& full, const std::string& var, int from, int to) {
  int pos = full.find(var);
  long stride = full.stride(pos);
  Vector next = Vector::Zero(p.size());
  for (long i = 0; i < p.size(); ++i) {
    int digit = full.digit(i, pos);
    if (digit == from)
      next[i + (to - from) * stride] = p[i];
    else if (digit != to)
      next[i] = p[i];
  }
  p = std::move(next);
}

void apply_boundary(Vector& p, const Scope& full, const CtbnModel& model,
                    const std::vector<PointOb>& points,
                    const std::vector<TransitionOb>& transitions) {
  // Transitions bind the left limit to their source state, then move the
  // surviving mass; points bind the state at the boundary itself (the right
  // limit), so they apply after the relabeling.
  for (const auto& ob : transitions)
    zero_inconsistent(p, full, ob.var, state_of(model, ob.var, ob.from_value));
  for (const auto& ob : transitions) {
    int from = state_of(model, ob.var, ob.from_value);
    int to = state_of(model, ob.var, ob.to_value);
    if (from == to)
      throw ValidationError("observed transition on '" + ob.var +
                            "' does not change the state");
    relabel(p, full, ob.var, from, to);
  }
  for (const auto& ob : points)
    zero_inconsistent(p, full, ob.var, state_of(model, ob.var, ob.value));
}

// Unnormalized full-joint vector at time `t` (right limit), or at the horizon
// end when t is past every segment, filtered through the evidence.
Vector filter_to(const CtbnModel& model, const EvidenceTimeline& ev, double t) {
  SegmentedEvidence segmented = partition_evidence(model, ev);
  Scope full = model.full_scope();
  IntensityFactor joint = joint_intensity(model);

  Vector p = initial_joint(model, full).p;
  apply_boundary(p, full, model, segmented.at_start_points,
                 segmented.at_start_transitions);

  for (const Segment& seg : segmented.segments) {
    IntensityFactor reduced = reduce(joint, seg.active);
    PointDistribution cur;
    cur.scope = full;
    cur.retained = full_retained(full);
    cur.p = p;
    // Mass on evidence-inconsistent states is dropped, not renormalized:
    // intermediate vectors stay evidence likelihoods.
    PointDistribution restricted = restrict_to(cur, reduced.retained, false);
    bool inside = t < seg.t_end;
    double dt = (inside ? t : seg.t_end) - seg.t_begin;
    PointDistribution advanced = propagate(restricted, reduced, dt);
    p = scatter_full(advanced).p;
    if (inside) return p;
    apply_boundary(p, full, model, seg.boundary_points, seg.boundary_transitions);
  }
  return p;
}

}  // namespace

IntensityFactor joint_intensity(const CtbnModel& model) {
  Scope full = model.full_scope();
  if (full.n_joint() > tols().joint_cap)
    throw SizeCapError("joint state space has " + std::to_string(full.n_joint()) +
                       " states, above the cap of " + std::to_string(tols().joint_cap));
  IntensityFactor out = zero_factor(full, full_retained(full));
  for (const auto& v : model.variables)
    out.m += embed(cim_factor(model, v.name), full, out.retained).m;
  return out;
}

PointDistribution exact_query(const CtbnModel& model, const EvidenceTimeline& ev,
                              double t, const std::vector<std::string>& query_vars) {
  if (t < ev.horizon_start || t > ev.horizon_end)
    throw ValidationError("query time outside the evidence horizon");
  Scope full = model.full_scope();
  PointDistribution joint;
  joint.scope = full;
  joint.retained = full_retained(full);
  joint.p = filter_to(model, ev, t);
  if (joint.p.sum() < tols().underflow)
    throw ImpossibleEvidenceError("evidence has probability zero");
  return normalized(marginalize(joint, model.scope_of(query_vars)));
}

double evidence_likelihood(const CtbnModel& model, const EvidenceTimeline& ev) {
  return filter_to(model, ev, std::numeric_limits<double>::infinity()).sum();
}

double trajectory_log_likelihood(const CtbnModel& model, const Trajectory& traj) {
  if (!(traj.end_time > traj.start_time))
    throw ValidationError("trajectory has an empty time span");

  // Current state by variable index.
  std::vector<int> state(model.variables.size());
  for (size_t v = 0; v < model.variables.size(); ++v) {
    auto it = traj.initial_state.find(model.variables[v].name);
    if (it == traj.initial_state.end())
      throw ValidationError("trajectory lacks an initial state for variable '" +
                            model.variables[v].name + "'");
    state[v] = state_of(model, model.variables[v].name, it->second);
  }

  double log_density = 0;

  // Initial-network probability of the starting assignment.
  for (size_t v = 0; v < model.variables.size(); ++v) {
    const auto& cpt = model.initial.cpts.at(model.variables[v].name);
    long u = 0, s = 1;
    for (const auto& pname : cpt.parents) {
      int pi = model.var_index(pname);
      u += state[pi] * s;
      s *= model.variables[pi].n_states();
    }
    double prob = cpt.rows[u][state[v]];
    if (prob <= 0) return -std::numeric_limits<double>::infinity();
    log_density += std::log(prob);
  }

  auto parent_index = [&](const Cim& cim) {
    long u = 0, s = 1;
    for (const auto& pname : cim.parents) {
      int pi = model.var_index(pname);
      u += state[pi] * s;
      s *= model.variables[pi].n_states();
    }
    return u;
  };

  // Survival terms accumulate continuously; transition terms at events.
  double t_prev = traj.start_time;
  size_t next = 0;
  while (true) {
    double t_now = next < traj.transitions.size() ? traj.transitions[next].t
                                                  : traj.end_time;
    if (!(t_now >= t_prev) || t_now > traj.end_time)
      throw ValidationError("trajectory transition times must be ordered and in range");
    double dt = t_now - t_prev;
    if (dt > 0) {
      for (size_t v = 0; v < model.variables.size(); ++v) {
        const Cim& cim = model.cims.at(model.variables[v].name);
        const Matrix& q = cim.matrices[parent_index(cim)];
        log_density += q(state[v], state[v]) * dt;  // diagonal = -q_{x|u}
      }
    }
    if (next >= traj.transitions.size()) break;

    const auto& tr = traj.transitions[next++];
    int vi = model.var_index(tr.var);
    if (vi < 0) throw ValidationError("trajectory names unknown variable '" + tr.var + "'");
    int to = state_of(model, tr.var, tr.to);
    if (to == state[vi])
      throw ValidationError("trajectory transition does not change the state of '" +
                            tr.var + "'");
    const Cim& cim = model.cims.at(tr.var);
    double rate = cim.matrices[parent_index(cim)](state[vi], to);
    if (rate <= 0) return -std::numeric_limits<double>::infinity();
    log_density += std::log(rate);
    state[vi] = to;
    t_prev = t_now;
  }
  return log_density;
}

}  // namespace ctbn
