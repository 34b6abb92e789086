#include "ctbn/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ctbn {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Instantiation label for error messages: "A=a1,B=b2" over `parents`.
std::string instantiation_label(const CtbnModel& model,
                                const std::vector<std::string>& parents, long idx) {
  std::string s;
  for (const auto& p : parents) {
    int vi = model.var_index(p);
    int n = vi >= 0 ? model.variables[vi].n_states() : 1;
    int d = static_cast<int>(idx % n);
    idx /= n;
    if (!s.empty()) s += ",";
    s += p + "=" + (vi >= 0 ? model.variables[vi].states[d] : "?");
  }
  return s.empty() ? "(none)" : s;
}

long instantiation_count(const CtbnModel& model, const std::vector<std::string>& parents) {
  long n = 1;
  for (const auto& p : parents) {
    int vi = model.var_index(p);
    if (vi < 0) return -1;
    n *= model.variables[vi].n_states();
  }
  return n;
}

}  // namespace

std::vector<std::string> CtbnModel::parents_of(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& [p, c] : edges)
    if (c == name) out.push_back(p);
  std::sort(out.begin(), out.end(), [this](const std::string& a, const std::string& b) {
    return var_index(a) < var_index(b);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Scope CtbnModel::scope_of(const std::vector<std::string>& names) const {
  std::vector<ScopeVar> vars;
  for (const auto& n : names) {
    int vi = var_index(n);
    if (vi < 0) throw ValidationError("unknown variable '" + n + "'");
    vars.push_back(scope_var(vi));
  }
  return Scope(std::move(vars));
}

Scope CtbnModel::family_scope(const std::string& name) const {
  std::vector<std::string> names = parents_of(name);
  names.push_back(name);
  return scope_of(names);
}

Scope CtbnModel::full_scope() const {
  std::vector<ScopeVar> vars;
  for (size_t i = 0; i < variables.size(); ++i) vars.push_back(scope_var(static_cast<int>(i)));
  return Scope(std::move(vars));
}

std::vector<std::string> validate_model(const CtbnModel& model) {
  std::vector<std::string> errors;
  const double tol = tols().validation;

  // Variables: unique non-empty names, unique state labels.
  std::set<std::string> names;
  for (const auto& v : model.variables) {
    if (v.name.empty()) errors.push_back("variable with empty name");
    if (!names.insert(v.name).second)
      errors.push_back("duplicate variable name '" + v.name + "'");
    if (v.states.empty())
      errors.push_back("variable '" + v.name + "' has no states");
    std::set<std::string> labels;
    for (const auto& s : v.states)
      if (!labels.insert(s).second)
        errors.push_back("variable '" + v.name + "' has duplicate state label '" + s + "'");
  }

  // Graph edges reference declared variables; self-loops are illegal.
  for (const auto& [p, c] : model.edges) {
    if (model.var_index(p) < 0)
      errors.push_back("edge (" + p + "," + c + ") references unknown variable '" + p + "'");
    if (model.var_index(c) < 0)
      errors.push_back("edge (" + p + "," + c + ") references unknown variable '" + c + "'");
    if (p == c) errors.push_back("self-loop edge on variable '" + p + "'");
  }

  // One CIM per variable, parents matching the graph, well-formed rate matrices.
  for (const auto& v : model.variables) {
    auto it = model.cims.find(v.name);
    if (it == model.cims.end()) {
      errors.push_back("variable '" + v.name + "' has no intensity matrix set");
      continue;
    }
    const Cim& cim = it->second;
    if (cim.subject != v.name)
      errors.push_back("intensity set keyed '" + v.name + "' declares subject '" +
                       cim.subject + "'");
    std::vector<std::string> graph_parents = model.parents_of(v.name);
    std::vector<std::string> cim_parents = cim.parents;
    std::sort(cim_parents.begin(), cim_parents.end());
    std::vector<std::string> gp_sorted = graph_parents;
    std::sort(gp_sorted.begin(), gp_sorted.end());
    if (cim_parents != gp_sorted)
      errors.push_back("variable '" + v.name +
                       "': intensity parents do not match graph parents");

    long want = instantiation_count(model, cim.parents);
    if (want >= 0 && static_cast<long>(cim.matrices.size()) != want) {
      errors.push_back("variable '" + v.name + "': expected " + fmt(double(want)) +
                       " parent instantiations, got " +
                       fmt(double(cim.matrices.size())));
      continue;
    }
    int n = v.n_states();
    for (size_t u = 0; u < cim.matrices.size(); ++u) {
      const Matrix& q = cim.matrices[u];
      std::string where =
          "variable '" + v.name + "' | " + instantiation_label(model, cim.parents, u);
      if (q.rows() != n || q.cols() != n) {
        errors.push_back(where + ": matrix is " + fmt(double(q.rows())) + "x" +
                         fmt(double(q.cols())) + ", expected " + fmt(double(n)) + "x" +
                         fmt(double(n)));
        continue;
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
          if (i != j && q(i, j) < 0)
            errors.push_back(where + ": negative off-diagonal rate at row " +
                             v.states[i] + ", column " + v.states[j]);
        if (q(i, i) > tol)
          errors.push_back(where + ": positive diagonal at row " + v.states[i]);
        double rs = q.row(i).sum();
        if (std::abs(rs) > tol)
          errors.push_back(where + ": row " + v.states[i] + " sums to " + fmt(rs) +
                           ", expected 0");
      }
    }
  }

  // Initial network: edges legal and acyclic, normalized CPT per variable.
  for (const auto& [p, c] : model.initial.edges) {
    if (model.var_index(p) < 0)
      errors.push_back("initial edge (" + p + "," + c + ") references unknown variable '" +
                       p + "'");
    if (model.var_index(c) < 0)
      errors.push_back("initial edge (" + p + "," + c + ") references unknown variable '" +
                       c + "'");
    if (p == c) errors.push_back("initial self-loop on variable '" + p + "'");
  }
  {
    // Kahn's algorithm over declared variables.
    std::map<std::string, int> indeg;
    for (const auto& v : model.variables) indeg[v.name] = 0;
    bool edges_ok = true;
    for (const auto& [p, c] : model.initial.edges) {
      if (!indeg.count(p) || !indeg.count(c) || p == c) { edges_ok = false; continue; }
      ++indeg[c];
    }
    if (edges_ok) {
      std::vector<std::string> queue;
      for (const auto& [n, d] : indeg)
        if (d == 0) queue.push_back(n);
      size_t removed = 0;
      while (!queue.empty()) {
        std::string n = queue.back();
        queue.pop_back();
        ++removed;
        for (const auto& [p, c] : model.initial.edges)
          if (p == n && --indeg[c] == 0) queue.push_back(c);
      }
      if (removed != indeg.size()) errors.push_back("initial network contains a cycle");
    }
  }
  for (const auto& v : model.variables) {
    auto it = model.initial.cpts.find(v.name);
    if (it == model.initial.cpts.end()) {
      errors.push_back("variable '" + v.name + "' has no initial distribution");
      continue;
    }
    const InitialNetwork::Cpt& cpt = it->second;
    // CPT parents must match the initial network's edges.
    std::vector<std::string> net_parents;
    for (const auto& [p, c] : model.initial.edges)
      if (c == v.name) net_parents.push_back(p);
    std::sort(net_parents.begin(), net_parents.end());
    net_parents.erase(std::unique(net_parents.begin(), net_parents.end()),
                      net_parents.end());
    std::vector<std::string> cpt_parents = cpt.parents;
    std::sort(cpt_parents.begin(), cpt_parents.end());
    if (cpt_parents != net_parents)
      errors.push_back("variable '" + v.name +
                       "': initial table parents do not match initial edges");

    long want = instantiation_count(model, cpt.parents);
    if (want >= 0 && static_cast<long>(cpt.rows.size()) != want) {
      errors.push_back("variable '" + v.name + "': initial table expected " +
                       fmt(double(want)) + " rows, got " + fmt(double(cpt.rows.size())));
      continue;
    }
    for (size_t u = 0; u < cpt.rows.size(); ++u) {
      const Vector& row = cpt.rows[u];
      std::string where = "initial of '" + v.name + "' | " +
                          instantiation_label(model, cpt.parents, u);
      if (row.size() != v.n_states()) {
        errors.push_back(where + ": row length " + fmt(double(row.size())) +
                         ", expected " + fmt(double(v.n_states())));
        continue;
      }
      for (int i = 0; i < row.size(); ++i)
        if (row[i] < 0)
          errors.push_back(where + ": negative probability for state " + v.states[i]);
      double s = row.sum();
      if (std::abs(s - 1.0) > tol)
        errors.push_back(where + ": row sums to " + fmt(s) + ", expected 1");
    }
  }

  return errors;
}

const CtbnModel& validated(const CtbnModel& model) {
  std::vector<std::string> errors = validate_model(model);
  if (!errors.empty()) {
    std::string msg = "invalid model:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
  return model;
}

SegmentedEvidence partition_evidence(const CtbnModel& model,
                                     const EvidenceTimeline& ev) {
  const double t0 = ev.horizon_start, t1 = ev.horizon_end;
  if (!(t0 < t1)) throw ValidationError("evidence horizon is empty");
  auto in_horizon = [&](double t) { return t >= t0 && t <= t1; };
  auto state_of = [&](const std::string& var, const std::string& value) {
    int vi = model.var_index(var);
    if (vi < 0) throw ValidationError("evidence names unknown variable '" + var + "'");
    int s = model.variables[vi].state_index(value);
    if (s < 0)
      throw ValidationError("evidence names unknown state '" + value + "' of variable '" +
                            var + "'");
    return s;
  };

  std::set<double> cuts{t0, t1};
  for (const auto& ob : ev.intervals) {
    state_of(ob.var, ob.value);
    if (!(ob.from < ob.to))
      throw ValidationError("interval observation on '" + ob.var + "' has from >= to");
    if (!in_horizon(ob.from) || !in_horizon(ob.to))
      throw ValidationError("interval observation on '" + ob.var +
                            "' extends outside the horizon");
    cuts.insert(ob.from);
    cuts.insert(ob.to);
  }
  for (const auto& ob : ev.points) {
    state_of(ob.var, ob.value);
    if (!in_horizon(ob.t))
      throw ValidationError("point observation on '" + ob.var + "' outside the horizon");
    cuts.insert(ob.t);
  }
  for (const auto& ob : ev.transitions) {
    state_of(ob.var, ob.from_value);
    state_of(ob.var, ob.to_value);
    if (!in_horizon(ob.t))
      throw ValidationError("transition observation on '" + ob.var +
                            "' outside the horizon");
    cuts.insert(ob.t);
  }

  // Contradiction checks at single timestamps.
  for (size_t i = 0; i < ev.points.size(); ++i)
    for (size_t j = i + 1; j < ev.points.size(); ++j)
      if (ev.points[i].var == ev.points[j].var && ev.points[i].t == ev.points[j].t &&
          ev.points[i].value != ev.points[j].value)
        throw ValidationError("contradictory point observations on '" + ev.points[i].var +
                              "' at t=" + std::to_string(ev.points[i].t));
  for (size_t i = 0; i < ev.transitions.size(); ++i)
    for (size_t j = i + 1; j < ev.transitions.size(); ++j)
      if (ev.transitions[i].var == ev.transitions[j].var &&
          ev.transitions[i].t == ev.transitions[j].t &&
          (ev.transitions[i].from_value != ev.transitions[j].from_value ||
           ev.transitions[i].to_value != ev.transitions[j].to_value))
        throw ValidationError("contradictory transition observations on '" +
                              ev.transitions[i].var + "' at t=" +
                              std::to_string(ev.transitions[i].t));
  // A point observation binds the state at its own time (right limit), an
  // observed transition binds the left limit to its source and the right
  // limit to its target, and an interval binds every time in [from, to).
  // Cross-type observations at one instant must agree on the limit they share.
  for (const auto& p : ev.points)
    for (const auto& tr : ev.transitions)
      if (p.var == tr.var && p.t == tr.t && p.value != tr.to_value)
        throw ValidationError("point observation on '" + p.var + "' at t=" +
                              std::to_string(p.t) +
                              " contradicts the observed transition target");
  for (const auto& p : ev.points)
    for (const auto& iv : ev.intervals)
      if (p.var == iv.var && p.t >= iv.from && p.t < iv.to && p.value != iv.value)
        throw ValidationError("point observation on '" + p.var + "' at t=" +
                              std::to_string(p.t) +
                              " contradicts an interval observation covering it");
  for (const auto& tr : ev.transitions)
    for (const auto& iv : ev.intervals) {
      if (tr.var != iv.var) continue;
      if (tr.t > iv.from && tr.t < iv.to)
        throw ValidationError("observed transition on '" + tr.var +
                              "' falls inside an interval of constant evidence");
      if (tr.t == iv.from && tr.to_value != iv.value)
        throw ValidationError("observed transition on '" + tr.var +
                              "' contradicts the interval beginning at t=" +
                              std::to_string(tr.t));
      if (tr.t == iv.to && tr.from_value != iv.value)
        throw ValidationError("observed transition on '" + tr.var +
                              "' contradicts the interval ending at t=" +
                              std::to_string(tr.t));
    }

  std::vector<double> points(cuts.begin(), cuts.end());
  SegmentedEvidence out;
  for (size_t i = 0; i + 1 < points.size(); ++i) {
    Segment seg;
    seg.t_begin = points[i];
    seg.t_end = points[i + 1];
    // Cut points include every interval endpoint, so each segment lies fully
    // inside or fully outside each interval observation.
    for (const auto& ob : ev.intervals) {
      if (!(ob.from <= seg.t_begin && seg.t_end <= ob.to)) continue;
      int s = state_of(ob.var, ob.value);
      auto it = seg.active.find(ob.var);
      if (it != seg.active.end() && it->second != s)
        throw ValidationError("overlapping interval observations on '" + ob.var +
                              "' disagree in value");
      seg.active[ob.var] = s;
    }
    for (const auto& ob : ev.points)
      if (ob.t == seg.t_end) seg.boundary_points.push_back(ob);
    for (const auto& ob : ev.transitions)
      if (ob.t == seg.t_end) seg.boundary_transitions.push_back(ob);
    out.segments.push_back(seg);
  }

  // A variable whose observed value differs between the left and right limit
  // of a boundary jumped at exactly that instant. When no explicit transition
  // records the jump, synthesize one so the filters relabel instead of
  // annihilating the conditioned mass.
  for (size_t i = 0; i < out.segments.size(); ++i) {
    Segment& seg = out.segments[i];
    const Segment* next =
        i + 1 < out.segments.size() ? &out.segments[i + 1] : nullptr;
    for (const auto& [var, a] : seg.active) {
      int b = -1;  // right-limit value at seg.t_end, if bound
      if (next) {
        auto it = next->active.find(var);
        if (it != next->active.end()) b = it->second;
      }
      for (const auto& ob : seg.boundary_points)
        if (ob.var == var) b = state_of(ob.var, ob.value);
      bool has_explicit = false;
      for (const auto& ob : seg.boundary_transitions)
        if (ob.var == var) has_explicit = true;
      if (has_explicit || b < 0 || b == a) continue;
      const Variable& v = model.variables[model.var_index(var)];
      seg.boundary_transitions.push_back(
          TransitionOb{var, v.states[a], v.states[b], seg.t_end});
    }
  }

  for (const auto& ob : ev.points)
    if (ob.t == t0) out.at_start_points.push_back(ob);
  for (const auto& ob : ev.transitions)
    if (ob.t == t0) out.at_start_transitions.push_back(ob);
  return out;
}

PointDistribution initial_joint(const CtbnModel& model, const Scope& scope) {
  Scope full = model.full_scope();
  std::vector<int> pos = full.positions_of(scope);

  PointDistribution out;
  out.scope = scope;
  out.retained = full_retained(scope);
  out.p = Vector::Zero(scope.n_joint());

  long n = full.n_joint();
  for (long idx = 0; idx < n; ++idx) {
    double prob = 1.0;
    for (int v = 0; v < full.size() && prob > 0; ++v) {
      const std::string& name = full[v].name;
      const InitialNetwork::Cpt& cpt = model.initial.cpts.at(name);
      long u = 0, s = 1;
      for (const auto& pname : cpt.parents) {
        int ppos = full.find(pname);
        u += full.digit(idx, ppos) * s;
        s *= full[ppos].n_states;
      }
      prob *= cpt.rows[u][full.digit(idx, v)];
    }
    if (prob > 0) out.p[full.project(idx, pos, scope)] += prob;
  }
  return out;
}

IntensityFactor cim_factor(const CtbnModel& model, const std::string& var) {
  int vi = model.var_index(var);
  if (vi < 0) throw ValidationError("unknown variable '" + var + "'");
  const Cim& cim = model.cims.at(var);
  Scope fam = model.family_scope(var);
  Scope parent_scope = model.scope_of(cim.parents);

  IntensityFactor out = zero_factor(fam, full_retained(fam));
  int self = fam.find(var);
  std::vector<int> ppos = fam.positions_of(parent_scope);

  long n = fam.n_joint();
  for (long i = 0; i < n; ++i) {
    long u = fam.project(i, ppos, parent_scope);
    const Matrix& q = cim.matrices[u];
    int xi = fam.digit(i, self);
    long rest = fam.complement_key(i, {self});
    for (long j = 0; j < n; ++j) {
      if (fam.complement_key(j, {self}) != rest) continue;
      out.m(i, j) = q(xi, fam.digit(j, self));
    }
  }
  return out;
}

}  // namespace ctbn
