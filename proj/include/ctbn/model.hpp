#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctbn/intensity.hpp"
#include "ctbn/scope.hpp"
#include "ctbn/types.hpp"

namespace ctbn {

struct Variable {
  std::string name;
  std::vector<std::string> states;

  int n_states() const { return static_cast<int>(states.size()); }
  int state_index(const std::string& s) const {
    for (int i = 0; i < n_states(); ++i)
      if (states[i] == s) return i;
    return -1;
  }
};

// Conditional intensity matrix of one variable: a square rate matrix per full
// parent instantiation. Parent instantiations are indexed over the parent
// scope (first parent varies fastest), matching joint-state indexing.
struct Cim {
  std::string subject;
  std::vector<std::string> parents;  // in declaration order
  std::vector<Matrix> matrices;      // one per parent instantiation
};

// Initial distribution, factored as a Bayesian network over the variables.
struct InitialNetwork {
  struct Cpt {
    std::vector<std::string> parents;  // in declaration order
    std::vector<Vector> rows;          // one row per parent instantiation
  };
  std::vector<std::pair<std::string, std::string>> edges;  // (parent, child)
  std::map<std::string, Cpt> cpts;
};

struct CtbnModel {
  std::vector<Variable> variables;
  std::vector<std::pair<std::string, std::string>> edges;  // (parent, child)
  std::map<std::string, Cim> cims;
  InitialNetwork initial;

  int var_index(const std::string& name) const {
    for (size_t i = 0; i < variables.size(); ++i)
      if (variables[i].name == name) return static_cast<int>(i);
    return -1;
  }

  // Graph parents of a variable, sorted by declaration order.
  std::vector<std::string> parents_of(const std::string& name) const;

  ScopeVar scope_var(int var) const {
    return ScopeVar{variables[var].name, variables[var].n_states(),
                    var};
  }
  ScopeVar scope_var(const std::string& name) const { return scope_var(var_index(name)); }

  // Scope over the given variable names (ordered by declaration).
  Scope scope_of(const std::vector<std::string>& names) const;
  // Scope over {X} and X's graph parents.
  Scope family_scope(const std::string& name) const;
  Scope full_scope() const;
};

struct Trajectory {
  struct Transition {
    double t;
    std::string var;
    std::string to;
  };
  double start_time = 0;
  double end_time = 0;
  std::map<std::string, std::string> initial_state;
  std::vector<Transition> transitions;  // strictly increasing times
};

struct IntervalOb {
  std::string var;
  std::string value;
  double from = 0, to = 0;  // half-open [from, to)
};
struct PointOb {
  std::string var;
  std::string value;
  double t = 0;
};
struct TransitionOb {
  std::string var;
  std::string from_value, to_value;
  double t = 0;
};

struct EvidenceTimeline {
  double horizon_start = 0, horizon_end = 0;
  std::vector<IntervalOb> intervals;
  std::vector<PointOb> points;
  std::vector<TransitionOb> transitions;
};

// One maximal interval of constant continuous evidence. Point and transition
// observations attach to the segment that ends at their timestamp.
struct Segment {
  double t_begin = 0, t_end = 0;  // half-open [t_begin, t_end)
  std::map<std::string, int> active;  // variable name -> observed state index
  std::vector<PointOb> boundary_points;            // at t_end
  std::vector<TransitionOb> boundary_transitions;  // at t_end

  double length() const { return t_end - t_begin; }
};

// Partitioned evidence. Point observations at the horizon start have no
// segment ending there; they apply to the initial distribution directly.
struct SegmentedEvidence {
  std::vector<PointOb> at_start_points;
  std::vector<TransitionOb> at_start_transitions;
  std::vector<Segment> segments;
};

// Checks every model invariant and returns all violations found (empty means
// the model is valid).
std::vector<std::string> validate_model(const CtbnModel& model);

// Throwing wrapper around validate_model.
const CtbnModel& validated(const CtbnModel& model);

// Split evidence at its distinguished time points into segments of constant
// continuous evidence. Throws ValidationError on contradictory evidence or
// on observations naming unknown variables/states.
SegmentedEvidence partition_evidence(const CtbnModel& model,
                                     const EvidenceTimeline& ev);

// Exact marginal of the initial network onto `scope`, by full enumeration.
PointDistribution initial_joint(const CtbnModel& model, const Scope& scope);

// The CIM of one variable expressed as an intensity factor over its family
// scope: entry ((x,u),(x',u)) = Q_{X|u}(x,x'), zero across parent changes.
IntensityFactor cim_factor(const CtbnModel& model, const std::string& var);

}  // namespace ctbn
