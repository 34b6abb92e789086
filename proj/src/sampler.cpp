#include "ctbn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ctbn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform draw on [0,1) from the generator's raw bits: 53-bit mantissa, the
// same value stream on every platform.
double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& gen, double rate) {
  if (rate <= 0) return kInf;
  return -std::log1p(-uniform01(gen)) / rate;
}

int pick_category(std::mt19937_64& gen, const Vector& weights) {
  double total = weights.sum();
  double u = uniform01(gen) * total;
  double acc = 0;
  for (int i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return static_cast<int>(weights.size()) - 1;
}

long parent_instantiation(const CtbnModel& model, const std::vector<std::string>& parents,
                          const std::vector<int>& state) {
  long u = 0, s = 1;
  for (const auto& pname : parents) {
    int pi = model.var_index(pname);
    u += state[pi] * s;
    s *= model.variables[pi].n_states();
  }
  return u;
}

// Topological order of the initial network, lowest declaration index first
// among the ready variables, so the draw sequence is deterministic.
std::vector<int> initial_sampling_order(const CtbnModel& model) {
  int n = static_cast<int>(model.variables.size());
  std::vector<int> indeg(n, 0);
  for (const auto& [p, c] : model.initial.edges) ++indeg[model.var_index(c)];
  std::vector<int> order;
  std::vector<bool> done(n, false);
  for (int round = 0; round < n; ++round) {
    int pick = -1;
    for (int v = 0; v < n; ++v)
      if (!done[v] && indeg[v] == 0) { pick = v; break; }
    if (pick < 0) throw ValidationError("initial network contains a cycle");
    done[pick] = true;
    order.push_back(pick);
    for (const auto& [p, c] : model.initial.edges)
      if (model.var_index(p) == pick) --indeg[model.var_index(c)];
  }
  return order;
}

// Scope-projected joint state of the full assignment `state`.
long project_state(const Scope& scope, const CtbnModel& model,
                   const std::vector<int>& state) {
  long idx = 0, s = 1;
  for (int i = 0; i < scope.size(); ++i) {
    idx += state[model.var_index(scope[i].name)] * s;
    s *= scope[i].n_states;
  }
  return idx;
}

// Raw statistics of one trajectory over [t1, t2), optionally conditioned on
// interval evidence (truncating at the first violation).
struct WalkResult {
  bool kept = true;       // initial state satisfies the condition
  bool truncated = false; // left the conditioned set inside the window
  Vector time;
  Matrix transitions;
  Vector exits;
};

WalkResult walk_trajectory(const Trajectory& traj, const CtbnModel& model,
                           const Scope& scope, double t1, double t2,
                           const std::map<std::string, int>* condition) {
  int dim = static_cast<int>(scope.n_joint());
  WalkResult res;
  res.time = Vector::Zero(dim);
  res.transitions = Matrix::Zero(dim, dim);
  res.exits = Vector::Zero(dim);

  std::vector<int> state(model.variables.size());
  for (size_t v = 0; v < model.variables.size(); ++v) {
    const auto& name = model.variables[v].name;
    state[v] = model.variables[v].state_index(traj.initial_state.at(name));
  }

  auto violates = [&]() {
    if (!condition) return false;
    for (const auto& [name, value] : *condition)
      if (state[model.var_index(name)] != value) return true;
    return false;
  };

  size_t next = 0;
  // Fast-forward events at or before the window start; the state at t1 is the
  // right limit.
  while (next < traj.transitions.size() && traj.transitions[next].t <= t1) {
    const auto& tr = traj.transitions[next++];
    int vi = model.var_index(tr.var);
    state[vi] = model.variables[vi].state_index(tr.to);
  }
  if (violates()) {
    res.kept = false;
    return res;
  }

  double t_prev = t1;
  long cur = project_state(scope, model, state);
  while (t_prev < t2) {
    double t_now = next < traj.transitions.size() ? traj.transitions[next].t : kInf;
    if (t_now >= t2) {
      res.time[cur] += t2 - t_prev;
      break;
    }
    res.time[cur] += t_now - t_prev;
    const auto& tr = traj.transitions[next++];
    int vi = model.var_index(tr.var);
    state[vi] = model.variables[vi].state_index(tr.to);
    if (violates()) {
      res.exits[cur] += 1;
      res.truncated = true;
      return res;
    }
    long to = project_state(scope, model, state);
    if (to != cur) res.transitions(cur, to) += 1;
    cur = to;
    t_prev = t_now;
  }
  return res;
}

EnsembleStats accumulate(const std::vector<Trajectory>& trajectories,
                         const CtbnModel& model, const Scope& scope, double t1, double t2,
                         const std::map<std::string, int>* condition) {
  if (trajectories.empty())
    throw ValidationError("empirical statistics need at least one trajectory");
  if (!(t2 > t1)) throw ValidationError("empirical statistics need a non-empty window");

  int dim = static_cast<int>(scope.n_joint());
  EnsembleStats out;
  out.scope = scope;
  out.retained = full_retained(scope);
  Vector t_sum = Vector::Zero(dim), t_sq = Vector::Zero(dim);
  Matrix m_sum = Matrix::Zero(dim, dim), m_sq = Matrix::Zero(dim, dim);
  Vector e_sum = Vector::Zero(dim), e_sq = Vector::Zero(dim);

  for (const auto& traj : trajectories) {
    WalkResult res = walk_trajectory(traj, model, scope, t1, t2, condition);
    if (!res.kept) continue;
    ++out.n;
    t_sum += res.time;
    t_sq += res.time.cwiseProduct(res.time);
    m_sum += res.transitions;
    m_sq += res.transitions.cwiseProduct(res.transitions);
    e_sum += res.exits;
    e_sq += res.exits.cwiseProduct(res.exits);
  }
  if (out.n == 0)
    throw ImpossibleEvidenceError("no trajectory satisfies the condition at the window "
                                  "start");

  double n = static_cast<double>(out.n);
  auto se = [n](double sum, double sq) {
    if (n < 2) return 0.0;
    double var = std::max(0.0, (sq - sum * sum / n) / (n - 1));
    return std::sqrt(var / n);
  };
  out.time_mean = t_sum / n;
  out.trans_mean = m_sum / n;
  out.exit_mean = e_sum / n;
  out.time_se = Vector::Zero(dim);
  out.exit_se = Vector::Zero(dim);
  out.trans_se = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    out.time_se[i] = se(t_sum[i], t_sq[i]);
    out.exit_se[i] = se(e_sum[i], e_sq[i]);
    for (int j = 0; j < dim; ++j) out.trans_se(i, j) = se(m_sum(i, j), m_sq(i, j));
  }
  double total_time = out.time_mean.sum();
  out.normalizer = total_time > 0 ? (t2 - t1) / total_time : 1.0;
  return out;
}

}  // namespace

Trajectory sample_trajectory(const CtbnModel& model, double t_end, std::uint64_t seed) {
  if (!(t_end > 0)) throw ValidationError("sample_trajectory needs t_end > 0");
  std::mt19937_64 gen(seed);
  int n = static_cast<int>(model.variables.size());

  Trajectory traj;
  traj.start_time = 0;
  traj.end_time = t_end;

  std::vector<int> state(n);
  for (int v : initial_sampling_order(model)) {
    const auto& cpt = model.initial.cpts.at(model.variables[v].name);
    long u = parent_instantiation(model, cpt.parents, state);
    state[v] = pick_category(gen, cpt.rows[u]);
    traj.initial_state[model.variables[v].name] = model.variables[v].states[state[v]];
  }

  // Children to refresh when a variable fires.
  std::vector<std::vector<int>> children(n);
  for (const auto& [p, c] : model.edges)
    children[model.var_index(p)].push_back(model.var_index(c));
  for (auto& ch : children) {
    std::sort(ch.begin(), ch.end());
    ch.erase(std::unique(ch.begin(), ch.end()), ch.end());
  }

  auto rate_row = [&](int v) -> const Matrix& {
    const Cim& cim = model.cims.at(model.variables[v].name);
    return cim.matrices[parent_instantiation(model, cim.parents, state)];
  };

  double t = 0;
  std::vector<double> clock(n);
  for (int v = 0; v < n; ++v)
    clock[v] = t + exponential(gen, -rate_row(v)(state[v], state[v]));

  while (true) {
    int firing = -1;
    for (int v = 0; v < n; ++v)
      if (firing < 0 || clock[v] < clock[firing]) firing = v;
    if (firing < 0 || clock[firing] > t_end) break;
    t = clock[firing];

    const Matrix& q = rate_row(firing);
    Vector weights = q.row(state[firing]).transpose().cwiseMax(0.0);
    weights[state[firing]] = 0;
    int to = pick_category(gen, weights);
    state[firing] = to;
    traj.transitions.push_back(
        Trajectory::Transition{t, model.variables[firing].name,
                               model.variables[firing].states[to]});

    // Fresh clocks for the firing variable and its children, in declaration
    // order for a deterministic draw sequence.
    std::vector<int> refresh{firing};
    refresh.insert(refresh.end(), children[firing].begin(), children[firing].end());
    std::sort(refresh.begin(), refresh.end());
    refresh.erase(std::unique(refresh.begin(), refresh.end()), refresh.end());
    for (int v : refresh) clock[v] = t + exponential(gen, -rate_row(v)(state[v], state[v]));
  }
  return traj;
}

SuffStats empirical_suff_stats(const std::vector<Trajectory>& trajectories,
                               const CtbnModel& model, const Scope& scope,
                               double t1, double t2) {
  EnsembleStats ens = accumulate(trajectories, model, scope, t1, t2, nullptr);
  SuffStats s;
  s.scope = scope;
  s.retained = ens.retained;
  s.interval_length = t2 - t1;
  s.raw_time = ens.time_mean;
  s.raw_transitions = ens.trans_mean;
  s.raw_exit = ens.exit_mean;
  s.normalizer = ens.normalizer;
  s.expected_time = s.normalizer * s.raw_time;
  s.expected_transitions = s.normalizer * s.raw_transitions;
  s.expected_exit = s.normalizer * s.raw_exit;
  s.survival = 1.0;
  return s;
}

EnsembleStats empirical_ensemble_stats(const std::vector<Trajectory>& trajectories,
                                       const CtbnModel& model, const Scope& scope,
                                       double t1, double t2) {
  return accumulate(trajectories, model, scope, t1, t2, nullptr);
}

EnsembleStats empirical_conditioned_stats(const std::vector<Trajectory>& trajectories,
                                          const CtbnModel& model, const Scope& scope,
                                          double t1, double t2,
                                          const std::map<std::string, int>& condition) {
  return accumulate(trajectories, model, scope, t1, t2, &condition);
}

}  // namespace ctbn
