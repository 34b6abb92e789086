#include "ctbn/suffstats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ctbn/ode.hpp"

namespace ctbn {

namespace {

// Merge the accepted-step grids of two solutions over the same interval.
std::vector<double> union_grid(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> g;
  g.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(g));
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

}  // namespace

SuffStats expected_suff_stats(const IntensityFactor& f, const PointDistribution& p0,
                              double t1, double t2) {
  if (!(t2 > t1)) throw ValidationError("expected_suff_stats: empty interval");
  if (p0.p.size() != f.dim())
    throw ValidationError("expected_suff_stats: distribution/factor dimension mismatch");

  // Reduced generators leak probability; route the leak through an explicit
  // absorbing state so transition counts into it are observable.
  int n_states = f.dim();
  bool leaky = false;
  for (int i = 0; i < n_states; ++i)
    if (f.m.row(i).sum() < -tols().validation) leaky = true;
  IntensityFactor g = leaky ? augment_absorbing(f) : f;
  int n = g.dim();  // n_states (+1 when augmented)

  Vector a0 = Vector::Zero(n);
  a0.head(n_states) = p0.p;

  double q_max = 0;
  for (int i = 0; i < n; ++i) q_max = std::max(q_max, std::abs(g.m(i, i)));
  double span = t2 - t1;
  double h0 = (q_max > 0) ? 0.1 / q_max : span;

  const Matrix& q = g.m;
  auto forward = [&](const Vector& y) { return Vector((y.transpose() * q).transpose()); };
  auto backward = [&](const Vector& y) { return Vector(q * y); };

  // alpha(t) = p0 exp(Q (t - t1)), solved forward on [0, span].
  OdeSolution alpha = solve_adaptive_rk4(forward, a0, 0.0, span, h0, tols().ode_rtol);
  // beta(t) = exp(Q (t2 - t)) 1, solved as g(s) = beta(t2 - s) forward in s.
  OdeSolution beta_rev =
      solve_adaptive_rk4(backward, Vector::Ones(n), 0.0, span, h0, tols().ode_rtol);

  // Map the backward grid onto forward time: t_offset = span - s.
  std::vector<double> beta_grid(beta_rev.t.size());
  for (size_t i = 0; i < beta_rev.t.size(); ++i)
    beta_grid[i] = span - beta_rev.t[beta_rev.t.size() - 1 - i];
  std::vector<double> grid = union_grid(alpha.t, beta_grid);

  auto beta_at = [&](double t) { return beta_rev.eval(span - t); };

  // G[j,k] = integral alpha_j(t) beta_k(t) dt by Simpson's rule per cell, with
  // midpoints from the solvers' cubic Hermite dense output.
  Matrix G = Matrix::Zero(n, n);
  Vector a_lo = alpha.eval(grid.front());
  Vector b_lo = beta_at(grid.front());
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    double h = grid[i + 1] - grid[i];
    if (h <= 0) continue;
    double tm = grid[i] + h / 2;
    Vector a_mid = alpha.eval(tm), b_mid = beta_at(tm);
    Vector a_hi = alpha.eval(grid[i + 1]), b_hi = beta_at(grid[i + 1]);
    G += (h / 6.0) *
         (a_lo * b_lo.transpose() + 4.0 * (a_mid * b_mid.transpose()) +
          a_hi * b_hi.transpose());
    a_lo = std::move(a_hi);
    b_lo = std::move(b_hi);
  }

  SuffStats s;
  s.scope = f.scope;
  s.retained = f.retained;
  s.interval_length = span;
  s.raw_time = G.diagonal().head(n_states);
  s.raw_transitions = Matrix::Zero(n_states, n_states);
  for (int j = 0; j < n_states; ++j)
    for (int k = 0; k < n_states; ++k)
      if (j != k) s.raw_transitions(j, k) = q(j, k) * G(j, k);
  s.raw_exit = Vector::Zero(n_states);
  if (leaky)
    for (int j = 0; j < n_states; ++j) s.raw_exit[j] = q(j, n_states) * G(j, n_states);

  double total_time = s.raw_time.sum();
  if (total_time < tols().underflow)
    throw ImpossibleEvidenceError(
        "expected_suff_stats: no occupancy mass survives the interval");
  s.normalizer = span / total_time;
  s.expected_time = s.normalizer * s.raw_time;
  s.expected_transitions = s.normalizer * s.raw_transitions;
  s.expected_exit = s.normalizer * s.raw_exit;
  s.survival = alpha.y.back().head(n_states).sum();
  return s;
}

SuffStats aggregate_stats(const SuffStats& s, const Scope& target) {
  if (target.empty()) throw ValidationError("aggregate_stats: empty target scope");
  std::vector<int> pos = s.scope.positions_of(target);

  // Group each retained joint state by its projection onto the target.
  int n = s.dim();
  std::vector<long> proj(n);
  std::set<long> seen;
  for (int j = 0; j < n; ++j) {
    proj[j] = s.scope.project(s.retained[j], pos, target);
    seen.insert(proj[j]);
  }
  std::vector<long> retained(seen.begin(), seen.end());
  std::vector<int> group(target.n_joint(), -1);
  for (size_t i = 0; i < retained.size(); ++i) group[retained[i]] = static_cast<int>(i);

  SuffStats out;
  out.scope = target;
  out.retained = retained;
  out.interval_length = s.interval_length;
  out.normalizer = s.normalizer;
  out.survival = s.survival;
  int m = static_cast<int>(retained.size());
  out.expected_time = Vector::Zero(m);
  out.expected_transitions = Matrix::Zero(m, m);
  out.expected_exit = Vector::Zero(m);
  out.raw_time = Vector::Zero(m);
  out.raw_transitions = Matrix::Zero(m, m);
  out.raw_exit = Vector::Zero(m);

  for (int j = 0; j < n; ++j) {
    int gj = group[proj[j]];
    out.expected_time[gj] += s.expected_time[j];
    out.raw_time[gj] += s.raw_time[j];
    out.expected_exit[gj] += s.expected_exit[j];
    out.raw_exit[gj] += s.raw_exit[j];
    for (int k = 0; k < n; ++k) {
      int gk = group[proj[k]];
      if (gj == gk) continue;  // transitions internal to a group vanish
      out.expected_transitions(gj, gk) += s.expected_transitions(j, k);
      out.raw_transitions(gj, gk) += s.raw_transitions(j, k);
    }
  }
  return out;
}

IntensityFactor moment_match(const SuffStats& s) {
  int n = s.dim();
  IntensityFactor out;
  out.scope = s.scope;
  out.retained = s.retained;
  out.m = Matrix::Zero(n, n);
  for (int v = 0; v < n; ++v) {
    double m_total = s.expected_transitions.row(v).sum() + s.expected_exit[v];
    if (s.expected_time[v] <= 0) {
      if (m_total > tols().validation)
        throw ValidationError(
            "moment_match: state with zero occupancy but outgoing transitions");
      continue;  // unvisited state keeps a zero row
    }
    double rate = 1.0 / s.expected_time[v];
    for (int w = 0; w < n; ++w)
      if (w != v) out.m(v, w) = s.expected_transitions(v, w) * rate;
    out.m(v, v) = -m_total * rate;
  }
  return out;
}

IntensityFactor approx_marginalize(const IntensityFactor& f, const PointDistribution& p0,
                                   double t1, double t2, const Scope& target) {
  return moment_match(aggregate_stats(expected_suff_stats(f, p0, t1, t2), target));
}

}  // namespace ctbn
