#include "ctbn/intensity.hpp"

#include <algorithm>
#include <cmath>

namespace ctbn {

namespace {

// Position of each full-space joint index inside `retained`, or -1.
std::vector<int> retained_positions(long n_full, const std::vector<long>& retained) {
  std::vector<int> pos(n_full, -1);
  for (size_t i = 0; i < retained.size(); ++i) pos[retained[i]] = static_cast<int>(i);
  return pos;
}

void check_not_absorbing(const IntensityFactor& f, const char* op) {
  if (f.absorbing)
    throw ValidationError(std::string(op) + ": absorbing-augmented factors are terminal");
}

}  // namespace

std::vector<long> full_retained(const Scope& scope) {
  std::vector<long> r(scope.n_joint());
  for (long i = 0; i < static_cast<long>(r.size()); ++i) r[i] = i;
  return r;
}

std::vector<long> retained_consistent(const Scope& scope,
                                      const std::map<std::string, int>& ev) {
  std::vector<std::pair<int, int>> checks;  // (position, required state)
  for (const auto& [name, value] : ev) {
    int pos = scope.find(name);
    if (pos >= 0) checks.emplace_back(pos, value);
  }
  std::vector<long> out;
  for (long i = 0; i < scope.n_joint(); ++i) {
    bool ok = true;
    for (const auto& [pos, value] : checks)
      if (scope.digit(i, pos) != value) { ok = false; break; }
    if (ok) out.push_back(i);
  }
  return out;
}

IntensityFactor zero_factor(const Scope& scope, std::vector<long> retained) {
  IntensityFactor f;
  f.scope = scope;
  int n = static_cast<int>(retained.size());
  f.retained = std::move(retained);
  f.m = Matrix::Zero(n, n);
  return f;
}

IntensityFactor embed(const IntensityFactor& f, const Scope& target,
                      const std::vector<long>& target_retained) {
  check_not_absorbing(f, "embed");
  if (!f.scope.is_subset_of(target))
    throw ValidationError("embed: factor scope " + f.scope.to_string() +
                          " is not a subset of " + target.to_string());

  std::vector<int> pos = target.positions_of(f.scope);
  std::vector<int> fpos = retained_positions(f.scope.n_joint(), f.retained);

  int n = static_cast<int>(target_retained.size());
  IntensityFactor out;
  out.scope = target;
  out.retained = target_retained;
  out.m = Matrix::Zero(n, n);

  // Cache each target state's projection onto f and its complement key.
  std::vector<int> proj(n);
  std::vector<long> rest(n);
  for (int i = 0; i < n; ++i) {
    long full = target_retained[i];
    long p = target.project(full, pos, f.scope);
    proj[i] = fpos[p];
    if (proj[i] < 0)
      throw ValidationError("embed: target retains a state outside the factor's "
                            "retained set");
    rest[i] = target.complement_key(full, pos);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (rest[i] == rest[j]) out.m(i, j) = f.m(proj[i], proj[j]);
  return out;
}

IntensityFactor amalgamate(const IntensityFactor& f1, const IntensityFactor& f2) {
  check_not_absorbing(f1, "amalgamate");
  check_not_absorbing(f2, "amalgamate");
  Scope target = Scope::merge(f1.scope, f2.scope);

  std::vector<int> pos1 = target.positions_of(f1.scope);
  std::vector<int> pos2 = target.positions_of(f2.scope);
  std::vector<int> r1 = retained_positions(f1.scope.n_joint(), f1.retained);
  std::vector<int> r2 = retained_positions(f2.scope.n_joint(), f2.retained);

  std::vector<long> retained;
  for (long i = 0; i < target.n_joint(); ++i) {
    if (r1[target.project(i, pos1, f1.scope)] < 0) continue;
    if (r2[target.project(i, pos2, f2.scope)] < 0) continue;
    retained.push_back(i);
  }
  if (retained.empty())
    throw ValidationError("amalgamate: factors retain no common state "
                          "(contradictory evidence)");

  IntensityFactor out = embed(f1, target, retained);
  out.m += embed(f2, target, retained).m;
  return out;
}

IntensityFactor divide(const IntensityFactor& f1, const IntensityFactor& f2) {
  check_not_absorbing(f1, "divide");
  check_not_absorbing(f2, "divide");
  if (!f2.scope.is_subset_of(f1.scope))
    throw ValidationError("divide: divisor scope " + f2.scope.to_string() +
                          " is not a subset of " + f1.scope.to_string());
  IntensityFactor out = f1;
  out.m -= embed(f2, f1.scope, f1.retained).m;
  return out;
}

IntensityFactor reduce(const IntensityFactor& f, const std::map<std::string, int>& ev) {
  check_not_absorbing(f, "reduce");
  for (const auto& [name, value] : ev) {
    int pos = f.scope.find(name);
    if (pos < 0)
      throw ValidationError("reduce: evidence variable '" + name +
                            "' is outside the factor scope");
    if (value < 0 || value >= f.scope[pos].n_states)
      throw ValidationError("reduce: evidence state out of range for '" + name + "'");
  }
  std::vector<int> keep;  // positions inside f.retained
  std::vector<long> retained;
  for (size_t i = 0; i < f.retained.size(); ++i) {
    bool ok = true;
    for (const auto& [name, value] : ev)
      if (f.scope.digit(f.retained[i], f.scope.find(name)) != value) { ok = false; break; }
    if (ok) {
      keep.push_back(static_cast<int>(i));
      retained.push_back(f.retained[i]);
    }
  }
  if (retained.empty())
    throw ValidationError("reduce: evidence eliminates every state");

  IntensityFactor out;
  out.scope = f.scope;
  out.retained = std::move(retained);
  int n = static_cast<int>(keep.size());
  out.m.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.m(i, j) = f.m(keep[i], keep[j]);
  return out;
}

IntensityFactor augment_absorbing(const IntensityFactor& f) {
  check_not_absorbing(f, "augment_absorbing");
  int n = f.dim();
  IntensityFactor out;
  out.scope = f.scope;
  out.retained = f.retained;
  out.absorbing = true;
  out.m = Matrix::Zero(n + 1, n + 1);
  out.m.topLeftCorner(n, n) = f.m;
  for (int i = 0; i < n; ++i) out.m(i, n) = -f.m.row(i).sum();
  return out;
}

Matrix matrix_exponential(const Matrix& q, double t) {
  if (t < 0) throw ValidationError("matrix_exponential: negative duration");
  int n = static_cast<int>(q.rows());
  Matrix a = q * t;

  // Scale until the norm is at most 1/2, run the series, square back up.
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    a /= std::pow(2.0, squarings);
  }

  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 60; ++k) {
    term = (term * a) / k;
    sum += term;
    double rel = term.cwiseAbs().maxCoeff() /
                 std::max(sum.cwiseAbs().maxCoeff(), 1e-300);
    if (rel < tols().expm_rtol) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

Matrix matrix_exponential(const IntensityFactor& f, double t) {
  return matrix_exponential(f.m, t);
}

PointDistribution propagate(const PointDistribution& p0, const IntensityFactor& f,
                            double t) {
  if (p0.p.size() != f.dim())
    throw ValidationError("propagate: distribution/factor dimension mismatch");
  PointDistribution out;
  out.scope = f.scope;
  out.retained = f.retained;
  out.p = (p0.p.transpose() * matrix_exponential(f.m, t)).transpose();
  return out;
}

PointDistribution restrict_to(const PointDistribution& d,
                              const std::vector<long>& retained, bool renormalize) {
  std::vector<int> pos = retained_positions(d.scope.n_joint(), d.retained);
  PointDistribution out;
  out.scope = d.scope;
  out.retained = retained;
  out.p = Vector::Zero(retained.size());
  for (size_t i = 0; i < retained.size(); ++i) {
    int p = pos[retained[i]];
    if (p >= 0) out.p[i] = d.p[p];
  }
  if (renormalize) {
    double mass = out.p.sum();
    if (mass < tols().underflow)
      throw ImpossibleEvidenceError("distribution has no mass on the retained states");
    out.p /= mass;
  }
  return out;
}

PointDistribution scatter_full(const PointDistribution& d) {
  PointDistribution out;
  out.scope = d.scope;
  out.retained = full_retained(d.scope);
  out.p = Vector::Zero(d.scope.n_joint());
  for (size_t i = 0; i < d.retained.size(); ++i) out.p[d.retained[i]] = d.p[i];
  return out;
}

PointDistribution marginalize(const PointDistribution& d, const Scope& target) {
  std::vector<int> pos = d.scope.positions_of(target);
  PointDistribution out;
  out.scope = target;
  out.retained = full_retained(target);
  out.p = Vector::Zero(target.n_joint());
  for (size_t i = 0; i < d.retained.size(); ++i)
    out.p[d.scope.project(d.retained[i], pos, target)] += d.p[i];
  return out;
}

PointDistribution normalized(const PointDistribution& d) {
  double mass = d.p.sum();
  if (mass < tols().underflow)
    throw ImpossibleEvidenceError("cannot normalize a zero-mass distribution");
  PointDistribution out = d;
  out.p /= mass;
  return out;
}

}  // namespace ctbn
