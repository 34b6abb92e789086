#pragma once

#include <map>
#include <string>
#include <vector>

#include "ctbn/scope.hpp"
#include "ctbn/types.hpp"

namespace ctbn {

// A dense rate-matrix factor over the retained joint states of an ordered
// variable scope. Unreduced factors keep every joint state and have zero row
// sums; evidence reduction drops inconsistent states and leaves the exit
// intensity as a negative row-sum deficit. When `absorbing` is set the matrix
// carries one extra trailing state collecting that deficit.
struct IntensityFactor {
  Scope scope;
  std::vector<long> retained;  // strictly increasing joint-state indices
  Matrix m;
  bool absorbing = false;

  int dim() const { return static_cast<int>(m.rows()); }
  bool is_full() const {
    return !absorbing && static_cast<long>(retained.size()) == scope.n_joint();
  }
};

// A (possibly unnormalized) probability vector over retained joint states.
struct PointDistribution {
  Scope scope;
  std::vector<long> retained;
  Vector p;

  double mass() const { return p.sum(); }
};

std::vector<long> full_retained(const Scope& scope);

// Joint states of `scope` consistent with the evidence map (name -> state).
std::vector<long> retained_consistent(const Scope& scope,
                                      const std::map<std::string, int>& ev);

IntensityFactor zero_factor(const Scope& scope, std::vector<long> retained);

// Spread `f` over a larger scope: entries copy onto state pairs that project
// onto f's scope and agree on every other variable; all else is zero.
IntensityFactor embed(const IntensityFactor& f, const Scope& target,
                      const std::vector<long>& target_retained);

// Factor product: embed both into the union scope (intersecting retained
// sets) and add entrywise.
IntensityFactor amalgamate(const IntensityFactor& f1, const IntensityFactor& f2);

// Factor division: subtract f2 (embedded into f1's space) from f1.
IntensityFactor divide(const IntensityFactor& f1, const IntensityFactor& f2);

// Drop rows/columns of states inconsistent with the evidence.
IntensityFactor reduce(const IntensityFactor& f,
                       const std::map<std::string, int>& ev);

// Append an absorbing state whose incoming intensities restore zero row sums.
IntensityFactor augment_absorbing(const IntensityFactor& f);

// Scaling-and-squaring matrix exponential with a truncated Taylor series.
Matrix matrix_exponential(const Matrix& q, double t);
Matrix matrix_exponential(const IntensityFactor& f, double t);

// p0 * exp(Q t); unnormalized when f is reduced (mass = surviving evidence
// probability).
PointDistribution propagate(const PointDistribution& p0, const IntensityFactor& f,
                            double t);

// Restrict a distribution to a subset of its retained states. Dropped mass is
// lost; set `renormalize` to rescale the remainder to total 1.
PointDistribution restrict_to(const PointDistribution& d,
                              const std::vector<long>& retained, bool renormalize);

// Zero-extend a distribution onto the full joint space of its scope.
PointDistribution scatter_full(const PointDistribution& d);

// Sum a distribution onto a sub-scope (result spans the full target space).
PointDistribution marginalize(const PointDistribution& d, const Scope& target);

PointDistribution normalized(const PointDistribution& d);

}  // namespace ctbn
