#pragma once

#include <vector>

#include "ctbn/intensity.hpp"
#include "ctbn/scope.hpp"
#include "ctbn/types.hpp"

namespace ctbn {

// Expected sufficient statistics of a Markov process over an interval:
// occupancy times E[T[j]], transition counts E[M[j,k]], and counts into the
// absorbing exit state when the generator was reduced by evidence. Both the
// normalized statistics (occupancy summing to the interval length) and the
// unnormalized integrals they came from are kept.
struct SuffStats {
  Scope scope;
  std::vector<long> retained;
  Vector expected_time;
  Matrix expected_transitions;  // zero diagonal
  Vector expected_exit;
  Vector raw_time;
  Matrix raw_transitions;
  Vector raw_exit;
  double normalizer = 1;       // expected = normalizer * raw
  double interval_length = 0;
  double survival = 1;         // mass remaining in the retained states at t2

  int dim() const { return static_cast<int>(expected_time.size()); }
};

// Integrate the occupancy/transition statistics of `f` over [t1, t2) starting
// from `p0`. Reduced factors are augmented with an absorbing state first; the
// forward and backward solves share their accepted-step grids for quadrature.
SuffStats expected_suff_stats(const IntensityFactor& f, const PointDistribution& p0,
                              double t1, double t2);

// Collapse statistics onto a sub-scope: occupancy adds up within groups,
// transitions internal to a group are dropped.
SuffStats aggregate_stats(const SuffStats& s, const Scope& target);

// Project statistics onto the homogeneous Markov family: q_v = E[M[v]]/E[T[v]]
// including exit counts, off-diagonals split proportionally to the observed
// transitions. Rows with exits keep a negative deficit.
IntensityFactor moment_match(const SuffStats& s);

// expected_suff_stats -> aggregate_stats -> moment_match.
IntensityFactor approx_marginalize(const IntensityFactor& f, const PointDistribution& p0,
                                   double t1, double t2, const Scope& target);

}  // namespace ctbn
