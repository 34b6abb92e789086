#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctbn/model.hpp"
#include "ctbn/suffstats.hpp"

namespace ctbn {

// Generator identifier recorded with every dump for reproducibility.
inline constexpr const char* kRngAlgorithm = "mt19937_64";

// Forward-sample one trajectory on [0, t_end]: the initial state comes from
// the initial network, every variable holds a competing exponential clock
// under its current parent instantiation, and a firing variable's children
// get fresh clocks. Deterministic given the seed.
Trajectory sample_trajectory(const CtbnModel& model, double t_end, std::uint64_t seed);

// Averaged occupancy times and transition counts over the joint states of
// `scope`, restricted to [t1, t2).
SuffStats empirical_suff_stats(const std::vector<Trajectory>& trajectories,
                               const CtbnModel& model, const Scope& scope,
                               double t1, double t2);

// Empirical mean and standard error of the raw (unnormalized) statistics, the
// quantities the integral machinery estimates. For a conditioned ensemble the
// exit row counts leave-events.
struct EnsembleStats {
  Scope scope;
  std::vector<long> retained;
  Vector time_mean, time_se;
  Matrix trans_mean, trans_se;
  Vector exit_mean, exit_se;
  double normalizer = 1;  // interval length / total mean occupancy
  long n = 0;             // trajectories contributing
};

EnsembleStats empirical_ensemble_stats(const std::vector<Trajectory>& trajectories,
                                       const CtbnModel& model, const Scope& scope,
                                       double t1, double t2);

// Conditioned ensemble for interval evidence: trajectories whose initial
// state violates the condition are dropped; the rest are truncated at their
// first violation, which counts as one exit transition from the state just
// left. Matches the absorbing-state treatment of evidence-reduced
// generators.
EnsembleStats empirical_conditioned_stats(const std::vector<Trajectory>& trajectories,
                                          const CtbnModel& model, const Scope& scope,
                                          double t1, double t2,
                                          const std::map<std::string, int>& condition);

}  // namespace ctbn
