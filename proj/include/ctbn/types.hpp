#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ctbn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Centralized numeric tolerances and limits.
struct Tolerances {
  double validation = 1e-9;       // row sums, CPT normalization, stochasticity
  double round_trip = 1e-12;      // algebraic identities (amalgamate/divide)
  double time_sum = 1e-6;         // normalized occupancy must sum to interval length
  double ode_rtol = 1e-6;         // adaptive integrator relative tolerance
  double expm_rtol = 1e-13;       // matrix exponential series truncation
  double ep_tol = 1e-6;           // message-change convergence threshold
  int ep_max_iters = 100;         // sweep cap
  int joint_cap = 4096;           // largest permitted joint state space
  double underflow = 1e-300;      // evidence mass below this is impossible
};

inline const Tolerances& tols() {
  static const Tolerances t;
  return t;
}

// Error taxonomy mirrors the CLI exit codes.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ImpossibleEvidenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ctbn
