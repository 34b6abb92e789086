#pragma once

#include <cmath>
#include <limits>

#include "ctbn/types.hpp"

namespace ctbn {

// Kullback-Leibler divergence sum p_i ln(p_i/q_i). Zero entries of p
// contribute nothing; p-mass on q's zeros makes the divergence infinite.
inline double kl_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size())
    throw ValidationError("kl_divergence: dimension mismatch");
  double s = 0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

}  // namespace ctbn
