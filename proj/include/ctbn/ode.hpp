#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctbn/types.hpp"

namespace ctbn {

// Dense-output solution of an ODE solve: state and derivative at every
// accepted step, interpolated in between by a cubic Hermite.
struct OdeSolution {
  std::vector<double> t;
  std::vector<Vector> y;
  std::vector<Vector> dy;

  // Index of the step interval [t[k], t[k+1]] containing `ti`.
  int locate(double ti) const {
    int lo = 0, hi = static_cast<int>(t.size()) - 1;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (t[mid] <= ti) lo = mid;
      else hi = mid;
    }
    return lo;
  }

  Vector eval(double ti) const {
    if (t.size() < 2) return y.front();
    int k = locate(ti);
    double h = t[k + 1] - t[k];
    if (h <= 0) return y[k];
    double s = (ti - t[k]) / h;
    double s2 = s * s, s3 = s2 * s;
    // Cubic Hermite basis.
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y[k] + (h10 * h) * dy[k] + h01 * y[k + 1] + (h11 * h) * dy[k + 1];
  }
};

namespace detail {

template <class Rhs>
Vector rk4_step(const Rhs& f, const Vector& y, const Vector& dy, double h) {
  Vector k1 = dy;
  Vector k2 = f(y + (h / 2) * k1);
  Vector k3 = f(y + (h / 2) * k2);
  Vector k4 = f(y + h * k3);
  return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace detail

// Classic fourth-order Runge-Kutta with step-doubling error control: each
// step is computed once at h and twice at h/2; the difference drives the
// accept/reject decision and a fifth-order correction. Accepted steps record
// (t, y, y') for dense output.
template <class Rhs>
OdeSolution solve_adaptive_rk4(const Rhs& f, Vector y0, double t0, double t1,
                               double h0, double rtol) {
  constexpr double kSafety = 0.9;
  constexpr double kTiny = 1e-30;

  OdeSolution sol;
  double t = t0;
  Vector y = std::move(y0);
  Vector dy = f(y);
  sol.t.push_back(t);
  sol.y.push_back(y);
  sol.dy.push_back(dy);

  double span = t1 - t0;
  if (span <= 0) return sol;
  double h = std::min(std::max(h0, span * 1e-12), span);

  long steps = 0;
  while (t < t1) {
    if (++steps > 2000000)
      throw std::runtime_error("ode solver exceeded the step budget");
    h = std::min(h, t1 - t);

    Vector big = detail::rk4_step(f, y, dy, h);
    Vector mid = detail::rk4_step(f, y, dy, h / 2);
    Vector small = detail::rk4_step(f, mid, f(mid), h / 2);

    // Error relative to the solution scale, per component.
    double err = 0;
    for (int i = 0; i < y.size(); ++i) {
      double scale = std::abs(y[i]) + std::abs(h * dy[i]) + kTiny;
      err = std::max(err, std::abs(small[i] - big[i]) / scale);
    }
    err /= rtol;

    if (err <= 1.0) {
      t += h;
      y = small + (small - big) / 15.0;  // fifth-order correction
      dy = f(y);
      sol.t.push_back(t);
      sol.y.push_back(y);
      sol.dy.push_back(dy);
      double grow = (err > 0) ? kSafety * std::pow(err, -0.2) : 5.0;
      h *= std::min(5.0, std::max(1.0, grow));
    } else {
      h *= std::max(0.1, kSafety * std::pow(err, -0.25));
      if (h < span * 1e-14)
        throw std::runtime_error("ode step size underflow");
    }
  }
  return sol;
}

}  // namespace ctbn
