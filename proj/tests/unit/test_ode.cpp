#include <doctest.h>

#include <cmath>

#include "ctbn/intensity.hpp"
#include "ctbn/ode.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ctbn;
using namespace ctbn::testing;

TEST_CASE("adaptive integrator solves scalar exponential decay") {
  auto rhs = [](const Vector& y) -> Vector { return -y; };
  Vector y0(1);
  y0[0] = 1.0;
  OdeSolution sol = solve_adaptive_rk4(rhs, y0, 0.0, 3.0, 0.1, 1e-8);

  CHECK(sol.t.front() == 0.0);
  CHECK(sol.t.back() == doctest::Approx(3.0));
  CHECK(sol.y.back()[0] == doctest::Approx(std::exp(-3.0)).epsilon(1e-7));
  // Dense output is accurate between accepted steps too.
  for (double t : {0.37, 1.114, 2.72}) {
    CHECK(sol.eval(t)[0] == doctest::Approx(std::exp(-t)).epsilon(1e-6));
  }
}

TEST_CASE("adaptive integrator solves the harmonic oscillator") {
  // y'' = -y as a two-dimensional first-order system.
  auto rhs = [](const Vector& y) -> Vector {
    Vector d(2);
    d[0] = y[1];
    d[1] = -y[0];
    return d;
  };
  Vector y0(2);
  y0[0] = 1.0;
  y0[1] = 0.0;
  OdeSolution sol = solve_adaptive_rk4(rhs, y0, 0.0, 6.0, 0.1, 1e-9);
  for (double t : {1.0, 3.14159, 5.5}) {
    Vector y = sol.eval(t);
    CHECK(y[0] == doctest::Approx(std::cos(t)).epsilon(1e-6));
    CHECK(y[1] == doctest::Approx(-std::sin(t)).epsilon(1e-6));
  }
}

TEST_CASE("adaptive integrator matches the matrix exponential on linear systems") {
  Matrix q = two_var_joint_matrix();
  Vector p0 = Vector::Constant(6, 1.0 / 6);
  // Forward equation d/dt p^T = p^T Q.
  auto rhs = [&](const Vector& y) -> Vector {
    return (y.transpose() * q).transpose();
  };
  OdeSolution sol = solve_adaptive_rk4(rhs, p0, 0.0, 1.0, 0.01, 1e-8);
  Vector direct = (p0.transpose() * series_expm(q, 1.0)).transpose();
  CHECK((sol.y.back() - direct).cwiseAbs().maxCoeff() < 1e-7);

  Vector mid = sol.eval(0.5);
  Vector direct_mid = (p0.transpose() * series_expm(q, 0.5)).transpose();
  CHECK((mid - direct_mid).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("step control responds to stiffness") {
  // A fast/slow two-rate system: steps must shrink early, grow later.
  auto rhs = [](const Vector& y) -> Vector {
    Vector d(2);
    d[0] = -80.0 * y[0];
    d[1] = -0.5 * y[1];
    return d;
  };
  Vector y0(2);
  y0[0] = 1.0;
  y0[1] = 1.0;
  OdeSolution sol = solve_adaptive_rk4(rhs, y0, 0.0, 4.0, 0.05, 1e-7);
  CHECK(sol.y.back()[0] == doctest::Approx(std::exp(-320.0)).epsilon(1e-3));
  CHECK(sol.y.back()[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));

  // Early steps (fast transient) are smaller than the largest late step.
  double early = sol.t[1] - sol.t[0];
  double late = 0;
  for (size_t i = 1; i < sol.t.size(); ++i)
    late = std::max(late, sol.t[i] - sol.t[i - 1]);
  CHECK(early < late / 4);
}

TEST_CASE("tightening the tolerance tightens the answer") {
  auto rhs = [](const Vector& y) -> Vector { return -2.0 * y; };
  Vector y0(1);
  y0[0] = 1.0;
  double exact = std::exp(-4.0);
  double err_loose =
      std::abs(solve_adaptive_rk4(rhs, y0, 0, 2, 0.2, 1e-4).y.back()[0] - exact);
  double err_tight =
      std::abs(solve_adaptive_rk4(rhs, y0, 0, 2, 0.2, 1e-10).y.back()[0] - exact);
  CHECK(err_tight < err_loose);
  CHECK(err_tight < 1e-10);
}

TEST_CASE("degenerate spans return the initial state") {
  auto rhs = [](const Vector& y) -> Vector { return -y; };
  Vector y0(1);
  y0[0] = 0.7;
  OdeSolution sol = solve_adaptive_rk4(rhs, y0, 1.0, 1.0, 0.1, 1e-6);
  REQUIRE(sol.t.size() == 1);
  CHECK(sol.y[0][0] == 0.7);
  CHECK(sol.eval(1.0)[0] == 0.7);
}
