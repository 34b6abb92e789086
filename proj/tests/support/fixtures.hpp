#pragma once

// Shared test models. `two_var_model` is a two-variable chain A -> B (A
// binary, B ternary) whose amalgamated intensity matrix has small integer
// entries, convenient for exact hand checks. `four_chain_model` is a chain of
// four binary variables A -> B -> C -> D where each child tries to track its
// parent; it is the standard filtering benchmark in this suite.

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "ctbn/model.hpp"
#include "ctbn/types.hpp"

namespace ctbn::testing {

// Absolute-tolerance comparison for printed / rounded reference values.
inline bool near(double a, double b, double tol) {
  return a == a && b == b && (a > b ? a - b : b - a) <= tol;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double x : row) m(r, c++) = x;
    ++r;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(xs.size());
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// A (2 states) -> B (3 states); uniform initial distribution on both.
inline CtbnModel two_var_model() {
  CtbnModel m;
  m.variables = {Variable{"A", {"a1", "a2"}}, Variable{"B", {"b1", "b2", "b3"}}};
  m.edges = {{"A", "B"}};

  Cim qa;
  qa.subject = "A";
  qa.matrices = {mat({{-1, 1}, {2, -2}})};
  m.cims["A"] = qa;

  Cim qb;
  qb.subject = "B";
  qb.parents = {"A"};
  qb.matrices = {mat({{-5, 2, 3}, {2, -6, 4}, {2, 5, -7}}),
                 mat({{-7, 3, 4}, {3, -8, 5}, {3, 6, -9}})};
  m.cims["B"] = qb;

  InitialNetwork::Cpt ca;
  ca.rows = {vec({0.5, 0.5})};
  m.initial.cpts["A"] = ca;
  InitialNetwork::Cpt cb;
  cb.rows = {vec({1.0 / 3, 1.0 / 3, 1.0 / 3})};
  m.initial.cpts["B"] = cb;
  return m;
}

// The amalgamated 6x6 intensity matrix of two_var_model over (A,B), joint
// order (a1,b1),(a2,b1),(a1,b2),(a2,b2),(a1,b3),(a2,b3).
inline Matrix two_var_joint_matrix() {
  return mat({{-6, 1, 2, 0, 3, 0},
              {2, -9, 0, 3, 0, 4},
              {2, 0, -7, 1, 4, 0},
              {0, 3, 2, -10, 0, 5},
              {2, 0, 5, 0, -8, 1},
              {0, 3, 0, 6, 2, -11}});
}

// A's rate matrix expanded over the joint (A,B) space.
inline Matrix two_var_a_embedded() {
  return mat({{-1, 1, 0, 0, 0, 0},
              {2, -2, 0, 0, 0, 0},
              {0, 0, -1, 1, 0, 0},
              {0, 0, 2, -2, 0, 0},
              {0, 0, 0, 0, -1, 1},
              {0, 0, 0, 0, 2, -2}});
}

// B's conditional rate matrices expanded over the joint (A,B) space.
inline Matrix two_var_b_embedded() {
  return mat({{-5, 0, 2, 0, 3, 0},
              {0, -7, 0, 3, 0, 4},
              {2, 0, -6, 0, 4, 0},
              {0, 3, 0, -8, 0, 5},
              {2, 0, 5, 0, -7, 0},
              {0, 3, 0, 6, 0, -9}});
}

// Four binary variables A -> B -> C -> D. A flips at rate 1 in both
// directions; each child matches its parent: while the parent agrees with the
// child the child flips away slowly (rate 1), while they disagree the child
// chases at rate 10. Initial distribution uniform on A, B, C; D starts in d1.
inline CtbnModel four_chain_model() {
  CtbnModel m;
  m.variables = {Variable{"A", {"a1", "a2"}}, Variable{"B", {"b1", "b2"}},
                 Variable{"C", {"c1", "c2"}}, Variable{"D", {"d1", "d2"}}};
  m.edges = {{"A", "B"}, {"B", "C"}, {"C", "D"}};

  Matrix stay = mat({{-1, 1}, {10, -10}});   // parent in its first state
  Matrix chase = mat({{-10, 10}, {1, -1}});  // parent in its second state

  Cim qa;
  qa.subject = "A";
  qa.matrices = {mat({{-1, 1}, {1, -1}})};
  m.cims["A"] = qa;
  const std::vector<std::pair<std::string, std::string>> links = {
      {"B", "A"}, {"C", "B"}, {"D", "C"}};
  for (const auto& [child, parent] : links) {
    Cim q;
    q.subject = child;
    q.parents = {parent};
    q.matrices = {stay, chase};
    m.cims[child] = q;
  }

  for (const char* v : {"A", "B", "C"}) {
    InitialNetwork::Cpt c;
    c.rows = {vec({0.5, 0.5})};
    m.initial.cpts[v] = c;
  }
  InitialNetwork::Cpt cd;
  cd.rows = {vec({1.0, 0.0})};
  m.initial.cpts["D"] = cd;
  return m;
}

// The evidence scenario of the filtering benchmark: D observed in d1
// throughout [0, 1).
inline EvidenceTimeline four_chain_evidence() {
  EvidenceTimeline ev;
  ev.horizon_start = 0;
  ev.horizon_end = 1;
  ev.intervals = {IntervalOb{"D", "d1", 0, 1}};
  return ev;
}

// Three-variable system used for evidence-partition tests: X, Y, Z binary
// with no edges (dynamics are irrelevant to partitioning).
inline CtbnModel three_var_model() {
  CtbnModel m;
  m.variables = {Variable{"X", {"x1", "x2"}}, Variable{"Y", {"y1", "y2"}},
                 Variable{"Z", {"z1", "z2"}}};
  Matrix flip = mat({{-1, 1}, {1, -1}});
  for (const char* v : {"X", "Y", "Z"}) {
    Cim q;
    q.subject = v;
    q.matrices = {flip};
    m.cims[v] = q;
    InitialNetwork::Cpt c;
    c.rows = {vec({0.5, 0.5})};
    m.initial.cpts[v] = c;
  }
  return m;
}

// A timeline exercising every evidence kind: intervals, an observed
// transition, and an isolated point observation, with distinguished time
// points 0, 0.7, 1.1, 1.5, 2.
inline EvidenceTimeline three_var_timeline() {
  EvidenceTimeline ev;
  ev.horizon_start = 0;
  ev.horizon_end = 2;
  ev.intervals = {IntervalOb{"X", "x1", 0, 0.7}, IntervalOb{"Y", "y1", 0, 0.7},
                  IntervalOb{"Y", "y2", 0.7, 1.1}, IntervalOb{"Z", "z1", 0.7, 1.1},
                  IntervalOb{"X", "x1", 1.1, 2}};
  ev.points = {PointOb{"Y", "y1", 1.5}};
  ev.transitions = {TransitionOb{"Z", "z1", "z2", 1.1}};
  return ev;
}

inline std::string data_path(const std::string& name) {
  return std::string(CTBN_TEST_DATA_DIR) + "/" + name;
}

}  // namespace ctbn::testing
