#include <doctest.h>

#include <set>
#include <vector>

#include "ctbn/clustergraph.hpp"
#include "ctbn/exact.hpp"
#include "ctbn/intensity.hpp"
#include "ctbn/model.hpp"
#include "support/fixtures.hpp"

using namespace ctbn;
using namespace ctbn::testing;

namespace {

CtbnModel v_structure_model() {
  CtbnModel m;
  m.variables = {Variable{"A", {"a1", "a2"}}, Variable{"B", {"b1", "b2"}},
                 Variable{"C", {"c1", "c2"}}};
  m.edges = {{"A", "C"}, {"B", "C"}};
  Matrix flip = mat({{-1, 1}, {1, -1}});
  Cim qa;
  qa.subject = "A";
  qa.matrices = {flip};
  m.cims["A"] = qa;
  Cim qb;
  qb.subject = "B";
  qb.matrices = {flip};
  m.cims["B"] = qb;
  Cim qc;
  qc.subject = "C";
  qc.parents = {"A", "B"};
  qc.matrices = {flip, flip, flip, flip};
  m.cims["C"] = qc;
  for (const char* v : {"A", "B", "C"}) {
    InitialNetwork::Cpt cpt;
    cpt.rows = {vec({0.5, 0.5})};
    m.initial.cpts[v] = cpt;
  }
  return m;
}

CtbnModel two_cycle_model() {
  CtbnModel m;
  m.variables = {Variable{"A", {"a1", "a2"}}, Variable{"B", {"b1", "b2"}}};
  m.edges = {{"A", "B"}, {"B", "A"}};
  Matrix flip = mat({{-1, 1}, {1, -1}});
  Cim qa;
  qa.subject = "A";
  qa.parents = {"B"};
  qa.matrices = {flip, flip};
  m.cims["A"] = qa;
  Cim qb;
  qb.subject = "B";
  qb.parents = {"A"};
  qb.matrices = {flip, flip};
  m.cims["B"] = qb;
  for (const char* v : {"A", "B"}) {
    InitialNetwork::Cpt cpt;
    cpt.rows = {vec({0.5, 0.5})};
    m.initial.cpts[v] = cpt;
  }
  return m;
}

CtbnModel single_var_model() {
  CtbnModel m;
  m.variables = {Variable{"A", {"a1", "a2"}}};
  Cim qa;
  qa.subject = "A";
  qa.matrices = {mat({{-1, 1}, {2, -2}})};
  m.cims["A"] = qa;
  InitialNetwork::Cpt cpt;
  cpt.rows = {vec({0.5, 0.5})};
  m.initial.cpts["A"] = cpt;
  return m;
}

}  // namespace

TEST_CASE("moralization produces the undirected family graph") {
  SUBCASE("a chain moralizes to a path") {
    CtbnModel m = four_chain_model();
    auto adj = moralize(m);
    REQUIRE(adj.size() == 4);
    CHECK(adj[0] == std::set<int>{1});
    CHECK(adj[1] == std::set<int>{0, 2});
    CHECK(adj[2] == std::set<int>{1, 3});
    CHECK(adj[3] == std::set<int>{2});
  }
  SUBCASE("a v-structure gains a moral edge between the parents") {
    CtbnModel m = v_structure_model();
    auto adj = moralize(m);
    CHECK(adj[0] == std::set<int>{1, 2});  // A - B (moral), A - C
    CHECK(adj[1] == std::set<int>{0, 2});
    CHECK(adj[2] == std::set<int>{0, 1});
  }
  SUBCASE("a two-variable cycle collapses to a single undirected edge") {
    CtbnModel m = two_cycle_model();
    auto adj = moralize(m);
    CHECK(adj[0] == std::set<int>{1});
    CHECK(adj[1] == std::set<int>{0});
  }
}

TEST_CASE("cluster tree construction on a chain") {
  CtbnModel m = four_chain_model();
  ClusterTopology topo = build_cluster_tree(m);

  SUBCASE("clusters are the adjacent pairs") {
    REQUIRE(topo.n_clusters() == 3);
    CHECK(topo.clusters[0] == std::vector<int>{0, 1});
    CHECK(topo.clusters[1] == std::vector<int>{1, 2});
    CHECK(topo.clusters[2] == std::vector<int>{2, 3});
  }
  SUBCASE("edges carry the shared-variable sepsets") {
    REQUIRE(topo.n_edges() == 2);
    CHECK(topo.edges[0] == std::pair<int, int>(0, 1));
    CHECK(topo.edges[1] == std::pair<int, int>(1, 2));
    CHECK(topo.sepsets[0] == std::vector<int>{1});
    CHECK(topo.sepsets[1] == std::vector<int>{2});
  }
  SUBCASE("every family is assigned to a covering cluster") {
    REQUIRE(topo.assignment.size() == 4);
    CHECK(topo.assignment[0] == 0);  // {A} within {A,B}
    CHECK(topo.assignment[1] == 0);  // {A,B}
    CHECK(topo.assignment[2] == 1);  // {B,C}
    CHECK(topo.assignment[3] == 2);  // {C,D}
  }
  SUBCASE("the tree passes its own validation") {
    CHECK_NOTHROW(validate_topology(m, topo));
    CHECK(topo.is_forest());
  }
  SUBCASE("running intersection: shared variables lie on the connecting path") {
    // On this path topology, B appears only in clusters 0 and 1, which are
    // adjacent; C appears only in 1 and 2, also adjacent.
    for (int v = 0; v < 4; ++v) {
      std::vector<int> holders;
      for (int c = 0; c < topo.n_clusters(); ++c)
        if (std::find(topo.clusters[c].begin(), topo.clusters[c].end(), v) !=
            topo.clusters[c].end())
          holders.push_back(c);
      for (size_t i = 1; i < holders.size(); ++i)
        CHECK(holders[i] == holders[i - 1] + 1);
    }
  }
  SUBCASE("neighbor edge lists") {
    auto nb = topo.neighbor_edges();
    CHECK(nb[0] == std::vector<int>{0});
    CHECK(nb[1] == std::vector<int>{0, 1});
    CHECK(nb[2] == std::vector<int>{1});
  }
}

TEST_CASE("cluster tree edge cases") {
  SUBCASE("single variable yields one singleton cluster") {
    CtbnModel m = single_var_model();
    ClusterTopology topo = build_cluster_tree(m);
    REQUIRE(topo.n_clusters() == 1);
    CHECK(topo.clusters[0] == std::vector<int>{0});
    CHECK(topo.n_edges() == 0);
    CHECK(topo.assignment[0] == 0);
    CHECK_NOTHROW(validate_topology(m, topo));
  }
  SUBCASE("a two-variable cycle becomes a single cluster") {
    CtbnModel m = two_cycle_model();
    ClusterTopology topo = build_cluster_tree(m);
    REQUIRE(topo.n_clusters() == 1);
    CHECK(topo.clusters[0] == std::vector<int>{0, 1});
    CHECK_NOTHROW(validate_topology(m, topo));
  }
  SUBCASE("independent variables build a forest of singletons") {
    CtbnModel m = three_var_model();
    ClusterTopology topo = build_cluster_tree(m);
    REQUIRE(topo.n_clusters() == 3);
    CHECK(topo.n_edges() == 0);
    CHECK(topo.is_forest());
    CHECK_NOTHROW(validate_topology(m, topo));
  }
  SUBCASE("v-structure produces the triangle cluster") {
    CtbnModel m = v_structure_model();
    ClusterTopology topo = build_cluster_tree(m);
    REQUIRE(topo.n_clusters() == 1);
    CHECK(topo.clusters[0] == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("cluster potentials partition the joint intensity") {
  // Amalgamating each cluster's assigned conditional-rate factors, embedding
  // into the full scope, and summing must reproduce the global joint matrix.
  for (const CtbnModel& m :
       {four_chain_model(), two_var_model(), v_structure_model(), two_cycle_model()}) {
    ClusterTopology topo = build_cluster_tree(m);
    Scope full = m.full_scope();
    IntensityFactor total = zero_factor(full, full_retained(full));
    for (int c = 0; c < topo.n_clusters(); ++c) {
      Scope cs = cluster_scope(m, topo, c);
      IntensityFactor pot = zero_factor(cs, full_retained(cs));
      for (int v = 0; v < static_cast<int>(m.variables.size()); ++v)
        if (topo.assignment[v] == c)
          pot = amalgamate(pot, cim_factor(m, m.variables[v].name));
      total = amalgamate(total, embed(pot, full, full_retained(full)));
    }
    IntensityFactor joint = joint_intensity(m);
    CHECK((total.m - joint.m).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("initial cluster distributions come from the starting network") {
  CtbnModel m = four_chain_model();
  ClusterTopology topo = build_cluster_tree(m);
  std::vector<PointDistribution> init = cluster_initial_distributions(m, topo);
  REQUIRE(init.size() == 3);

  SUBCASE("uniform variables give a uniform cluster") {
    REQUIRE(init[0].p.size() == 4);
    for (int i = 0; i < 4; ++i)
      CHECK(init[0].p[i] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("a deterministic variable zeroes the inconsistent states") {
    // Cluster {C,D}: C uniform, D starts in its first state.
    REQUIRE(init[2].p.size() == 4);
    CHECK(init[2].p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(init[2].p[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(init[2].p[2] == 0.0);
    CHECK(init[2].p[3] == 0.0);
  }
  SUBCASE("every cluster distribution is normalized") {
    for (const auto& d : init) CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tree schedule sweeps from the leaves through the center and back") {
  CtbnModel m = four_chain_model();
  ClusterTopology topo = build_cluster_tree(m);
  TreeSchedule sched = make_tree_schedule(topo);

  SUBCASE("the middle cluster roots the path") {
    CHECK(sched.parent[1] == -1);
    CHECK(sched.parent[0] == 1);
    CHECK(sched.parent[2] == 1);
    CHECK(sched.parent_edge[0] == 0);
    CHECK(sched.parent_edge[2] == 1);
    CHECK(sched.depth[1] == 0);
    CHECK(sched.depth[0] == 1);
    CHECK(sched.depth[2] == 1);
  }
  SUBCASE("upward pass gathers into the root, downward pass distributes") {
    CHECK(sched.up_order == std::vector<int>{0, 2});
    CHECK(sched.down_order == std::vector<int>{0, 2});
  }
  SUBCASE("single cluster needs no messages") {
    ClusterTopology solo = build_cluster_tree(single_var_model());
    TreeSchedule s = make_tree_schedule(solo);
    CHECK(s.up_order.empty());
    CHECK(s.down_order.empty());
    CHECK(s.parent[0] == -1);
  }
  SUBCASE("forest components are scheduled independently") {
    ClusterTopology forest = build_cluster_tree(three_var_model());
    TreeSchedule s = make_tree_schedule(forest);
    CHECK(s.up_order.empty());
    CHECK(s.down_order.empty());
    for (int c = 0; c < 3; ++c) CHECK(s.parent[c] == -1);
  }
  SUBCASE("loopy topologies are rejected") {
    ClusterTopology loopy = topo;
    loopy.edges.push_back(topo.edges[0]);
    loopy.sepsets.push_back(topo.sepsets[0]);
    CHECK_FALSE(loopy.is_forest());
    CHECK_THROWS_AS(make_tree_schedule(loopy), ValidationError);
  }
}

TEST_CASE("topology validation rejects malformed inputs") {
  CtbnModel m = four_chain_model();
  ClusterTopology good = build_cluster_tree(m);

  SUBCASE("no clusters") {
    ClusterTopology t;
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("empty cluster") {
    ClusterTopology t = good;
    t.clusters.push_back({});
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("unknown variable index") {
    ClusterTopology t = good;
    t.clusters[0] = {0, 9};
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("unsorted cluster contents") {
    ClusterTopology t = good;
    t.clusters[0] = {1, 0};
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("edge with an empty sepset") {
    ClusterTopology t = good;
    t.edges.emplace_back(0, 2);  // {A,B} and {C,D} share nothing
    t.sepsets.push_back({});
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("sepset that is not the cluster intersection") {
    ClusterTopology t = good;
    t.sepsets[0] = {0};
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("self-edge") {
    ClusterTopology t = good;
    t.edges.emplace_back(1, 1);
    t.sepsets.push_back({1, 2});
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("assignment missing a variable") {
    ClusterTopology t = good;
    t.assignment.pop_back();
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("family split across clusters") {
    ClusterTopology t = good;
    t.assignment[1] = 2;  // B's family {A,B} is not inside {C,D}
    CHECK_THROWS_AS(validate_topology(m, t), ValidationError);
  }
  SUBCASE("loopy but consistent graphs are accepted") {
    ClusterTopology t = good;
    t.edges.push_back(good.edges[0]);
    t.sepsets.push_back(good.sepsets[0]);
    CHECK_NOTHROW(validate_topology(m, t));
  }
}

TEST_CASE("cluster and sepset scopes preserve declaration order") {
  CtbnModel m = four_chain_model();
  ClusterTopology topo = build_cluster_tree(m);
  Scope c0 = cluster_scope(m, topo, 0);
  REQUIRE(c0.vars().size() == 2);
  CHECK(c0.vars()[0].name == "A");
  CHECK(c0.vars()[1].name == "B");
  Scope s0 = sepset_scope(m, topo, 0);
  REQUIRE(s0.vars().size() == 1);
  CHECK(s0.vars()[0].name == "B");
}
