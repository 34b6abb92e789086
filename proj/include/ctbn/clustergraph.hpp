#pragma once

#include <set>
#include <utility>
#include <vector>

#include "ctbn/intensity.hpp"
#include "ctbn/model.hpp"

namespace ctbn {

// Message-passing topology: clusters of variables joined through sepsets.
// Clique trees are built automatically; loopy cluster graphs are accepted
// from explicit user topologies.
struct ClusterTopology {
  std::vector<std::vector<int>> clusters;  // variable indices, ascending
  std::vector<std::pair<int, int>> edges;  // cluster index pairs, i < j
  std::vector<std::vector<int>> sepsets;   // per edge, variable indices
  std::vector<int> assignment;             // per variable, owning cluster

  int n_clusters() const { return static_cast<int>(clusters.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  std::vector<std::vector<int>> neighbor_edges() const;  // per cluster, edge ids
  bool is_forest() const;
};

// Sweep order over a cluster tree (or forest): every component is rooted at
// its center, children send upward in decreasing-depth order, then parents
// send back in breadth-first order.
struct TreeSchedule {
  std::vector<int> parent;       // cluster -> parent cluster (-1 at roots)
  std::vector<int> parent_edge;  // cluster -> edge id toward parent (-1 at roots)
  std::vector<int> depth;
  std::vector<int> up_order;     // clusters that send to their parent, in order
  std::vector<int> down_order;   // clusters that receive from their parent, in order
};

// Undirected adjacency after connecting each variable's parents and dropping
// edge directions. Cycles in the model graph simply become loops.
std::vector<std::set<int>> moralize(const CtbnModel& model);

// Min-fill triangulation of the moral graph, maximal cliques as clusters, and
// a maximum-weight spanning tree (forest when disconnected) over sepset sizes.
ClusterTopology build_cluster_tree(const CtbnModel& model);

// Checks family coverage, sepset consistency and cluster contents; throws
// ValidationError on violation. Loopy graphs are allowed.
void validate_topology(const CtbnModel& model, const ClusterTopology& topo);

TreeSchedule make_tree_schedule(const ClusterTopology& topo);

// Initial distribution of every cluster, from the initial network.
std::vector<PointDistribution> cluster_initial_distributions(const CtbnModel& model,
                                                             const ClusterTopology& topo);

Scope cluster_scope(const CtbnModel& model, const ClusterTopology& topo, int cluster);
Scope sepset_scope(const CtbnModel& model, const ClusterTopology& topo, int edge);

}  // namespace ctbn
