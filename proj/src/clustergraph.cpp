#include "ctbn/clustergraph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

namespace ctbn {

namespace {

std::vector<std::string> names_of(const CtbnModel& model, const std::vector<int>& vars) {
  std::vector<std::string> out;
  out.reserve(vars.size());
  for (int v : vars) out.push_back(model.variables[v].name);
  return out;
}

}  // namespace

std::vector<std::vector<int>> ClusterTopology::neighbor_edges() const {
  std::vector<std::vector<int>> out(n_clusters());
  for (int e = 0; e < n_edges(); ++e) {
    out[edges[e].first].push_back(e);
    out[edges[e].second].push_back(e);
  }
  return out;
}

bool ClusterTopology::is_forest() const {
  // Union-find cycle check.
  std::vector<int> root(n_clusters());
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const auto& [i, j] : edges) {
    int a = find(i), b = find(j);
    if (a == b) return false;
    root[a] = b;
  }
  return true;
}

std::vector<std::set<int>> moralize(const CtbnModel& model) {
  int n = static_cast<int>(model.variables.size());
  std::vector<std::set<int>> adj(n);
  auto connect = [&](int a, int b) {
    if (a == b) return;
    adj[a].insert(b);
    adj[b].insert(a);
  };
  for (const auto& [p, c] : model.edges) connect(model.var_index(p), model.var_index(c));
  for (const auto& v : model.variables) {
    std::vector<std::string> parents = model.parents_of(v.name);
    for (size_t i = 0; i < parents.size(); ++i)
      for (size_t j = i + 1; j < parents.size(); ++j)
        connect(model.var_index(parents[i]), model.var_index(parents[j]));
  }
  return adj;
}

ClusterTopology build_cluster_tree(const CtbnModel& model) {
  int n = static_cast<int>(model.variables.size());
  std::vector<std::set<int>> adj = moralize(model);

  // Min-fill elimination; each eliminated vertex yields a candidate clique of
  // itself plus its remaining neighbors.
  std::vector<bool> gone(n, false);
  std::vector<std::set<int>> candidate_cliques;
  for (int round = 0; round < n; ++round) {
    int best = -1;
    long best_fill = -1;
    for (int v = 0; v < n; ++v) {
      if (gone[v]) continue;
      long fill = 0;
      std::vector<int> nb(adj[v].begin(), adj[v].end());
      for (size_t i = 0; i < nb.size(); ++i)
        for (size_t j = i + 1; j < nb.size(); ++j)
          if (!adj[nb[i]].count(nb[j])) ++fill;
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    std::set<int> clique(adj[best].begin(), adj[best].end());
    clique.insert(best);
    candidate_cliques.push_back(clique);
    std::vector<int> nb(adj[best].begin(), adj[best].end());
    for (size_t i = 0; i < nb.size(); ++i)
      for (size_t j = i + 1; j < nb.size(); ++j) {
        adj[nb[i]].insert(nb[j]);
        adj[nb[j]].insert(nb[i]);
      }
    for (int u : nb) adj[u].erase(best);
    adj[best].clear();
    gone[best] = true;
  }

  // Keep maximal cliques only, preserving first-appearance order.
  std::vector<std::set<int>> cliques;
  for (const auto& c : candidate_cliques) {
    bool contained = false;
    for (const auto& o : candidate_cliques)
      if (&o != &c && o != c &&
          std::includes(o.begin(), o.end(), c.begin(), c.end())) {
        contained = true;
        break;
      }
    // Duplicate cliques: keep the first occurrence.
    if (!contained)
      for (const auto& prev : cliques)
        if (prev == c) { contained = true; break; }
    if (!contained) cliques.push_back(c);
  }

  ClusterTopology topo;
  for (const auto& c : cliques) topo.clusters.emplace_back(c.begin(), c.end());

  // Maximum-weight spanning forest over sepset sizes (Kruskal, deterministic:
  // weight descending, then lower index pair).
  struct Cand { int w, i, j; };
  std::vector<Cand> cands;
  int m = topo.n_clusters();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      std::vector<int> inter;
      std::set_intersection(topo.clusters[i].begin(), topo.clusters[i].end(),
                            topo.clusters[j].begin(), topo.clusters[j].end(),
                            std::back_inserter(inter));
      if (!inter.empty()) cands.push_back({static_cast<int>(inter.size()), i, j});
    }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.w != b.w) return a.w > b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<int> root(m);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const auto& c : cands) {
    int a = find(c.i), b = find(c.j);
    if (a == b) continue;
    root[a] = b;
    topo.edges.emplace_back(c.i, c.j);
  }
  std::sort(topo.edges.begin(), topo.edges.end());
  for (const auto& [i, j] : topo.edges) {
    std::vector<int> inter;
    std::set_intersection(topo.clusters[i].begin(), topo.clusters[i].end(),
                          topo.clusters[j].begin(), topo.clusters[j].end(),
                          std::back_inserter(inter));
    topo.sepsets.push_back(inter);
  }

  // Assign each variable to the smallest cluster containing its family.
  topo.assignment.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    std::vector<std::string> fam = model.parents_of(model.variables[v].name);
    fam.push_back(model.variables[v].name);
    std::vector<int> fam_ids;
    for (const auto& f : fam) fam_ids.push_back(model.var_index(f));
    std::sort(fam_ids.begin(), fam_ids.end());
    int best = -1;
    for (int c = 0; c < m; ++c) {
      if (!std::includes(topo.clusters[c].begin(), topo.clusters[c].end(),
                         fam_ids.begin(), fam_ids.end()))
        continue;
      if (best < 0 || topo.clusters[c].size() < topo.clusters[best].size()) best = c;
    }
    topo.assignment[v] = best;  // validated model guarantees best >= 0
  }
  return topo;
}

void validate_topology(const CtbnModel& model, const ClusterTopology& topo) {
  int n = static_cast<int>(model.variables.size());
  int m = topo.n_clusters();
  if (m == 0) throw ValidationError("topology has no clusters");
  for (const auto& c : topo.clusters) {
    if (c.empty()) throw ValidationError("topology has an empty cluster");
    for (size_t i = 0; i < c.size(); ++i) {
      if (c[i] < 0 || c[i] >= n)
        throw ValidationError("cluster references unknown variable index " +
                              std::to_string(c[i]));
      if (i && c[i] <= c[i - 1])
        throw ValidationError("cluster variable indices must be strictly ascending");
    }
  }
  if (topo.sepsets.size() != topo.edges.size())
    throw ValidationError("topology sepset/edge count mismatch");
  for (int e = 0; e < topo.n_edges(); ++e) {
    auto [i, j] = topo.edges[e];
    if (i < 0 || j < 0 || i >= m || j >= m || i == j)
      throw ValidationError("topology edge " + std::to_string(e) +
                            " references invalid clusters");
    std::vector<int> inter;
    std::set_intersection(topo.clusters[i].begin(), topo.clusters[i].end(),
                          topo.clusters[j].begin(), topo.clusters[j].end(),
                          std::back_inserter(inter));
    if (inter.empty())
      throw ValidationError("topology edge " + std::to_string(e) + " has an empty sepset");
    if (topo.sepsets[e] != inter)
      throw ValidationError("topology edge " + std::to_string(e) +
                            " sepset does not equal the cluster intersection");
  }
  if (static_cast<int>(topo.assignment.size()) != n)
    throw ValidationError("topology assignment must cover every variable");
  for (int v = 0; v < n; ++v) {
    int c = topo.assignment[v];
    if (c < 0 || c >= m)
      throw ValidationError("variable '" + model.variables[v].name +
                            "' assigned to invalid cluster");
    std::vector<std::string> fam = model.parents_of(model.variables[v].name);
    fam.push_back(model.variables[v].name);
    for (const auto& f : fam) {
      int fi = model.var_index(f);
      if (!std::binary_search(topo.clusters[c].begin(), topo.clusters[c].end(), fi))
        throw ValidationError("family of variable '" + model.variables[v].name +
                              "' is not contained in its assigned cluster");
    }
  }
}

TreeSchedule make_tree_schedule(const ClusterTopology& topo) {
  if (!topo.is_forest())
    throw ValidationError("tree schedule requested for a loopy topology");
  int m = topo.n_clusters();
  std::vector<std::vector<std::pair<int, int>>> adj(m);  // (neighbor, edge id)
  for (int e = 0; e < topo.n_edges(); ++e) {
    auto [i, j] = topo.edges[e];
    adj[i].emplace_back(j, e);
    adj[j].emplace_back(i, e);
  }

  TreeSchedule sched;
  sched.parent.assign(m, -1);
  sched.parent_edge.assign(m, -1);
  sched.depth.assign(m, 0);

  std::vector<bool> seen(m, false);
  for (int start = 0; start < m; ++start) {
    if (seen[start]) continue;
    // Component members by BFS.
    std::vector<int> comp{start};
    seen[start] = true;
    for (size_t h = 0; h < comp.size(); ++h)
      for (auto [nb, e] : adj[comp[h]])
        if (!seen[nb]) {
          seen[nb] = true;
          comp.push_back(nb);
        }

    // Center of the component by leaf peeling (ties: lowest index survives,
    // i.e. the last peeled or remaining lowest).
    std::vector<int> degree(m, 0), layer;
    for (int c : comp) degree[c] = static_cast<int>(adj[c].size());
    std::vector<bool> peeled(m, false);
    std::vector<int> remaining = comp;
    int center = start;
    while (!remaining.empty()) {
      std::sort(remaining.begin(), remaining.end());
      center = remaining.front();
      if (remaining.size() <= 1) break;
      layer.clear();
      for (int c : remaining)
        if (degree[c] <= 1) layer.push_back(c);
      if (layer.empty()) break;  // should not happen on a tree
      if (layer.size() == remaining.size()) {
        // Two-node component (or isolated pair); lowest index is the center.
        center = *std::min_element(remaining.begin(), remaining.end());
        break;
      }
      for (int c : layer) {
        peeled[c] = true;
        for (auto [nb, e] : adj[c])
          if (!peeled[nb]) --degree[nb];
      }
      std::vector<int> next;
      for (int c : remaining)
        if (!peeled[c]) next.push_back(c);
      remaining = std::move(next);
    }

    // Root the component at the center; BFS with sorted neighbor visits.
    std::deque<int> queue{center};
    std::vector<bool> visited(m, false);
    visited[center] = true;
    std::vector<int> bfs;
    while (!queue.empty()) {
      int c = queue.front();
      queue.pop_front();
      bfs.push_back(c);
      std::vector<std::pair<int, int>> nbs = adj[c];
      std::sort(nbs.begin(), nbs.end());
      for (auto [nb, e] : nbs) {
        if (visited[nb]) continue;
        visited[nb] = true;
        sched.parent[nb] = c;
        sched.parent_edge[nb] = e;
        sched.depth[nb] = sched.depth[c] + 1;
        queue.push_back(nb);
      }
    }

    // Upward: decreasing depth, ties by index. Downward: BFS order minus root.
    std::vector<int> up = bfs;
    up.erase(std::remove(up.begin(), up.end(), center), up.end());
    std::stable_sort(up.begin(), up.end(), [&](int a, int b) {
      if (sched.depth[a] != sched.depth[b]) return sched.depth[a] > sched.depth[b];
      return a < b;
    });
    sched.up_order.insert(sched.up_order.end(), up.begin(), up.end());
    for (int c : bfs)
      if (c != center) sched.down_order.push_back(c);
  }
  return sched;
}

std::vector<PointDistribution> cluster_initial_distributions(const CtbnModel& model,
                                                             const ClusterTopology& topo) {
  std::vector<PointDistribution> out;
  out.reserve(topo.n_clusters());
  for (int c = 0; c < topo.n_clusters(); ++c)
    out.push_back(initial_joint(model, cluster_scope(model, topo, c)));
  return out;
}

Scope cluster_scope(const CtbnModel& model, const ClusterTopology& topo, int cluster) {
  return model.scope_of(names_of(model, topo.clusters[cluster]));
}

Scope sepset_scope(const CtbnModel& model, const ClusterTopology& topo, int edge) {
  return model.scope_of(names_of(model, topo.sepsets[edge]));
}

}  // namespace ctbn
