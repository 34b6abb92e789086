#include "ctbn/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ctbn {

namespace {

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError("cannot parse '" + path + "': " + e.what());
  }
}

// "A=a1,B=b2" -> instantiation index over the scope of `parents` (declaration
// order, first parent fastest). The empty label is the sole instantiation of
// an empty parent set.
long parse_instantiation(const CtbnModel& model, const std::vector<std::string>& parents,
                         const std::string& label, const std::string& where) {
  std::vector<int> assigned(parents.size(), -1);
  std::stringstream ss(label);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw ValidationError(where + ": malformed instantiation label '" + label + "'");
    std::string var = item.substr(0, eq), value = item.substr(eq + 1);
    auto it = std::find(parents.begin(), parents.end(), var);
    if (it == parents.end())
      throw ValidationError(where + ": label '" + label + "' names '" + var +
                            "', not a parent");
    size_t pos = static_cast<size_t>(it - parents.begin());
    if (assigned[pos] >= 0)
      throw ValidationError(where + ": label '" + label + "' assigns '" + var +
                            "' twice");
    int vi = model.var_index(var);
    int s = vi >= 0 ? model.variables[vi].state_index(value) : -1;
    if (s < 0)
      throw ValidationError(where + ": label '" + label + "' uses unknown state '" +
                            value + "'");
    assigned[pos] = s;
  }
  long idx = 0, stride = 1;
  for (size_t i = 0; i < parents.size(); ++i) {
    if (assigned[i] < 0)
      throw ValidationError(where + ": label '" + label + "' misses parent '" +
                            parents[i] + "'");
    idx += assigned[i] * stride;
    stride *= model.variables[model.var_index(parents[i])].n_states();
  }
  return idx;
}

std::vector<std::pair<std::string, std::string>> parse_edges(const Json& j,
                                                             const std::string& where) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2)
      throw ValidationError(where + ": each edge must be a [parent, child] pair");
    edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  return edges;
}

// Parents of `child` drawn from an edge list, ordered by declaration.
std::vector<std::string> edge_parents(const CtbnModel& model,
                                      const std::vector<std::pair<std::string, std::string>>& edges,
                                      const std::string& child) {
  std::vector<std::string> out;
  for (const auto& [p, c] : edges)
    if (c == child) out.push_back(p);
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    return model.var_index(a) < model.var_index(b);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

CtbnModel model_from_json(const Json& j) {
  try {
    CtbnModel model;
    for (const auto& v : j.at("variables")) {
      Variable var;
      var.name = v.at("name").get<std::string>();
      for (const auto& s : v.at("states")) var.states.push_back(s.get<std::string>());
      model.variables.push_back(std::move(var));
    }
    if (j.contains("edges")) model.edges = parse_edges(j.at("edges"), "edges");

    for (const auto& v : model.variables) {
      const std::string where = "cims of '" + v.name + "'";
      if (!j.at("cims").contains(v.name))
        throw ValidationError(where + ": missing");
      Cim cim;
      cim.subject = v.name;
      cim.parents = edge_parents(model, model.edges, v.name);
      long count = 1;
      for (const auto& p : cim.parents) {
        int pi = model.var_index(p);
        if (pi < 0) throw ValidationError(where + ": unknown parent '" + p + "'");
        count *= model.variables[pi].n_states();
      }
      cim.matrices.assign(count, Matrix());
      for (const auto& [label, rows] : j.at("cims").at(v.name).items()) {
        long u = parse_instantiation(model, cim.parents, label, where);
        if (cim.matrices[u].size() != 0)
          throw ValidationError(where + ": duplicate instantiation '" + label + "'");
        Matrix m(rows.size(), v.n_states());
        for (size_t r = 0; r < rows.size(); ++r) {
          if (static_cast<int>(rows[r].size()) != v.n_states())
            throw ValidationError(where + ": row " + std::to_string(r) +
                                  " has the wrong length");
          for (int c = 0; c < v.n_states(); ++c) m(r, c) = rows[r][c].get<double>();
        }
        cim.matrices[u] = std::move(m);
      }
      for (long u = 0; u < count; ++u)
        if (cim.matrices[u].size() == 0)
          throw ValidationError(where + ": missing a parent instantiation");
      model.cims[v.name] = std::move(cim);
    }

    const Json& init = j.at("initial");
    if (init.contains("edges"))
      model.initial.edges = parse_edges(init.at("edges"), "initial edges");
    for (const auto& v : model.variables) {
      const std::string where = "initial of '" + v.name + "'";
      if (!init.at("cpts").contains(v.name)) throw ValidationError(where + ": missing");
      InitialNetwork::Cpt cpt;
      cpt.parents = edge_parents(model, model.initial.edges, v.name);
      long count = 1;
      for (const auto& p : cpt.parents) {
        int pi = model.var_index(p);
        if (pi < 0) throw ValidationError(where + ": unknown parent '" + p + "'");
        count *= model.variables[pi].n_states();
      }
      cpt.rows.assign(count, Vector());
      for (const auto& [label, row] : init.at("cpts").at(v.name).items()) {
        long u = parse_instantiation(model, cpt.parents, label, where);
        if (cpt.rows[u].size() != 0)
          throw ValidationError(where + ": duplicate instantiation '" + label + "'");
        Vector r(row.size());
        for (size_t i = 0; i < row.size(); ++i) r[i] = row[i].get<double>();
        cpt.rows[u] = std::move(r);
      }
      for (long u = 0; u < count; ++u)
        if (cpt.rows[u].size() == 0)
          throw ValidationError(where + ": missing a parent instantiation");
      model.initial.cpts[v.name] = std::move(cpt);
    }
    return model;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

CtbnModel load_model(const std::string& path) { return model_from_json(load_json(path)); }

EvidenceTimeline evidence_from_json(const Json& j, const CtbnModel& model) {
  (void)model;  // state names are checked during partitioning
  try {
    EvidenceTimeline ev;
    const Json& horizon = j.at("horizon");
    if (!horizon.is_array() || horizon.size() != 2)
      throw ValidationError("evidence horizon must be [start, end]");
    ev.horizon_start = horizon[0].get<double>();
    ev.horizon_end = horizon[1].get<double>();
    if (j.contains("intervals"))
      for (const auto& o : j.at("intervals"))
        ev.intervals.push_back(IntervalOb{o.at("var").get<std::string>(),
                                          o.at("value").get<std::string>(),
                                          o.at("from").get<double>(),
                                          o.at("to").get<double>()});
    if (j.contains("points"))
      for (const auto& o : j.at("points"))
        ev.points.push_back(PointOb{o.at("var").get<std::string>(),
                                    o.at("value").get<std::string>(),
                                    o.at("t").get<double>()});
    if (j.contains("transitions"))
      for (const auto& o : j.at("transitions"))
        ev.transitions.push_back(TransitionOb{o.at("var").get<std::string>(),
                                              o.at("from_value").get<std::string>(),
                                              o.at("to_value").get<std::string>(),
                                              o.at("t").get<double>()});
    return ev;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed evidence file: ") + e.what());
  }
}

EvidenceTimeline load_evidence(const std::string& path, const CtbnModel& model) {
  return evidence_from_json(load_json(path), model);
}

QuerySpec query_from_json(const Json& j, const CtbnModel& model) {
  try {
    QuerySpec spec;
    std::string kind = j.value("kind", "marginal");
    if (kind == "marginal")
      spec.kind = QueryKind::kMarginal;
    else if (kind == "expected-statistics")
      spec.kind = QueryKind::kExpectedStatistics;
    else if (kind == "evidence-likelihood")
      spec.kind = QueryKind::kEvidenceLikelihood;
    else
      throw ValidationError("unknown query kind '" + kind + "'");

    if (j.contains("variables"))
      for (const auto& v : j.at("variables")) {
        std::string name = v.get<std::string>();
        if (model.var_index(name) < 0)
          throw ValidationError("query names unknown variable '" + name + "'");
        spec.variables.push_back(std::move(name));
      }
    if (spec.kind == QueryKind::kMarginal && spec.variables.empty())
      throw ValidationError("marginal query needs at least one variable");

    if (j.contains("times")) {
      const Json& times = j.at("times");
      if (times.is_array()) {
        for (const auto& t : times) spec.times.push_back(t.get<double>());
      } else {
        long count = times.at("count").get<long>();
        double start = times.at("start").get<double>();
        double end = times.at("end").get<double>();
        if (count < 1) throw ValidationError("query times need count >= 1");
        for (long i = 0; i < count; ++i)
          spec.times.push_back(count == 1 ? start
                                          : start + (end - start) * i / (count - 1));
      }
    }
    if (spec.kind == QueryKind::kMarginal && spec.times.empty())
      throw ValidationError("marginal query needs at least one probe time");
    return spec;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed query file: ") + e.what());
  }
}

QuerySpec load_query(const std::string& path, const CtbnModel& model) {
  return query_from_json(load_json(path), model);
}

ClusterTopology topology_from_json(const Json& j, const CtbnModel& model) {
  try {
    ClusterTopology topo;
    for (const auto& c : j.at("clusters")) {
      std::vector<int> cluster;
      for (const auto& name : c) {
        int vi = model.var_index(name.get<std::string>());
        if (vi < 0)
          throw ValidationError("topology names unknown variable '" +
                                name.get<std::string>() + "'");
        cluster.push_back(vi);
      }
      std::sort(cluster.begin(), cluster.end());
      cluster.erase(std::unique(cluster.begin(), cluster.end()), cluster.end());
      topo.clusters.push_back(std::move(cluster));
    }
    if (j.contains("edges"))
      for (const auto& e : j.at("edges")) {
        int a = e[0].get<int>(), b = e[1].get<int>();
        topo.edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    std::sort(topo.edges.begin(), topo.edges.end());
    topo.edges.erase(std::unique(topo.edges.begin(), topo.edges.end()), topo.edges.end());
    for (const auto& [a, b] : topo.edges) {
      if (a < 0 || b >= topo.n_clusters() || a == b)
        throw ValidationError("topology edge references invalid clusters");
      std::vector<int> inter;
      std::set_intersection(topo.clusters[a].begin(), topo.clusters[a].end(),
                            topo.clusters[b].begin(), topo.clusters[b].end(),
                            std::back_inserter(inter));
      topo.sepsets.push_back(std::move(inter));
    }
    // Assignment: smallest cluster containing the family, lowest index first.
    topo.assignment.assign(model.variables.size(), -1);
    for (size_t v = 0; v < model.variables.size(); ++v) {
      std::vector<std::string> fam = model.parents_of(model.variables[v].name);
      fam.push_back(model.variables[v].name);
      std::vector<int> ids;
      for (const auto& f : fam) ids.push_back(model.var_index(f));
      std::sort(ids.begin(), ids.end());
      int best = -1;
      for (int c = 0; c < topo.n_clusters(); ++c) {
        if (!std::includes(topo.clusters[c].begin(), topo.clusters[c].end(), ids.begin(),
                           ids.end()))
          continue;
        if (best < 0 || topo.clusters[c].size() < topo.clusters[best].size()) best = c;
      }
      if (best < 0)
        throw ValidationError("no topology cluster contains the family of variable '" +
                              model.variables[v].name + "'");
      topo.assignment[v] = best;
    }
    validate_topology(model, topo);
    return topo;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed topology file: ") + e.what());
  }
}

ClusterTopology load_topology(const std::string& path, const CtbnModel& model) {
  return topology_from_json(load_json(path), model);
}

Json trajectories_to_json(const std::vector<Trajectory>& trajectories,
                          std::uint64_t seed, double t_end) {
  Json out;
  out["algorithm"] = "mt19937_64";
  out["seed"] = seed;
  out["t_end"] = round6(t_end);
  out["trajectories"] = Json::array();
  for (const auto& traj : trajectories) {
    Json t;
    t["initial"] = Json::object();
    for (const auto& [var, value] : traj.initial_state) t["initial"][var] = value;
    t["transitions"] = Json::array();
    for (const auto& tr : traj.transitions)
      t["transitions"].push_back({{"t", round6(tr.t)}, {"var", tr.var}, {"to", tr.to}});
    out["trajectories"].push_back(std::move(t));
  }
  return out;
}

std::string fmt6(double x) {
  if (x == 0) x = 0;  // normalize negative zero
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

double round6(double x) { return std::strtod(fmt6(x).c_str(), nullptr); }

}  // namespace ctbn
