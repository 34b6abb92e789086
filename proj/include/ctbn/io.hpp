#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ctbn/clustergraph.hpp"
#include "ctbn/model.hpp"

namespace ctbn {

using Json = nlohmann::json;

enum class QueryKind { kMarginal, kExpectedStatistics, kEvidenceLikelihood };

struct QuerySpec {
  QueryKind kind = QueryKind::kMarginal;
  std::vector<std::string> variables;
  std::vector<double> times;
};

CtbnModel model_from_json(const Json& j);
CtbnModel load_model(const std::string& path);

EvidenceTimeline evidence_from_json(const Json& j, const CtbnModel& model);
EvidenceTimeline load_evidence(const std::string& path, const CtbnModel& model);

QuerySpec query_from_json(const Json& j, const CtbnModel& model);
QuerySpec load_query(const std::string& path, const CtbnModel& model);

ClusterTopology topology_from_json(const Json& j, const CtbnModel& model);
ClusterTopology load_topology(const std::string& path, const CtbnModel& model);

Json trajectories_to_json(const std::vector<Trajectory>& trajectories,
                          std::uint64_t seed, double t_end);

// All report numbers go through this: 6 significant digits, locale-free.
std::string fmt6(double x);
// The same rounding for numbers embedded in JSON reports.
double round6(double x);

}  // namespace ctbn
