#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctbn/clustergraph.hpp"
#include "ctbn/intensity.hpp"
#include "ctbn/model.hpp"
#include "ctbn/suffstats.hpp"

namespace ctbn {

// Mutable state of expectation-propagation message passing over one evidence
// segment: cluster potentials, the per-edge message store (overwritten by
// messages in either direction), and per-cluster initial distributions kept
// both on the full cluster space and restricted to the evidence-consistent
// states.
struct ClusterGraphState {
  const CtbnModel* model = nullptr;
  ClusterTopology topo;
  Segment segment;
  std::vector<IntensityFactor> potentials;
  std::vector<IntensityFactor> messages;
  std::vector<PointDistribution> initials_full;
  std::vector<PointDistribution> initials_retained;
  // Last message sent over each edge in each direction, for convergence
  // measurement (low->high and high->low cluster index).
  std::vector<Matrix> prev_low_high;
  std::vector<Matrix> prev_high_low;
};

struct EpRunInfo {
  bool converged = false;
  int sweeps = 0;
  double last_change = 0;
  double residual = 0;
};

// Endpoint (or interior-time) beliefs: one normalized distribution per
// cluster and per sepset, mutually consistent after recalibration.
struct CalibratedPointBeliefs {
  std::vector<PointDistribution> cluster_beliefs;  // full cluster spaces
  std::vector<PointDistribution> sepset_beliefs;   // full sepset spaces
};

using SweepObserver = std::function<void(const ClusterGraphState&, int sweep)>;

// Potentials from evidence-reduced CIMs of assigned variables; zero messages.
ClusterGraphState init_segment(const CtbnModel& model, const ClusterTopology& topo,
                               const std::vector<PointDistribution>& initials_full,
                               const Segment& segment);

// One multiply-marginalize-divide update along edge (i -> j). Returns the max
// entrywise change against the previous message in this direction.
double send_message(ClusterGraphState& state, int i, int j);

// Sweeps the schedule until every message changes by less than `tol`, or the
// sweep budget runs out (reported, not thrown). The observer runs after every
// sweep.
EpRunInfo run_segment_ep(ClusterGraphState& state, double tol, int max_iters,
                         const SweepObserver& observer = nullptr);

// Max disagreement between the two moment-matched sepset views of any edge.
double calibration_residual(const ClusterGraphState& state);

// Cluster/sepset distributions at `dt` from the segment start, recalibrated
// into a coherent set (root = cluster 0).
CalibratedPointBeliefs beliefs_at(const ClusterGraphState& state, double dt);

// beliefs_at the segment end.
CalibratedPointBeliefs endpoint_beliefs(const ClusterGraphState& state);

// One up-down pass of discrete sum-product with sepset division (iterated on
// loopy graphs); beliefs come out normalized and mutually consistent.
void recalibrate_beliefs(CalibratedPointBeliefs& beliefs, const CtbnModel& model,
                         const ClusterTopology& topo);

// Zero evidence-inconsistent entries in every factor containing an observed
// variable, recalibrate, then relabel observed transitions old -> new.
CalibratedPointBeliefs condition_point_evidence(
    const CalibratedPointBeliefs& beliefs, const CtbnModel& model,
    const ClusterTopology& topo, const std::vector<PointOb>& points,
    const std::vector<TransitionOb>& transitions);

// Reassemble the joint distribution represented by calibrated beliefs
// (product of cluster beliefs over product of sepset beliefs; trees only).
PointDistribution assemble_joint(const CalibratedPointBeliefs& beliefs,
                                 const CtbnModel& model, const ClusterTopology& topo);

struct ProbeSpec {
  double t = 0;
  std::vector<std::string> vars;
};

struct FilterOptions {
  double tol = tols().ep_tol;
  int max_iters = tols().ep_max_iters;
  const ClusterTopology* topology = nullptr;  // optional override
  std::vector<ProbeSpec> probes;
  int stats_segment = -1;  // collect per-cluster statistics for this segment
  bool collect_probe_beliefs = false;  // keep recalibrated beliefs per probe
  SweepObserver sweep_observer;
};

struct SegmentReport {
  int index = 0;
  double t_begin = 0, t_end = 0;
  bool converged = true;
  int sweeps = 0;
  double residual = 0;
};

struct FilterResult {
  ClusterTopology topo;
  std::vector<SegmentReport> reports;
  std::vector<PointDistribution> probe_answers;  // aligned with options.probes
  std::vector<CalibratedPointBeliefs> probe_beliefs;  // when requested
  std::vector<SuffStats> segment_stats;          // per cluster, when requested
  CalibratedPointBeliefs final_beliefs;
  bool all_converged = true;
};

// Forward filtering: run segment EP over each evidence segment in turn,
// handing calibrated endpoint beliefs across boundaries and answering
// intra-segment probes from the cluster containing the query variables.
FilterResult run_filter(const CtbnModel& model, const EvidenceTimeline& ev,
                        const FilterOptions& options);

}  // namespace ctbn
