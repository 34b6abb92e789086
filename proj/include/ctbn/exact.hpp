#pragma once

#include <string>
#include <vector>

#include "ctbn/intensity.hpp"
#include "ctbn/model.hpp"

namespace ctbn {

// Amalgamation of every CIM into the full joint intensity matrix. Throws
// SizeCapError when the joint space exceeds the configured cap.
IntensityFactor joint_intensity(const CtbnModel& model);

// Ground-truth query: filter the full joint distribution through the evidence
// segments and return the normalized marginal of `query_vars` at time t.
PointDistribution exact_query(const CtbnModel& model, const EvidenceTimeline& ev,
                              double t, const std::vector<std::string>& query_vars);

// Probability of the evidence: surviving mass at the horizon end. Observed
// transitions contribute their conditioning only (the transition-density
// factor is a measure-zero rescaling and is omitted).
double evidence_likelihood(const CtbnModel& model, const EvidenceTimeline& ev);

// Log-density of a fully observed trajectory, including the initial-state
// probability. Returns -infinity (with no throw) for transitions the model
// rates as impossible.
double trajectory_log_likelihood(const CtbnModel& model, const Trajectory& traj);

}  // namespace ctbn
