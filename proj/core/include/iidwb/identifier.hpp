#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "iidwb/distributions.hpp"
#include "iidwb/regressor.hpp"
#include "iidwb/rng.hpp"
#include "iidwb/scm.hpp"

namespace iidwb {

enum class RoundPhase { eliminate, prune };

/// One train-evaluate-decide cycle of the identifier.
struct RoundRecord {
  RoundPhase phase = RoundPhase::eliminate;
  PenaltyWeights mask{0};      // mask in force when the round started
  std::vector<double> fids;    // slot j-1: FID(e_j vs rest) under `mask`
  double tau = 0.0;
  std::optional<NodeId> candidate;  // candidate considered for a penalty
  bool penalized = false;           // whether `candidate` was switched off
};

struct IdentificationResult {
  NodeSet estimated_set;
  PenaltyWeights final_weights{0};
  std::vector<RoundRecord> fid_trace;
  std::size_t rounds_run = 0;
};

/// argmax over (candidate, fid) if the maximum exceeds tau; ties go to the
/// smallest candidate index.
std::optional<NodeId> penalty_step(std::span<const std::pair<NodeId, double>> fids, double tau);

/// Per-candidate FID between the residual scores of environment e_j and the
/// pooled scores of every other environment. `env_of[j-1]` indexes the
/// holdout sample of candidate j's environment within `scores`.
std::vector<double> environment_fids(std::span<const EmpiricalSample> scores,
                                     std::span<const std::size_t> env_of);

/// tau_factor times the median, over label permutations of the pooled
/// scores, of the largest per-candidate FID.
double calibrate_threshold(std::span<const EmpiricalSample> scores,
                           std::span<const std::size_t> env_of, double tau_factor,
                           std::size_t permutations, Rng& rng);

/// Estimates the parents of x0 from one batch per single-target environment.
///
/// Every round trains phi' o phi on the pooled training rows and scores the
/// held-out rows of each environment. Elimination: while the largest FID
/// among active candidates exceeds tau and switching that candidate off
/// lowers the largest FID, it is penalized. Pruning: each remaining
/// candidate is switched off in turn if doing so raises no environment's FID
/// by more than tau. The surviving mask is the estimate. An infinite tau
/// disables penalties altogether.
///
/// Throws std::invalid_argument if a candidate lacks a single-target
/// environment, two batches share an environment id or target, or a batch is
/// too small to split; training divergence propagates as DivergenceError.
IdentificationResult identify_parents(std::span<const SampleBatch> batches,
                                      const TrainConfig& cfg, Rng& rng);

}  // namespace iidwb
