#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "iidwb/distributions.hpp"
#include "iidwb/rng.hpp"
#include "iidwb/scm.hpp"

namespace iidwb {

/// Hyperparameters of the masked-regression identifier.
struct TrainConfig {
  std::size_t epochs_per_round = 200;  // mini-batch gradient steps per training run
  std::size_t rounds = 0;              // 0: one round per candidate
  std::size_t hidden_width = 16;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 256;
  double penalty_threshold = 0.0;  // absolute tau, used when tau_auto is false
  bool tau_auto = true;
  double tau_factor = 3.0;
  std::size_t calibration_permutations = 20;
  double holdout_fraction = 0.3;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws std::invalid_argument when counts are zero, the learning rate is
/// not positive, or holdout_fraction is outside (0, 1).
void validate(const TrainConfig& cfg);

/// Binary mask over the candidates x1..xl (slot j-1 holds candidate j). A
/// slot can be switched off but never back on.
class PenaltyWeights {
 public:
  explicit PenaltyWeights(std::size_t num_candidates) : w_(num_candidates, 1) {}

  std::size_t size() const noexcept { return w_.size(); }
  bool active(NodeId candidate) const { return w_.at(candidate - 1) != 0; }
  void penalize(NodeId candidate) { w_.at(candidate - 1) = 0; }
  std::uint8_t operator[](std::size_t slot) const { return w_[slot]; }
  NodeSet support() const;
  Eigen::RowVectorXd as_row() const;

  bool operator==(const PenaltyWeights&) const = default;

 private:
  std::vector<std::uint8_t> w_;
};

/// One-hidden-layer regressor x0 ~ phi'(w .* (x1..xl)).
///
/// Masked inputs are centred and whitened with the principal axes of the
/// training inputs (zero-variance directions, including masked columns, are
/// dropped), the target is standardized, and the network is
///   out = v . tanh(A z + b) + u . z + c
/// i.e. a tanh hidden layer plus a direct linear path. Training starts from
/// the least-squares linear path with a silent hidden layer (v = 0).
struct Regressor {
  Eigen::RowVectorXd input_mean;   // 1 x l
  Eigen::MatrixXd input_basis;     // d x l
  double target_mean = 0.0;
  double target_scale = 1.0;
  Eigen::MatrixXd hidden_weights;  // h x d
  Eigen::VectorXd hidden_bias;     // h
  Eigen::VectorXd output_weights;  // h
  Eigen::VectorXd skip_weights;    // d
  double output_bias = 0.0;

  /// Predictions for already-masked candidate rows (n x l).
  Eigen::VectorXd predict(const Eigen::MatrixXd& masked_inputs) const;
  bool is_finite() const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Candidate columns 1..l of a batch multiplied by the mask.
Eigen::MatrixXd masked_candidates(const SampleBatch& batch, const PenaltyWeights& w);

/// Fits the regressor to predict x0 from the masked candidates over all rows
/// of `batches` with mini-batch SGD (momentum, cosine-decayed step size);
/// the returned parameters average the iterates of the second half.
/// Throws DivergenceError if the loss becomes non-finite.
Regressor train_regressor(std::span<const SampleBatch> batches, const PenaltyWeights& w,
                          const TrainConfig& cfg, Rng& rng);

/// |phi'(w .* x) - x0| per row, labelled with the batch's environment id.
EmpiricalSample residual_scores(const Regressor& reg, const PenaltyWeights& w,
                                const SampleBatch& batch);

/// Mean squared error of the regressor on `batches`.
double mean_squared_error(const Regressor& reg, const PenaltyWeights& w,
                          std::span<const SampleBatch> batches);

}  // namespace iidwb
