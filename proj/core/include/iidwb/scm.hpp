#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iidwb/rng.hpp"

namespace iidwb {

/// Node index into an SCM. Node 0 is always the outcome x0; observed nodes
/// occupy [0, num_observed), latent confounders follow.
using NodeId = std::size_t;
using NodeSet = std::set<NodeId>;

inline constexpr NodeId kOutcome = 0;

/// Parameters of the random DAG generator.
struct GenConfig {
  std::size_t nodes_min = 8;
  std::size_t nodes_max = 12;
  double edge_prob = 0.3;
  double weight_min = 0.5;
  double weight_max = 2.0;
  double sign_flip_prob = 0.5;
  double noise_std_min = 0.7;
  double noise_std_max = 1.5;
  double intervention_value_min = 3.0;
  double intervention_value_max = 7.0;
  std::uint64_t seed = 0;
  bool require_outcome_parent = true;
  std::size_t max_attempts = 1000;

  bool operator==(const GenConfig&) const = default;
};

/// Linear Gaussian structural causal model:
///   x_j = sum_i weights(j, i) * x_i + delta_j,  delta_j ~ N(noise_means[j], noise_stds[j]^2).
///
/// A node with zero noise std must have no parents; that is how a clamped
/// (intervened) node is represented.
class LinearGaussianScm {
 public:
  LinearGaussianScm(std::size_t num_observed, std::size_t num_latent,
                    Eigen::MatrixXd weights, Eigen::VectorXd noise_means,
                    Eigen::VectorXd noise_stds, std::vector<NodeId> topo_order);

  std::size_t num_observed() const noexcept { return num_observed_; }
  std::size_t num_latent() const noexcept { return num_latent_; }
  std::size_t num_nodes() const noexcept { return num_observed_ + num_latent_; }
  bool is_latent(NodeId node) const noexcept { return node >= num_observed_; }

  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& noise_means() const noexcept { return noise_means_; }
  const Eigen::VectorXd& noise_stds() const noexcept { return noise_stds_; }
  const std::vector<NodeId>& topo_order() const noexcept { return topo_order_; }

  bool operator==(const LinearGaussianScm& other) const;

 private:
  std::size_t num_observed_;
  std::size_t num_latent_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd noise_means_;
  Eigen::VectorXd noise_stds_;
  std::vector<NodeId> topo_order_;
};

/// Hard intervention do(x_target := value).
struct Intervention {
  NodeId target = 0;
  double value = 0.0;

  bool operator==(const Intervention&) const = default;
};

/// One data-generating regime. An empty intervention list is observational.
struct Environment {
  int id = 0;
  std::vector<Intervention> interventions;

  bool operator==(const Environment&) const = default;
};

/// n draws over the observed nodes under one environment.
struct SampleBatch {
  Environment env;
  Eigen::MatrixXd data;  // rows = draws, column j = observed node j

  Eigen::Index rows() const noexcept { return data.rows(); }
  Eigen::Index cols() const noexcept { return data.cols(); }
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct ScalarMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// True when `order` is a permutation of all nodes and every nonzero weight
/// points forward in it.
bool is_valid_topological_order(const Eigen::MatrixXd& weights,
                                std::span<const NodeId> order);

/// Draws a random SCM. Node 0 is placed last in topological order. Throws
/// std::runtime_error if the outcome-parent requirement cannot be met within
/// cfg.max_attempts draws.
LinearGaussianScm random_scm(const GenConfig& cfg, Rng& rng);
LinearGaussianScm random_scm(const GenConfig& cfg);

/// Throws std::invalid_argument when `env` targets the outcome, a latent
/// node, a node out of range, or the same node twice.
void validate_environment(const LinearGaussianScm& scm, const Environment& env);

LinearGaussianScm intervene(const LinearGaussianScm& scm, const Environment& env);

/// Ancestral sampling over the intervened SCM; latent columns are dropped.
SampleBatch sample(const LinearGaussianScm& scm, const Environment& env,
                   std::size_t n, Rng& rng);

/// Noise loadings L with x = L * (noise_means + delta) on the intervened
/// SCM, evaluated in topological order.
Eigen::MatrixXd noise_loadings(const LinearGaussianScm& scm);

/// Exact mean and covariance of the observed nodes under `env`.
Moments analytic_moments(const LinearGaussianScm& scm, const Environment& env);

/// Mean and variance of x0 - sum_i coefficients[i] * x_i under `env`, where
/// `coefficients` has one entry per observed node (entry 0 must be zero).
/// When the coefficients equal the outcome's own structural weights the
/// result is bit-identical to the outcome noise moments.
ScalarMoments residual_moments(const LinearGaussianScm& scm, const Environment& env,
                               const Eigen::VectorXd& coefficients);

/// Appends `count` (0, 1 or 2) latent root nodes. Each one feeds node 0 and
/// one uniformly chosen other observed node with weights drawn like regular
/// edges; latent noise is N(0, 1).
LinearGaussianScm add_confounders(const LinearGaussianScm& scm, int count, Rng& rng,
                                  const GenConfig& weights_like = {});

/// Observed parents of `node`.
NodeSet parents(const LinearGaussianScm& scm, NodeId node);

/// Strict descendants of `node` (observed and latent).
NodeSet descendants(const LinearGaussianScm& scm, NodeId node);

/// One single-target environment per non-outcome observed node (id j
/// intervenes on x_j with a value drawn from the configured range). With
/// `observational` an extra environment with id 0 and no interventions is
/// appended.
std::vector<Environment> single_target_environments(const LinearGaussianScm& scm,
                                                    const GenConfig& cfg, Rng& rng,
                                                    bool observational = false);

/// The fixed example x0 <- x1, x2; x3 <- x0 used by the demo.
LinearGaussianScm four_node_example();

/// Writes `env,x0,x1,...` followed by one row per draw.
void write_batches_csv(std::ostream& out, std::span<const SampleBatch> batches);

}  // namespace iidwb
