#include "iidwb/scm.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace iidwb {

namespace {

void check_gen_config(const GenConfig& cfg) {
  if (cfg.nodes_min < 1 || cfg.nodes_min > cfg.nodes_max)
    throw std::invalid_argument("GenConfig: need 1 <= nodes_min <= nodes_max");
  if (!(cfg.edge_prob >= 0.0 && cfg.edge_prob <= 1.0))
    throw std::invalid_argument("GenConfig: edge_prob must lie in [0, 1]");
  if (!(cfg.sign_flip_prob >= 0.0 && cfg.sign_flip_prob <= 1.0))
    throw std::invalid_argument("GenConfig: sign_flip_prob must lie in [0, 1]");
  if (!(cfg.weight_min > 0.0 && cfg.weight_min <= cfg.weight_max))
    throw std::invalid_argument("GenConfig: need 0 < weight_min <= weight_max");
  if (!(cfg.noise_std_min > 0.0 && cfg.noise_std_min <= cfg.noise_std_max))
    throw std::invalid_argument("GenConfig: need 0 < noise_std_min <= noise_std_max");
  if (!(cfg.intervention_value_min <= cfg.intervention_value_max))
    throw std::invalid_argument(
        "GenConfig: need intervention_value_min <= intervention_value_max");
}

double draw_weight(const GenConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> magnitude(cfg.weight_min, cfg.weight_max);
  std::bernoulli_distribution flip(cfg.sign_flip_prob);
  const double w = magnitude(rng);
  return flip(rng) ? -w : w;
}

// Adds sum_i coefficients[i] * rows.row(i) in ascending i. Both the loading
// recursion and residual_moments go through here so that identical
// coefficient vectors produce bit-identical sums.
Eigen::RowVectorXd weighted_row_sum(const Eigen::RowVectorXd& coefficients,
                                    const Eigen::MatrixXd& rows) {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(rows.cols());
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    const double c = coefficients[i];
    if (c == 0.0) continue;
    for (Eigen::Index k = 0; k < rows.cols(); ++k) acc[k] += c * rows(i, k);
  }
  return acc;
}

}  // namespace

LinearGaussianScm::LinearGaussianScm(std::size_t num_observed, std::size_t num_latent,
                                     Eigen::MatrixXd weights, Eigen::VectorXd noise_means,
                                     Eigen::VectorXd noise_stds,
                                     std::vector<NodeId> topo_order)
    : num_observed_(num_observed),
      num_latent_(num_latent),
      weights_(std::move(weights)),
      noise_means_(std::move(noise_means)),
      noise_stds_(std::move(noise_stds)),
      topo_order_(std::move(topo_order)) {
  const auto n = static_cast<Eigen::Index>(num_nodes());
  if (num_observed_ < 1) throw std::invalid_argument("SCM needs at least the outcome node");
  if (weights_.rows() != n || weights_.cols() != n)
    throw std::invalid_argument("SCM weight matrix must be square over all nodes");
  if (noise_means_.size() != n || noise_stds_.size() != n)
    throw std::invalid_argument("SCM noise vectors must have one entry per node");
  if (!weights_.allFinite() || !noise_means_.allFinite() || !noise_stds_.allFinite())
    throw std::invalid_argument("SCM parameters must be finite");
  if (!is_valid_topological_order(weights_, topo_order_))
    throw std::invalid_argument("SCM topological order is inconsistent with its edges");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (noise_stds_[j] < 0.0) throw std::invalid_argument("SCM noise std must be >= 0");
    if (noise_stds_[j] == 0.0 && (weights_.row(j).array() != 0.0).any())
      throw std::invalid_argument("SCM node with zero noise std must have no parents");
  }
  for (std::size_t latent = num_observed_; latent < num_nodes(); ++latent) {
    const auto li = static_cast<Eigen::Index>(latent);
    for (std::size_t obs = 0; obs < num_observed_; ++obs) {
      if (weights_(li, static_cast<Eigen::Index>(obs)) != 0.0)
        throw std::invalid_argument("latent confounders must be root causes");
    }
  }
}

bool LinearGaussianScm::operator==(const LinearGaussianScm& other) const {
  return num_observed_ == other.num_observed_ && num_latent_ == other.num_latent_ &&
         weights_ == other.weights_ && noise_means_ == other.noise_means_ &&
         noise_stds_ == other.noise_stds_ && topo_order_ == other.topo_order_;
}

bool is_valid_topological_order(const Eigen::MatrixXd& weights,
                                std::span<const NodeId> order) {
  const auto n = static_cast<std::size_t>(weights.rows());
  if (order.size() != n || static_cast<std::size_t>(weights.cols()) != n) return false;
  std::vector<std::size_t> position(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    if (order[p] >= n || position[order[p]] != n) return false;
    position[order[p]] = p;
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) != 0.0 &&
          position[i] >= position[j])
        return false;
    }
  }
  return true;
}

LinearGaussianScm random_scm(const GenConfig& cfg, Rng& rng) {
  check_gen_config(cfg);
  std::uniform_int_distribution<std::size_t> node_count(cfg.nodes_min, cfg.nodes_max);
  std::bernoulli_distribution edge(cfg.edge_prob);
  std::uniform_real_distribution<double> noise_std(cfg.noise_std_min, cfg.noise_std_max);

  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const std::size_t n = node_count(rng);
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end() - 1, NodeId{1});
    std::shuffle(order.begin(), order.end() - 1, rng);
    order.back() = kOutcome;

    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(ni, ni);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (edge(rng)) {
          weights(static_cast<Eigen::Index>(order[b]), static_cast<Eigen::Index>(order[a])) =
              draw_weight(cfg, rng);
        }
      }
    }
    Eigen::VectorXd stds(ni);
    for (Eigen::Index j = 0; j < ni; ++j) stds[j] = noise_std(rng);

    if (cfg.require_outcome_parent && (weights.row(kOutcome).array() == 0.0).all()) continue;
    return LinearGaussianScm(n, 0, std::move(weights), Eigen::VectorXd::Zero(ni),
                             std::move(stds), std::move(order));
  }
  throw std::runtime_error("random_scm: no DAG satisfying the outcome-parent requirement after " +
                           std::to_string(cfg.max_attempts) + " attempts");
}

LinearGaussianScm random_scm(const GenConfig& cfg) {
  Rng rng = make_rng(cfg.seed);
  return random_scm(cfg, rng);
}

void validate_environment(const LinearGaussianScm& scm, const Environment& env) {
  std::set<NodeId> seen;
  for (const Intervention& iv : env.interventions) {
    if (iv.target >= scm.num_nodes())
      throw std::invalid_argument("intervention target out of range: " +
                                  std::to_string(iv.target));
    if (iv.target == kOutcome)
      throw std::invalid_argument("interventions on the outcome node are not allowed");
    if (scm.is_latent(iv.target))
      throw std::invalid_argument("interventions on latent nodes are not allowed");
    if (!std::isfinite(iv.value))
      throw std::invalid_argument("intervention value must be finite");
    if (!seen.insert(iv.target).second)
      throw std::invalid_argument("environment " + std::to_string(env.id) +
                                  " intervenes twice on node " + std::to_string(iv.target));
  }
}

LinearGaussianScm intervene(const LinearGaussianScm& scm, const Environment& env) {
  validate_environment(scm, env);
  if (env.interventions.empty()) return scm;
  Eigen::MatrixXd weights = scm.weights();
  Eigen::VectorXd means = scm.noise_means();
  Eigen::VectorXd stds = scm.noise_stds();
  for (const Intervention& iv : env.interventions) {
    const auto t = static_cast<Eigen::Index>(iv.target);
    weights.row(t).setZero();
    stds[t] = 0.0;
    means[t] = iv.value;
  }
  return LinearGaussianScm(scm.num_observed(), scm.num_latent(), std::move(weights),
                           std::move(means), std::move(stds), scm.topo_order());
}

SampleBatch sample(const LinearGaussianScm& scm, const Environment& env, std::size_t n,
                   Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  const LinearGaussianScm model = intervene(scm, env);
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(model.num_nodes()));
  std::normal_distribution<double> normal(0.0, 1.0);

  for (NodeId node : model.topo_order()) {
    const auto j = static_cast<Eigen::Index>(node);
    const double mean = model.noise_means()[j];
    const double std = model.noise_stds()[j];
    if (std == 0.0) {
      x.col(j).setConstant(mean);
      continue;
    }
    Eigen::VectorXd col = x * model.weights().row(j).transpose();
    for (Eigen::Index r = 0; r < rows; ++r) col[r] += mean + std * normal(rng);
    x.col(j) = col;
  }
  return SampleBatch{env, x.leftCols(static_cast<Eigen::Index>(model.num_observed()))};
}

Eigen::MatrixXd noise_loadings(const LinearGaussianScm& scm) {
  const auto n = static_cast<Eigen::Index>(scm.num_nodes());
  Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(n, n);
  for (NodeId node : scm.topo_order()) {
    const auto j = static_cast<Eigen::Index>(node);
    Eigen::RowVectorXd row = weighted_row_sum(scm.weights().row(j), loadings);
    row[j] += 1.0;
    loadings.row(j) = row;
  }
  return loadings;
}

Moments analytic_moments(const LinearGaussianScm& scm, const Environment& env) {
  const LinearGaussianScm model = intervene(scm, env);
  const Eigen::MatrixXd loadings = noise_loadings(model);
  const auto obs = static_cast<Eigen::Index>(model.num_observed());
  const Eigen::MatrixXd observed = loadings.topRows(obs);
  const Eigen::VectorXd variances = model.noise_stds().array().square();

  Moments m;
  m.mean = observed * model.noise_means();
  m.covariance = observed * variances.asDiagonal() * observed.transpose();
  return m;
}

ScalarMoments residual_moments(const LinearGaussianScm& scm, const Environment& env,
                               const Eigen::VectorXd& coefficients) {
  const auto obs = static_cast<Eigen::Index>(scm.num_observed());
  if (coefficients.size() != obs)
    throw std::invalid_argument("residual_moments: one coefficient per observed node required");
  if (coefficients[kOutcome] != 0.0)
    throw std::invalid_argument("residual_moments: coefficient of the outcome must be zero");

  const LinearGaussianScm model = intervene(scm, env);
  const Eigen::MatrixXd loadings = noise_loadings(model);
  Eigen::RowVectorXd full = Eigen::RowVectorXd::Zero(loadings.rows());
  full.head(obs) = coefficients.transpose();
  const Eigen::RowVectorXd residual = loadings.row(kOutcome) - weighted_row_sum(full, loadings);

  ScalarMoments out;
  for (Eigen::Index k = 0; k < residual.size(); ++k) {
    if (residual[k] == 0.0) continue;
    out.mean += residual[k] * model.noise_means()[k];
    out.variance += residual[k] * residual[k] * model.noise_stds()[k] * model.noise_stds()[k];
  }
  return out;
}

LinearGaussianScm add_confounders(const LinearGaussianScm& scm, int count, Rng& rng,
                                  const GenConfig& weights_like) {
  if (count < 0 || count > 2) throw std::invalid_argument("add_confounders: count must be 0, 1 or 2");
  if (count == 0) return scm;
  if (scm.num_observed() < 2)
    throw std::invalid_argument("add_confounders: need at least two observed nodes");

  const auto old_n = static_cast<Eigen::Index>(scm.num_nodes());
  const auto new_n = old_n + count;
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(new_n, new_n);
  weights.topLeftCorner(old_n, old_n) = scm.weights();
  Eigen::VectorXd means = Eigen::VectorXd::Zero(new_n);
  means.head(old_n) = scm.noise_means();
  Eigen::VectorXd stds = Eigen::VectorXd::Ones(new_n);
  stds.head(old_n) = scm.noise_stds();

  std::uniform_int_distribution<NodeId> other(1, scm.num_observed() - 1);
  std::vector<NodeId> order;
  for (int c = 0; c < count; ++c) {
    const Eigen::Index latent = old_n + c;
    const auto partner = static_cast<Eigen::Index>(other(rng));
    weights(kOutcome, latent) = draw_weight(weights_like, rng);
    weights(partner, latent) = draw_weight(weights_like, rng);
    order.push_back(static_cast<NodeId>(latent));
  }
  order.insert(order.end(), scm.topo_order().begin(), scm.topo_order().end());
  return LinearGaussianScm(scm.num_observed(), scm.num_latent() + static_cast<std::size_t>(count),
                           std::move(weights), std::move(means), std::move(stds),
                           std::move(order));
}

NodeSet parents(const LinearGaussianScm& scm, NodeId node) {
  if (node >= scm.num_nodes()) throw std::out_of_range("parents: node out of range");
  NodeSet out;
  for (NodeId i = 0; i < scm.num_observed(); ++i) {
    if (scm.weights()(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(i)) != 0.0)
      out.insert(i);
  }
  return out;
}

NodeSet descendants(const LinearGaussianScm& scm, NodeId node) {
  if (node >= scm.num_nodes()) throw std::out_of_range("descendants: node out of range");
  NodeSet out;
  std::vector<NodeId> stack{node};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    for (NodeId child = 0; child < scm.num_nodes(); ++child) {
      if (scm.weights()(static_cast<Eigen::Index>(child), static_cast<Eigen::Index>(cur)) != 0.0 &&
          out.insert(child).second)
        stack.push_back(child);
    }
  }
  return out;
}

std::vector<Environment> single_target_environments(const LinearGaussianScm& scm,
                                                    const GenConfig& cfg, Rng& rng,
                                                    bool observational) {
  std::uniform_real_distribution<double> value(cfg.intervention_value_min,
                                               cfg.intervention_value_max);
  std::vector<Environment> envs;
  for (NodeId j = 1; j < scm.num_observed(); ++j) {
    envs.push_back(Environment{static_cast<int>(j), {Intervention{j, value(rng)}}});
  }
  if (observational) envs.push_back(Environment{0, {}});
  return envs;
}

LinearGaussianScm four_node_example() {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  w(0, 1) = 1.5;
  w(0, 2) = -1.0;
  w(3, 0) = 1.2;
  return LinearGaussianScm(4, 0, w, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4),
                           {1, 2, 0, 3});
}

void write_batches_csv(std::ostream& out, std::span<const SampleBatch> batches) {
  if (batches.empty()) return;
  const Eigen::Index cols = batches.front().cols();
  out << "env";
  for (Eigen::Index j = 0; j < cols; ++j) out << ",x" << j;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const SampleBatch& b : batches) {
    if (b.cols() != cols) throw std::invalid_argument("write_batches_csv: column layout mismatch");
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      out << b.env.id;
      for (Eigen::Index j = 0; j < cols; ++j) out << ',' << b.data(r, j);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace iidwb
