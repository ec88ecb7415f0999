#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "iidwb/scm.hpp"

using namespace iidwb;

namespace {

// x1 -> x0 with weight 2, unit zero-mean noises.
LinearGaussianScm chain(double w = 2.0) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
  W(0, 1) = w;
  return LinearGaussianScm(2, 0, W, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), {1, 0});
}

LinearGaussianScm independent(std::size_t n) {
  std::vector<NodeId> order;
  for (NodeId j = n; j-- > 0;) order.push_back(j);
  return LinearGaussianScm(n, 0, Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n),
                           Eigen::VectorXd::Ones(n), order);
}

Environment single(int id, NodeId target, double value) { return Environment{id, {{target, value}}}; }

}  // namespace

TEST(Scm, ConstructorRejectsInvalidModels) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
  W(0, 1) = 1.0;
  W(1, 0) = 1.0;
  EXPECT_THROW(LinearGaussianScm(2, 0, W, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), {1, 0}),
               std::invalid_argument);
  W(1, 0) = 0.0;
  EXPECT_THROW(LinearGaussianScm(2, 0, W, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), {0, 1}),
               std::invalid_argument);
  Eigen::VectorXd stds = Eigen::VectorXd::Ones(2);
  stds[0] = -1.0;
  EXPECT_THROW(LinearGaussianScm(2, 0, W, Eigen::VectorXd::Zero(2), stds, {1, 0}), std::invalid_argument);
  // A node with parents needs noise.
  stds[0] = 0.0;
  EXPECT_THROW(LinearGaussianScm(2, 0, W, Eigen::VectorXd::Zero(2), stds, {1, 0}), std::invalid_argument);
  // Latent node 2 fed by observed node 1.
  Eigen::MatrixXd W3 = Eigen::MatrixXd::Zero(3, 3);
  W3(2, 1) = 1.0;
  EXPECT_THROW(LinearGaussianScm(2, 1, W3, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3), {1, 2, 0}),
               std::invalid_argument);
}

TEST(RandomScm, TwoNodesFullDensityForcesSingleEdge) {
  GenConfig cfg;
  cfg.nodes_min = cfg.nodes_max = 2;
  cfg.edge_prob = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const LinearGaussianScm scm = random_scm(cfg);
    EXPECT_EQ(scm.num_observed(), 2u);
    EXPECT_NE(scm.weights()(0, 1), 0.0);
    EXPECT_EQ(scm.weights()(1, 0), 0.0);
    EXPECT_EQ(parents(scm, 0), (NodeSet{1}));
  }
}

TEST(RandomScm, SameSeedSameModel) {
  GenConfig cfg;
  cfg.seed = 99;
  EXPECT_TRUE(random_scm(cfg) == random_scm(cfg));
  GenConfig other = cfg;
  other.seed = 100;
  EXPECT_FALSE(random_scm(cfg) == random_scm(other));
}

TEST(RandomScm, TenNodesSeedSeven) {
  GenConfig cfg;
  cfg.nodes_min = cfg.nodes_max = 10;
  cfg.edge_prob = 0.3;
  cfg.seed = 7;
  const LinearGaussianScm scm = random_scm(cfg);
  EXPECT_EQ(scm.num_observed(), 10u);
  EXPECT_TRUE(is_valid_topological_order(scm.weights(), scm.topo_order()));
  EXPECT_FALSE(parents(scm, 0).empty());
}

TEST(RandomScm, UnsatisfiableRequirementFails) {
  GenConfig cfg;
  cfg.edge_prob = 0.0;
  cfg.max_attempts = 5;
  EXPECT_THROW(random_scm(cfg), std::runtime_error);
  cfg.require_outcome_parent = false;
  EXPECT_TRUE(parents(random_scm(cfg), 0).empty());
}

TEST(RandomScm, GeneratedModelsRespectDefaults) {
  const GenConfig cfg;
  Rng rng = make_rng(3);
  for (int k = 0; k < 200; ++k) {
    const LinearGaussianScm scm = random_scm(cfg, rng);
    ASSERT_TRUE(is_valid_topological_order(scm.weights(), scm.topo_order()));
    EXPECT_GE(scm.num_observed(), cfg.nodes_min);
    EXPECT_LE(scm.num_observed(), cfg.nodes_max);
    EXPECT_EQ(scm.topo_order().back(), kOutcome);
    EXPECT_FALSE(parents(scm, 0).empty());
    EXPECT_TRUE(descendants(scm, 0).empty());
    for (Eigen::Index i = 0; i < scm.weights().size(); ++i) {
      const double w = std::abs(scm.weights().data()[i]);
      if (w != 0.0) {
        EXPECT_GE(w, cfg.weight_min);
        EXPECT_LE(w, cfg.weight_max);
      }
    }
    for (NodeId j = 0; j < scm.num_nodes(); ++j) {
      EXPECT_GE(scm.noise_stds()[j], cfg.noise_std_min);
      EXPECT_LE(scm.noise_stds()[j], cfg.noise_std_max);
      EXPECT_EQ(scm.noise_means()[j], 0.0);
    }
  }
}

TEST(Intervene, ChainClampsTargetOnly) {
  const LinearGaussianScm scm = chain();
  const LinearGaussianScm iv = intervene(scm, single(1, 1, 5.0));
  EXPECT_EQ(iv.weights().row(1).squaredNorm(), 0.0);
  EXPECT_EQ(iv.noise_stds()[1], 0.0);
  EXPECT_EQ(iv.noise_means()[1], 5.0);
  EXPECT_EQ(iv.weights().row(0), scm.weights().row(0));
  EXPECT_EQ(iv.noise_stds()[0], scm.noise_stds()[0]);
}

TEST(Intervene, EmptyEnvironmentIsIdentity) {
  const LinearGaussianScm scm = four_node_example();
  EXPECT_TRUE(intervene(scm, Environment{0, {}}) == scm);
}

TEST(Intervene, RejectsIllegalTargets) {
  const LinearGaussianScm scm = four_node_example();
  EXPECT_THROW(intervene(scm, single(1, 0, 1.0)), std::invalid_argument);
  EXPECT_THROW(intervene(scm, single(1, 9, 1.0)), std::invalid_argument);
  EXPECT_THROW(intervene(scm, Environment{1, {{1, 1.0}, {1, 2.0}}}), std::invalid_argument);
  Rng rng = make_rng(1);
  const LinearGaussianScm conf = add_confounders(scm, 1, rng);
  EXPECT_THROW(intervene(conf, single(1, 4, 1.0)), std::invalid_argument);
}

TEST(Sample, InterventionColumnIsPointMass) {
  Rng rng = make_rng(11);
  const double c = 4.321;
  const SampleBatch b = sample(four_node_example(), single(2, 2, c), 1000, rng);
  EXPECT_EQ(b.env.id, 2);
  for (Eigen::Index r = 0; r < b.rows(); ++r) EXPECT_EQ(b.data(r, 2), c);
}

TEST(Sample, PureNoiseMeans) {
  Rng rng = make_rng(12);
  const std::size_t n = 100000;
  const SampleBatch b = sample(independent(5), Environment{}, n, rng);
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    EXPECT_LT(std::abs(b.data.col(j).mean()), 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Sample, ChainOutcomeVariance) {
  Rng rng = make_rng(13);
  const std::size_t n = 100000;
  const SampleBatch b = sample(chain(), Environment{}, n, rng);
  const Eigen::VectorXd x0 = b.data.col(0);
  const double var = (x0.array() - x0.mean()).square().sum() / static_cast<double>(n - 1);
  const double se = 5.0 * std::sqrt(2.0 / static_cast<double>(n - 1));
  EXPECT_LT(std::abs(var - 5.0), 5.0 * se);
}

TEST(Sample, SameSeedSameBatch) {
  Rng a = make_rng(5);
  Rng b = make_rng(5);
  const LinearGaussianScm scm = four_node_example();
  EXPECT_EQ(sample(scm, single(1, 1, 3.0), 50, a).data, sample(scm, single(1, 1, 3.0), 50, b).data);
}

TEST(Sample, LatentColumnsAreDropped) {
  Rng rng = make_rng(6);
  const LinearGaussianScm scm = add_confounders(four_node_example(), 2, rng);
  EXPECT_EQ(scm.num_latent(), 2u);
  EXPECT_EQ(sample(scm, Environment{}, 10, rng).cols(), 4);
}

TEST(AnalyticMoments, IndependentUnitNoise) {
  Eigen::VectorXd means(3);
  means << 1.0, -2.0, 0.5;
  const LinearGaussianScm scm(3, 0, Eigen::MatrixXd::Zero(3, 3), means, Eigen::VectorXd::Ones(3), {2, 1, 0});
  const Moments m = analytic_moments(scm, Environment{});
  EXPECT_EQ(m.mean, means);
  EXPECT_EQ(m.covariance, Eigen::MatrixXd::Identity(3, 3));
}

TEST(AnalyticMoments, ChainByHand) {
  const Moments m = analytic_moments(chain(), Environment{});
  EXPECT_DOUBLE_EQ(m.covariance(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(m.covariance(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m.covariance(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.covariance(1, 1), 1.0);
  const Moments iv = analytic_moments(chain(), single(1, 1, 5.0));
  EXPECT_DOUBLE_EQ(iv.mean[0], 10.0);
  EXPECT_DOUBLE_EQ(iv.covariance(0, 0), 1.0);
  EXPECT_EQ(iv.covariance(1, 1), 0.0);
}

TEST(AnalyticMoments, MatchSamplesWithConfounders) {
  Rng rng = make_rng(21);
  const std::size_t n = 100000;
  for (int k = 0; k < 3; ++k) {
    const LinearGaussianScm scm = add_confounders(random_scm(GenConfig{}, rng), 2, rng);
    const Environment env = single(1, 1, 4.0);
    const Moments m = analytic_moments(scm, env);
    const SampleBatch b = sample(scm, env, n, rng);
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double var = m.covariance(j, j);
      const double mean_hat = b.data.col(j).mean();
      EXPECT_LE(std::abs(mean_hat - m.mean[j]), 5.0 * std::sqrt(var / n) + 1e-12);
      const double var_hat = (b.data.col(j).array() - mean_hat).square().sum() / (n - 1.0);
      EXPECT_LE(std::abs(var_hat - var), 5.0 * var * std::sqrt(2.0 / (n - 1.0)) + 1e-12);
    }
  }
}

TEST(AnalyticMoments, InterventionLocality) {
  Rng rng = make_rng(22);
  for (int k = 0; k < 30; ++k) {
    const LinearGaussianScm scm = add_confounders(random_scm(GenConfig{}, rng), k % 3, rng);
    const Moments base = analytic_moments(scm, Environment{});
    for (NodeId j = 1; j < scm.num_observed(); ++j) {
      const NodeSet desc = descendants(scm, j);
      const Moments m = analytic_moments(scm, single(static_cast<int>(j), j, 5.0));
      for (NodeId a = 0; a < scm.num_observed(); ++a) {
        if (a == j || desc.count(a)) continue;
        EXPECT_EQ(m.mean[a], base.mean[a]);
        for (NodeId b = 0; b < scm.num_observed(); ++b) {
          if (b == j || desc.count(b)) continue;
          EXPECT_EQ(m.covariance(a, b), base.covariance(a, b));
        }
      }
    }
  }
}

TEST(ResidualMoments, TrueParentResidualIsInvariant) {
  Rng rng = make_rng(23);
  GenConfig gen;
  for (int k = 0; k < 20; ++k) {
    const LinearGaussianScm scm = random_scm(gen, rng);
    const Eigen::VectorXd coef = scm.weights().row(0).head(scm.num_observed()).transpose();
    const std::vector<Environment> envs = single_target_environments(scm, gen, rng, true);
    const ScalarMoments ref = residual_moments(scm, envs.front(), coef);
    EXPECT_EQ(ref.mean, scm.noise_means()[0]);
    EXPECT_EQ(ref.variance, scm.noise_stds()[0] * scm.noise_stds()[0]);
    for (const Environment& env : envs) {
      const ScalarMoments m = residual_moments(scm, env, coef);
      EXPECT_EQ(m.mean, ref.mean);
      EXPECT_EQ(m.variance, ref.variance);
    }
  }
}

TEST(AddConfounders, ZeroIsIdentity) {
  Rng rng = make_rng(31);
  const LinearGaussianScm scm = four_node_example();
  EXPECT_TRUE(add_confounders(scm, 0, rng) == scm);
}

TEST(AddConfounders, OneLatentFeedsOutcomeAndOneOther) {
  Rng rng = make_rng(32);
  for (int k = 0; k < 20; ++k) {
    const LinearGaussianScm base = four_node_example();
    const LinearGaussianScm scm = add_confounders(base, 1, rng);
    ASSERT_EQ(scm.num_latent(), 1u);
    const NodeId h = scm.num_observed();
    int edges = 0;
    for (NodeId j = 0; j < scm.num_nodes(); ++j) edges += scm.weights()(j, h) != 0.0;
    EXPECT_EQ(edges, 2);
    EXPECT_NE(scm.weights()(0, h), 0.0);
    EXPECT_EQ(scm.noise_stds()[h], 1.0);
    EXPECT_EQ(scm.weights().topLeftCorner(4, 4), base.weights());
    EXPECT_EQ(parents(scm, 0), parents(base, 0));
  }
}

TEST(AddConfounders, RejectsTinyModelsAndBadCounts) {
  Rng rng = make_rng(33);
  const LinearGaussianScm one(1, 0, Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1),
                              Eigen::VectorXd::Ones(1), {0});
  EXPECT_THROW(add_confounders(one, 1, rng), std::invalid_argument);
  EXPECT_THROW(add_confounders(four_node_example(), 3, rng), std::invalid_argument);
}

TEST(Parents, Examples) {
  EXPECT_EQ(parents(chain(), 0), (NodeSet{1}));
  EXPECT_TRUE(parents(independent(4), 0).empty());
  EXPECT_EQ(parents(four_node_example(), 0), (NodeSet{1, 2}));
  EXPECT_EQ(descendants(four_node_example(), 1), (NodeSet{0, 3}));
}

TEST(Environments, OnePerCandidate) {
  Rng rng = make_rng(41);
  const GenConfig gen;
  const LinearGaussianScm scm = add_confounders(random_scm(gen, rng), 2, rng);
  const std::vector<Environment> envs = single_target_environments(scm, gen, rng);
  ASSERT_EQ(envs.size(), scm.num_observed() - 1);
  for (std::size_t k = 0; k < envs.size(); ++k) {
    EXPECT_EQ(envs[k].id, static_cast<int>(k + 1));
    ASSERT_EQ(envs[k].interventions.size(), 1u);
    EXPECT_EQ(envs[k].interventions[0].target, k + 1);
    EXPECT_GE(envs[k].interventions[0].value, gen.intervention_value_min);
    EXPECT_LE(envs[k].interventions[0].value, gen.intervention_value_max);
  }
  const auto with_obs = single_target_environments(scm, gen, rng, true);
  EXPECT_EQ(with_obs.size(), envs.size() + 1);
}

TEST(BatchesCsv, HeaderAndRows) {
  Rng rng = make_rng(51);
  const SampleBatch b = sample(four_node_example(), single(3, 3, 5.0), 2, rng);
  std::ostringstream out;
  write_batches_csv(out, std::span<const SampleBatch>(&b, 1));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "env,x0,x1,x2,x3");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 2), "3,");
  EXPECT_EQ(line.substr(line.size() - 2), ",5");
}
