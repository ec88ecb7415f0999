#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "iidwb/regressor.hpp"

using namespace iidwb;

namespace {

LinearGaussianScm chain() {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
  W(0, 1) = 2.0;
  return LinearGaussianScm(2, 0, W, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), {1, 0});
}

std::vector<SampleBatch> draw(const LinearGaussianScm& scm, std::size_t n, Rng& rng) {
  return {sample(scm, Environment{0, {}}, n, rng), sample(scm, Environment{1, {{1, 4.0}}}, n, rng)};
}

// phi'(x) = slope * x1 + intercept, as a network with a silent hidden unit.
Regressor affine(double slope, double intercept) {
  Regressor r;
  r.input_mean = Eigen::RowVectorXd::Zero(1);
  r.input_basis = Eigen::MatrixXd::Identity(1, 1);
  r.hidden_weights = Eigen::MatrixXd::Zero(1, 1);
  r.hidden_bias = Eigen::VectorXd::Zero(1);
  r.output_weights = Eigen::VectorXd::Zero(1);
  r.skip_weights = Eigen::VectorXd::Constant(1, slope);
  r.output_bias = intercept;
  return r;
}

}  // namespace

TEST(PenaltyWeights, MaskBookkeeping) {
  PenaltyWeights w(4);
  EXPECT_EQ(w.support(), (NodeSet{1, 2, 3, 4}));
  w.penalize(3);
  EXPECT_FALSE(w.active(3));
  EXPECT_EQ(w.support(), (NodeSet{1, 2, 4}));
  EXPECT_EQ(w.as_row(), (Eigen::RowVectorXd(4) << 1, 1, 0, 1).finished());
  EXPECT_THROW(w.penalize(5), std::out_of_range);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  cfg.learning_rate = 0.0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.hidden_width = 0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.holdout_fraction = 1.0;
  EXPECT_THROW(validate(cfg), std::invalid_argument);
}

TEST(MaskedCandidates, ZeroesPenalizedColumns) {
  Rng rng = make_rng(1);
  const SampleBatch b = sample(four_node_example(), Environment{}, 5, rng);
  PenaltyWeights w(3);
  w.penalize(2);
  const Eigen::MatrixXd x = masked_candidates(b, w);
  ASSERT_EQ(x.cols(), 3);
  EXPECT_EQ(x.col(0), b.data.col(1));
  EXPECT_EQ(x.col(1).squaredNorm(), 0.0);
  EXPECT_EQ(x.col(2), b.data.col(3));
}

TEST(TrainRegressor, AllMaskedPredictsPooledMean) {
  Rng rng = make_rng(2);
  const auto train = draw(chain(), 3000, rng);
  const auto holdout = draw(chain(), 3000, rng);
  PenaltyWeights w(1);
  w.penalize(1);
  const Regressor reg = train_regressor(train, w, TrainConfig{}, rng);
  Eigen::VectorXd x0(6000);
  x0 << holdout[0].data.col(0), holdout[1].data.col(0);
  const double var = (x0.array() - x0.mean()).square().mean();
  EXPECT_LE(mean_squared_error(reg, w, holdout), 1.05 * var);
}

TEST(TrainRegressor, ChainReachesNoiseFloor) {
  Rng rng = make_rng(3);
  const auto train = draw(chain(), 3000, rng);
  const auto holdout = draw(chain(), 3000, rng);
  const PenaltyWeights w(1);
  const Regressor reg = train_regressor(train, w, TrainConfig{}, rng);
  EXPECT_TRUE(reg.is_finite());
  EXPECT_NEAR(mean_squared_error(reg, w, holdout), 1.0, 0.1);

  double mean_abs = 0.0;
  for (const SampleBatch& b : holdout) {
    const EmpiricalSample s = residual_scores(reg, w, b);
    EXPECT_EQ(s.label, b.env.id);
    for (double v : s.values) mean_abs += v;
  }
  mean_abs /= 6000.0;
  const double folded = std::sqrt(2.0 / std::numbers::pi);
  EXPECT_NEAR(mean_abs, folded, 0.2 * folded);
}

TEST(TrainRegressor, SameSeedSameParameters) {
  Rng data = make_rng(4);
  const auto train = draw(four_node_example(), 500, data);
  const PenaltyWeights w(3);
  Rng a = make_rng(5);
  Rng b = make_rng(5);
  const Regressor ra = train_regressor(train, w, TrainConfig{}, a);
  const Regressor rb = train_regressor(train, w, TrainConfig{}, b);
  EXPECT_EQ(ra.hidden_weights, rb.hidden_weights);
  EXPECT_EQ(ra.hidden_bias, rb.hidden_bias);
  EXPECT_EQ(ra.output_weights, rb.output_weights);
  EXPECT_EQ(ra.skip_weights, rb.skip_weights);
  EXPECT_EQ(ra.output_bias, rb.output_bias);
}

TEST(TrainRegressor, RejectsMismatchedBatches) {
  Rng rng = make_rng(6);
  std::vector<SampleBatch> batches = draw(chain(), 10, rng);
  batches.push_back(sample(four_node_example(), Environment{}, 10, rng));
  EXPECT_THROW(train_regressor(batches, PenaltyWeights(1), TrainConfig{}, rng), std::invalid_argument);
  EXPECT_THROW(train_regressor({}, PenaltyWeights(1), TrainConfig{}, rng), std::invalid_argument);
}

TEST(ResidualScores, PerfectPredictorOnNoiselessData) {
  SampleBatch b{Environment{3, {}}, Eigen::MatrixXd(4, 2)};
  b.data << 2.0, 1.0, -4.0, -2.0, 0.0, 0.0, 7.0, 3.5;
  const EmpiricalSample s = residual_scores(affine(2.0, 0.0), PenaltyWeights(1), b);
  EXPECT_EQ(s.label, 3);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(ResidualScores, ConstantPredictorOnConstantTarget) {
  SampleBatch b{Environment{1, {}}, Eigen::MatrixXd(3, 2)};
  b.data << 1.5, 0.3, 1.5, -2.0, 1.5, 9.0;
  PenaltyWeights w(1);
  w.penalize(1);
  const EmpiricalSample s = residual_scores(affine(5.0, 1.5), w, b);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}
