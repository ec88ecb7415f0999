#include "iidwb/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace iidwb {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs_per_round < 1 || cfg.hidden_width < 1 || cfg.batch_size < 1 ||
      cfg.calibration_permutations < 1)
    throw std::invalid_argument("TrainConfig: counts must be >= 1");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0))
    throw std::invalid_argument("TrainConfig: holdout_fraction must lie in (0, 1)");
  if (!(cfg.penalty_threshold >= 0.0))
    throw std::invalid_argument("TrainConfig: penalty_threshold must be >= 0");
  if (!(cfg.tau_factor > 0.0))
    throw std::invalid_argument("TrainConfig: tau_factor must be positive");
}

NodeSet PenaltyWeights::support() const {
  NodeSet out;
  for (std::size_t s = 0; s < w_.size(); ++s)
    if (w_[s]) out.insert(s + 1);
  return out;
}

Eigen::RowVectorXd PenaltyWeights::as_row() const {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(w_.size()));
  for (std::size_t s = 0; s < w_.size(); ++s) row[static_cast<Eigen::Index>(s)] = w_[s];
  return row;
}

Eigen::MatrixXd masked_candidates(const SampleBatch& batch, const PenaltyWeights& w) {
  const Eigen::Index l = batch.cols() - 1;
  if (l < 0 || static_cast<std::size_t>(l) != w.size())
    throw std::invalid_argument("batch columns do not match the mask length");
  Eigen::MatrixXd x = batch.data.rightCols(l);
  for (Eigen::Index s = 0; s < l; ++s)
    if (!w[static_cast<std::size_t>(s)]) x.col(s).setZero();
  return x;
}

Eigen::VectorXd Regressor::predict(const Eigen::MatrixXd& masked_inputs) const {
  const Eigen::MatrixXd z =
      (masked_inputs.rowwise() - input_mean) * input_basis.transpose();
  const Eigen::MatrixXd hidden =
      ((z * hidden_weights.transpose()).rowwise() + hidden_bias.transpose()).array().tanh();
  Eigen::VectorXd out = hidden * output_weights + z * skip_weights;
  out.array() += output_bias;
  return (out.array() * target_scale + target_mean).matrix();
}

bool Regressor::is_finite() const {
  return input_mean.allFinite() && input_basis.allFinite() && std::isfinite(target_mean) &&
         std::isfinite(target_scale) && hidden_weights.allFinite() && hidden_bias.allFinite() &&
         output_weights.allFinite() && skip_weights.allFinite() && std::isfinite(output_bias);
}

namespace {

struct Pooled {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Pooled pool(std::span<const SampleBatch> batches, const PenaltyWeights& w) {
  if (batches.empty()) throw std::invalid_argument("train_regressor: no batches");
  Eigen::Index rows = 0;
  for (const SampleBatch& b : batches) {
    if (b.cols() != batches.front().cols())
      throw std::invalid_argument("train_regressor: batches have different column layouts");
    rows += b.rows();
  }
  const Eigen::Index l = batches.front().cols() - 1;
  Pooled p{Eigen::MatrixXd(rows, l), Eigen::VectorXd(rows)};
  Eigen::Index offset = 0;
  for (const SampleBatch& b : batches) {
    p.x.middleRows(offset, b.rows()) = masked_candidates(b, w);
    p.y.segment(offset, b.rows()) = b.data.col(0);
    offset += b.rows();
  }
  return p;
}

// Principal-axis whitening; rows of the result map centred inputs to
// unit-variance, uncorrelated coordinates.
Eigen::MatrixXd whitening_basis(const Eigen::MatrixXd& centred) {
  const Eigen::Index l = centred.cols();
  if (l == 0 || centred.rows() < 2) return Eigen::MatrixXd::Zero(0, l);
  const Eigen::MatrixXd cov =
      (centred.transpose() * centred) / static_cast<double>(centred.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < l; ++k)
    if (top > 0.0 && values[k] > 1e-10 * top) keep.push_back(k);
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(keep.size()), l);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Eigen::Index k = keep[r];
    basis.row(static_cast<Eigen::Index>(r)) =
        eig.eigenvectors().col(k).transpose() / std::sqrt(values[k]);
  }
  return basis;
}

}  // namespace

Regressor train_regressor(std::span<const SampleBatch> batches, const PenaltyWeights& w,
                          const TrainConfig& cfg, Rng& rng) {
  validate(cfg);
  const Pooled data = pool(batches, w);
  const Eigen::Index n = data.x.rows();
  if (n < 2) throw std::invalid_argument("train_regressor: need at least two rows");

  Regressor reg;
  reg.input_mean = data.x.colwise().mean();
  const Eigen::MatrixXd centred = data.x.rowwise() - reg.input_mean;
  reg.input_basis = whitening_basis(centred);
  const Eigen::MatrixXd z = centred * reg.input_basis.transpose();
  const Eigen::Index d = z.cols();

  reg.target_mean = data.y.mean();
  const double y_var = (data.y.array() - reg.target_mean).square().mean();
  reg.target_scale = y_var > 0.0 ? std::sqrt(y_var) : 1.0;
  const Eigen::VectorXd y = (data.y.array() - reg.target_mean) / reg.target_scale;

  const auto h = static_cast<Eigen::Index>(cfg.hidden_width);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(d, 1)));
  reg.hidden_weights = Eigen::MatrixXd(h, d);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index k = 0; k < d; ++k) reg.hidden_weights(i, k) = in_scale * normal(rng);
  reg.hidden_bias = Eigen::VectorXd::Zero(h);
  reg.output_weights = Eigen::VectorXd::Zero(h);
  // Whitened inputs are orthonormal, so the least-squares linear path is a
  // projection; SGD starts from it and refines the tanh layer around it.
  reg.skip_weights = z.transpose() * y / static_cast<double>(n);
  reg.output_bias = 0.0;

  // Momentum buffers.
  Eigen::MatrixXd m_hw = Eigen::MatrixXd::Zero(h, d);
  Eigen::VectorXd m_hb = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd m_ow = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd m_sw = Eigen::VectorXd::Zero(d);
  double m_ob = 0.0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t cursor = order.size();
  const auto batch = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.batch_size, order.size()));
  Eigen::MatrixXd zb(batch, d);
  Eigen::VectorXd yb(batch);

  const std::size_t steps = cfg.epochs_per_round;
  // Iterates of the second half are averaged into the returned parameters.
  const std::size_t tail_start = steps / 2;
  Regressor avg = reg;
  for (std::size_t step = 0; step < steps; ++step) {
    if (cursor + static_cast<std::size_t>(batch) > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    for (Eigen::Index r = 0; r < batch; ++r) {
      const Eigen::Index src = order[cursor + static_cast<std::size_t>(r)];
      zb.row(r) = z.row(src);
      yb[r] = y[src];
    }
    cursor += static_cast<std::size_t>(batch);

    const Eigen::MatrixXd hidden =
        ((zb * reg.hidden_weights.transpose()).rowwise() + reg.hidden_bias.transpose())
            .array()
            .tanh();
    Eigen::VectorXd err = hidden * reg.output_weights + zb * reg.skip_weights;
    err.array() += reg.output_bias - yb.array();
    const double loss = err.squaredNorm() / static_cast<double>(batch);
    if (!std::isfinite(loss))
      throw DivergenceError("train_regressor: loss became non-finite at step " +
                            std::to_string(step));

    const Eigen::VectorXd dout = err * (2.0 / static_cast<double>(batch));
    const Eigen::VectorXd g_ow = hidden.transpose() * dout;
    const Eigen::VectorXd g_sw = zb.transpose() * dout;
    const double g_ob = dout.sum();
    const Eigen::MatrixXd dpre =
        ((dout * reg.output_weights.transpose()).array() * (1.0 - hidden.array().square()))
            .matrix();
    const Eigen::MatrixXd g_hw = dpre.transpose() * zb;
    const Eigen::VectorXd g_hb = dpre.colwise().sum().transpose();

    const double progress = static_cast<double>(step) / static_cast<double>(steps);
    const double lr = cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    const double mu = cfg.momentum;
    m_hw = mu * m_hw + g_hw;
    m_hb = mu * m_hb + g_hb;
    m_ow = mu * m_ow + g_ow;
    m_sw = mu * m_sw + g_sw;
    m_ob = mu * m_ob + g_ob;
    reg.hidden_weights -= lr * m_hw;
    reg.hidden_bias -= lr * m_hb;
    reg.output_weights -= lr * m_ow;
    reg.skip_weights -= lr * m_sw;
    reg.output_bias -= lr * m_ob;

    if (step >= tail_start) {
      const double k = 1.0 / static_cast<double>(step - tail_start + 1);
      avg.hidden_weights += k * (reg.hidden_weights - avg.hidden_weights);
      avg.hidden_bias += k * (reg.hidden_bias - avg.hidden_bias);
      avg.output_weights += k * (reg.output_weights - avg.output_weights);
      avg.skip_weights += k * (reg.skip_weights - avg.skip_weights);
      avg.output_bias += k * (reg.output_bias - avg.output_bias);
    }
  }
  reg = std::move(avg);
  if (!reg.is_finite()) throw DivergenceError("train_regressor: parameters became non-finite");
  return reg;
}

EmpiricalSample residual_scores(const Regressor& reg, const PenaltyWeights& w,
                                const SampleBatch& batch) {
  const Eigen::VectorXd pred = reg.predict(masked_candidates(batch, w));
  EmpiricalSample out;
  out.label = batch.env.id;
  out.values.resize(static_cast<std::size_t>(batch.rows()));
  for (Eigen::Index r = 0; r < batch.rows(); ++r)
    out.values[static_cast<std::size_t>(r)] = std::abs(pred[r] - batch.data(r, 0));
  return out;
}

double mean_squared_error(const Regressor& reg, const PenaltyWeights& w,
                          std::span<const SampleBatch> batches) {
  double total = 0.0;
  Eigen::Index rows = 0;
  for (const SampleBatch& b : batches) {
    const Eigen::VectorXd pred = reg.predict(masked_candidates(b, w));
    total += (pred - b.data.col(0)).squaredNorm();
    rows += b.rows();
  }
  if (rows == 0) throw std::invalid_argument("mean_squared_error: no rows");
  return total / static_cast<double>(rows);
}

}  // namespace iidwb
