#include "iidwb/icp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "iidwb/rng.hpp"

namespace iidwb {

namespace {

constexpr double kStabilizer = 1e-10;

struct Summary {
  double n = 0.0;
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

Summary summarize(std::span<const double> v) {
  Summary s;
  s.n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= s.n;
  for (double x : v) s.var += (x - s.mean) * (x - s.mean);
  s.var /= (s.n - 1.0);
  return s;
}

// Solves (G + kStabilizer I) beta = rhs for a centred Gram matrix.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
  const Eigen::Index p = gram.rows();
  if (p == 0) return Eigen::VectorXd(0);
  Eigen::MatrixXd g = gram;
  g.diagonal().array() += kStabilizer;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw RankDeficiencyError("ols_fit: normal equations are not positive definite");
  // A squared pivot at the stabilizer's scale means the data add nothing along
  // that direction.
  const Eigen::VectorXd pivots = Eigen::MatrixXd(llt.matrixL()).diagonal();
  const double floor = std::max(10.0 * kStabilizer, 1e-12 * gram.diagonal().maxCoeff());
  if (!(pivots.array().square().minCoeff() > floor))
    throw RankDeficiencyError("ols_fit: features are rank deficient");
  Eigen::VectorXd beta = llt.solve(rhs);
  if (!beta.allFinite()) throw RankDeficiencyError("ols_fit: non-finite solution");
  return beta;
}

}  // namespace

void validate(const IcpConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("IcpConfig: alpha must lie in (0, 1)");
  if (cfg.max_subsets < 1) throw std::invalid_argument("IcpConfig: max_subsets must be >= 1");
  if (cfg.test == InvarianceTest::energy_permutation && cfg.permutations < 99)
    throw std::invalid_argument("IcpConfig: energy test needs at least 99 permutations");
}

OlsFit ols_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& target) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (target.size() != n) throw std::invalid_argument("ols_fit: row count mismatch");
  if (n < p + 1) throw std::invalid_argument("ols_fit: need rows >= columns + 1");
  const Eigen::RowVectorXd x_mean = features.colwise().mean();
  const double y_mean = target.mean();
  const Eigen::MatrixXd xc = features.rowwise() - x_mean;
  const Eigen::VectorXd yc = target.array() - y_mean;
  OlsFit fit;
  fit.slopes = solve_normal_equations(xc.transpose() * xc, xc.transpose() * yc);
  fit.intercept = y_mean - (p ? x_mean.dot(fit.slopes) : 0.0);
  return fit;
}

double welch_t_pvalue(std::span<const double> a, std::span<const double> b) {
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  const double va = sa.var / sa.n;
  const double vb = sb.var / sb.n;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) return sa.mean == sb.mean ? 1.0 : 0.0;
  const double t = (sa.mean - sb.mean) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (sa.n - 1.0) + vb * vb / (sb.n - 1.0));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

double variance_ratio_pvalue(std::span<const double> a, std::span<const double> b) {
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  if (sa.var == 0.0 && sb.var == 0.0) return 1.0;
  if (sa.var == 0.0 || sb.var == 0.0) return 0.0;
  const double f = sa.var / sb.var;
  const boost::math::fisher_f dist(sa.n - 1.0, sb.n - 1.0);
  const double lower = boost::math::cdf(dist, f);
  const double upper = boost::math::cdf(boost::math::complement(dist, f));
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

double invariance_pvalue(std::span<const EmpiricalSample> residuals, const IcpConfig& cfg,
                         std::uint64_t seed) {
  if (residuals.size() < 2) throw std::invalid_argument("invariance_pvalue: need >= 2 groups");
  for (const EmpiricalSample& g : residuals) {
    if (g.values.size() < 3)
      throw std::invalid_argument("invariance_pvalue: group " + std::to_string(g.label) +
                                  " has fewer than 3 values");
  }
  const auto k = static_cast<double>(residuals.size());
  double min_p = 1.0;
  std::vector<double> rest;
  for (std::size_t e = 0; e < residuals.size(); ++e) {
    rest.clear();
    for (std::size_t o = 0; o < residuals.size(); ++o)
      if (o != e) rest.insert(rest.end(), residuals[o].values.begin(), residuals[o].values.end());
    const std::span<const double> own = residuals[e].values;
    double p = 1.0;
    if (cfg.test == InvarianceTest::mean_variance) {
      p = std::min(1.0, 2.0 * std::min(welch_t_pvalue(own, rest), variance_ratio_pvalue(own, rest)));
    } else {
      const EmpiricalSample groups[2] = {residuals[e], EmpiricalSample{rest, -1}};
      Rng rng(derive_seed(seed, {e}));
      p = ksample_equality_test(groups, cfg.permutations, rng);
    }
    min_p = std::min(min_p, p);
  }
  return std::min(1.0, k * min_p);
}

IcpResult icp_identify(std::span<const SampleBatch> batches, const IcpConfig& cfg) {
  validate(cfg);
  if (batches.size() < 2) throw std::invalid_argument("icp_identify: need >= 2 environments");
  const Eigen::Index cols = batches.front().cols();
  if (cols < 1) throw std::invalid_argument("icp_identify: empty batch");
  const auto l = static_cast<std::size_t>(cols - 1);
  if (l >= 63) throw SubsetBudgetError("icp_identify: too many candidates to enumerate");

  Eigen::Index rows = 0;
  for (const SampleBatch& b : batches) {
    if (b.cols() != cols) throw std::invalid_argument("icp_identify: column layout mismatch");
    rows += b.rows();
  }
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(l));
  Eigen::VectorXd y(rows);
  {
    Eigen::Index offset = 0;
    for (const SampleBatch& b : batches) {
      x.middleRows(offset, b.rows()) = b.data.rightCols(static_cast<Eigen::Index>(l));
      y.segment(offset, b.rows()) = b.data.col(0);
      offset += b.rows();
    }
  }

  const std::size_t max_size = cfg.max_subset_size ? std::min(cfg.max_subset_size, l) : l;
  std::vector<std::uint64_t> subsets;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << l); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) <= max_size) subsets.push_back(mask);
    if (subsets.size() > cfg.max_subsets)
      throw SubsetBudgetError("icp_identify: more than " + std::to_string(cfg.max_subsets) +
                              " subsets to evaluate");
  }
  std::stable_sort(subsets.begin(), subsets.end(), [](std::uint64_t a, std::uint64_t b) {
    return std::popcount(a) < std::popcount(b);
  });

  // Centred pooled Gram matrix shared by every subset regression.
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const Eigen::MatrixXd gram = xc.transpose() * xc;
  const Eigen::VectorXd xty = xc.transpose() * yc;

  IcpResult result;
  std::vector<EmpiricalSample> groups(batches.size());
  for (std::uint64_t mask : subsets) {
    std::vector<Eigen::Index> cols_in;
    NodeSet subset;
    for (std::size_t s = 0; s < l; ++s) {
      if (mask >> s & 1U) {
        cols_in.push_back(static_cast<Eigen::Index>(s));
        subset.insert(s + 1);
      }
    }
    const auto p = static_cast<Eigen::Index>(cols_in.size());
    Eigen::MatrixXd g(p, p);
    Eigen::VectorXd r(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      r[i] = xty[cols_in[static_cast<std::size_t>(i)]];
      for (Eigen::Index j = 0; j < p; ++j)
        g(i, j) = gram(cols_in[static_cast<std::size_t>(i)], cols_in[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd beta = solve_normal_equations(g, r);
    Eigen::VectorXd resid = yc;
    for (Eigen::Index i = 0; i < p; ++i) resid -= beta[i] * xc.col(cols_in[static_cast<std::size_t>(i)]);

    Eigen::Index offset = 0;
    for (std::size_t e = 0; e < batches.size(); ++e) {
      const Eigen::Index n = batches[e].rows();
      groups[e].label = batches[e].env.id;
      groups[e].values.assign(resid.data() + offset, resid.data() + offset + n);
      offset += n;
    }
    const double pv = invariance_pvalue(groups, cfg, derive_seed(cfg.seed, {mask}));
    result.p_values.emplace(subset, pv);
    if (pv > cfg.alpha) result.accepted_subsets.push_back(subset);
  }

  if (!result.accepted_subsets.empty()) {
    NodeSet inter = result.accepted_subsets.front();
    for (const NodeSet& s : result.accepted_subsets) {
      NodeSet next;
      std::set_intersection(inter.begin(), inter.end(), s.begin(), s.end(),
                            std::inserter(next, next.begin()));
      inter = std::move(next);
    }
    result.estimated_set = std::move(inter);
  }
  return result;
}

}  // namespace iidwb
