#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "iidwb/distributions.hpp"
#include "iidwb/scm.hpp"

namespace iidwb {

enum class InvarianceTest { mean_variance, energy_permutation };

struct IcpConfig {
  double alpha = 0.05;
  std::size_t max_subset_size = 0;  // 0: unbounded
  InvarianceTest test = InvarianceTest::mean_variance;
  std::size_t max_subsets = std::size_t{1} << 16;  // enumeration budget
  std::size_t permutations = 199;                  // energy_permutation only
  std::uint64_t seed = 0;                          // energy_permutation only

  bool operator==(const IcpConfig&) const = default;
};

void validate(const IcpConfig& cfg);

struct IcpResult {
  NodeSet estimated_set;
  std::vector<NodeSet> accepted_subsets;
  std::map<NodeSet, double> p_values;
};

struct OlsFit {
  Eigen::VectorXd slopes;
  double intercept = 0.0;
};

class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SubsetBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least squares with intercept via the normal equations on centred
/// features, with 1e-10 added to the diagonal. Throws RankDeficiencyError
/// when the system is singular even after stabilization.
OlsFit ols_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& target);

/// Two-sided Welch t-test p-value for equal means.
double welch_t_pvalue(std::span<const double> a, std::span<const double> b);

/// Two-sided F-test p-value for equal variances.
double variance_ratio_pvalue(std::span<const double> a, std::span<const double> b);

/// Residual invariance across environments. Each environment is compared
/// with the pooled rest; per environment p = min(1, 2 min(p_mean, p_var))
/// for the mean-variance test or the two-sample energy permutation p-value
/// otherwise; the result is the Bonferroni-corrected minimum over
/// environments. Throws std::invalid_argument for fewer than two groups or a
/// group with fewer than three values.
double invariance_pvalue(std::span<const EmpiricalSample> residuals, const IcpConfig& cfg,
                         std::uint64_t seed = 0);

/// Invariant causal prediction over candidates x1..xl: accepts every subset
/// whose pooled-regression residuals pass invariance_pvalue at level alpha
/// and returns the intersection of accepted subsets (empty if none).
/// Throws SubsetBudgetError if enumeration would exceed cfg.max_subsets.
IcpResult icp_identify(std::span<const SampleBatch> batches, const IcpConfig& cfg);

}  // namespace iidwb
