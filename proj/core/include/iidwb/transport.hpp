#pragma once

#include <cstddef>
#include <vector>

namespace iidwb {

/// Discrete conditional P(outcome | treatment, stratum), stored densely with
/// the outcome bin varying fastest. Each (treatment, stratum) slice is a
/// distribution over outcome bins.
class ConditionalTable {
 public:
  ConditionalTable(std::size_t outcomes, std::size_t treatments, std::size_t strata,
                   std::vector<double> probabilities);

  std::size_t outcomes() const noexcept { return outcomes_; }
  std::size_t treatments() const noexcept { return treatments_; }
  std::size_t strata() const noexcept { return strata_; }

  double at(std::size_t outcome, std::size_t treatment, std::size_t stratum) const;

 private:
  std::size_t outcomes_;
  std::size_t treatments_;
  std::size_t strata_;
  std::vector<double> p_;
};

/// P(outcome | treatment) as an outcomes x treatments table (outcome fastest).
struct OutcomeTable {
  std::size_t outcomes = 0;
  std::size_t treatments = 0;
  std::vector<double> p;

  double at(std::size_t outcome, std::size_t treatment) const {
    return p[treatment * outcomes + outcome];
  }
};

inline constexpr double kProbabilityTolerance = 1e-9;

/// Marginalizes a stratum-specific conditional over the target population's
/// stratum distribution:
///   P'(y | do(t)) = sum_s P'(y | do(t), s) * P'(s).
/// Throws std::invalid_argument on negative entries, slices or marginals that
/// do not sum to one within kProbabilityTolerance, or a stratum count that
/// differs from the marginal's length.
OutcomeTable transport_adjust(const ConditionalTable& conditional,
                              const std::vector<double>& stratum_marginal);

}  // namespace iidwb
