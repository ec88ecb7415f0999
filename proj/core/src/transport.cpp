#include "iidwb/transport.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace iidwb {

namespace {

void check_entries(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument(std::string(what) + ": entries must be finite and nonnegative");
  }
}

}  // namespace

ConditionalTable::ConditionalTable(std::size_t outcomes, std::size_t treatments,
                                   std::size_t strata, std::vector<double> probabilities)
    : outcomes_(outcomes), treatments_(treatments), strata_(strata), p_(std::move(probabilities)) {
  if (outcomes_ == 0 || treatments_ == 0 || strata_ == 0)
    throw std::invalid_argument("ConditionalTable: all dimensions must be positive");
  if (p_.size() != outcomes_ * treatments_ * strata_)
    throw std::invalid_argument("ConditionalTable: size does not match dimensions");
  check_entries(p_, "ConditionalTable");
  for (std::size_t s = 0; s < strata_; ++s) {
    for (std::size_t t = 0; t < treatments_; ++t) {
      double total = 0.0;
      for (std::size_t y = 0; y < outcomes_; ++y) total += at(y, t, s);
      if (std::abs(total - 1.0) > kProbabilityTolerance)
        throw std::invalid_argument("ConditionalTable: slice (treatment " + std::to_string(t) +
                                    ", stratum " + std::to_string(s) + ") does not sum to 1");
    }
  }
}

double ConditionalTable::at(std::size_t outcome, std::size_t treatment,
                            std::size_t stratum) const {
  return p_[(stratum * treatments_ + treatment) * outcomes_ + outcome];
}

OutcomeTable transport_adjust(const ConditionalTable& conditional,
                              const std::vector<double>& stratum_marginal) {
  if (stratum_marginal.size() != conditional.strata())
    throw std::invalid_argument("transport_adjust: marginal has " +
                                std::to_string(stratum_marginal.size()) +
                                " strata, conditional has " +
                                std::to_string(conditional.strata()));
  check_entries(stratum_marginal, "transport_adjust marginal");
  double mass = 0.0;
  for (double v : stratum_marginal) mass += v;
  if (std::abs(mass - 1.0) > kProbabilityTolerance)
    throw std::invalid_argument("transport_adjust: marginal does not sum to 1");

  OutcomeTable out{conditional.outcomes(), conditional.treatments(),
                   std::vector<double>(conditional.outcomes() * conditional.treatments(), 0.0)};
  for (std::size_t t = 0; t < conditional.treatments(); ++t) {
    for (std::size_t y = 0; y < conditional.outcomes(); ++y) {
      double acc = 0.0;
      for (std::size_t s = 0; s < conditional.strata(); ++s)
        acc += conditional.at(y, t, s) * stratum_marginal[s];
      out.p[t * out.outcomes + y] = acc;
    }
  }
  return out;
}

}  // namespace iidwb
