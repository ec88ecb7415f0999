#include <cmath>

#include <gtest/gtest.h>

#include "iidwb/transport.hpp"

using namespace iidwb;

TEST(Transport, WorkedExample) {
  // Outcomes x treatments x strata, outcome fastest.
  const ConditionalTable cond(2, 1, 2, {0.8, 0.2, 0.4, 0.6});
  const OutcomeTable out = transport_adjust(cond, {0.5, 0.5});
  // 0.8 * 0.5 + 0.4 * 0.5 rounds to the double just above 0.6.
  EXPECT_NEAR(out.at(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(out.at(1, 0), 0.4, 1e-15);
  EXPECT_NEAR(out.at(0, 0) + out.at(1, 0), 1.0, 1e-9);
}

TEST(Transport, StratumIndependentConditional) {
  const ConditionalTable cond(3, 2, 2, {0.2, 0.3, 0.5, 0.6, 0.3, 0.1, 0.2, 0.3, 0.5, 0.6, 0.3, 0.1});
  const OutcomeTable out = transport_adjust(cond, {0.3, 0.7});
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(out.at(y, t), cond.at(y, t, 0), 1e-15);
}

TEST(Transport, PointMassSelectsSlice) {
  const ConditionalTable cond(2, 2, 3, {0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6, 0.5, 0.5, 0.6, 0.4});
  const OutcomeTable out = transport_adjust(cond, {0.0, 1.0, 0.0});
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t y = 0; y < 2; ++y) EXPECT_EQ(out.at(y, t), cond.at(y, t, 1));
}

TEST(Transport, OutputsAreDistributions) {
  const ConditionalTable cond(3, 2, 2, {0.2, 0.3, 0.5, 0.1, 0.1, 0.8, 0.7, 0.2, 0.1, 0.3, 0.3, 0.4});
  const OutcomeTable out = transport_adjust(cond, {0.25, 0.75});
  for (std::size_t t = 0; t < 2; ++t) {
    double sum = 0.0;
    for (std::size_t y = 0; y < 3; ++y) {
      EXPECT_GE(out.at(y, t), 0.0);
      sum += out.at(y, t);
    }
    EXPECT_NEAR(sum, 1.0, kProbabilityTolerance);
  }
}

TEST(Transport, RejectsBadTables) {
  EXPECT_THROW(ConditionalTable(2, 1, 1, {1.2, -0.2}), std::invalid_argument);
  EXPECT_THROW(ConditionalTable(2, 1, 1, {0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(ConditionalTable(2, 1, 1, {0.5}), std::invalid_argument);
  const ConditionalTable cond(2, 1, 2, {0.8, 0.2, 0.4, 0.6});
  EXPECT_THROW(transport_adjust(cond, {1.0}), std::invalid_argument);
  EXPECT_THROW(transport_adjust(cond, {1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(transport_adjust(cond, {0.5, 0.4}), std::invalid_argument);
}
