#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iidwb/rng.hpp"

namespace iidwb {

struct Gaussian1D {
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const Gaussian1D&) const = default;
};

/// Raw scalar draws from one group (typically one environment).
struct EmpiricalSample {
  std::vector<double> values;
  int label = 0;
};

/// Moment-matched Gaussian: arithmetic mean and population (MLE) std.
/// Throws std::invalid_argument for fewer than two values.
Gaussian1D fit_gaussian(const EmpiricalSample& sample);
Gaussian1D fit_gaussian(std::span<const double> values);

/// Squared 2-Wasserstein distance between two 1-D Gaussians, which is the
/// Frechet distance behind FID: (ma - mb)^2 + (sa - sb)^2.
double frechet_gaussian1d(const Gaussian1D& a, const Gaussian1D& b) noexcept;

/// Mean of |a_i - b_j| over all pairs, O((n + m) log(n + m)). Symmetric in its
/// arguments bit for bit.
double mean_abs_difference(std::span<const double> a, std::span<const double> b);

/// V-statistic energy distance 2 E|A - B| - E|A - A'| - E|B - B'| over all
/// pairs. Nonnegative up to rounding; exactly zero for identical inputs.
double energy_distance(const EmpiricalSample& a, const EmpiricalSample& b);
double energy_distance(std::span<const double> a, std::span<const double> b);

/// Permutation test of equal distributions across k >= 2 groups. The
/// statistic is the sum of pairwise energy distances; permutations shuffle
/// group membership with sizes fixed. Returns
///   (1 + #{permuted >= observed}) / (1 + num_permutations).
/// Permutation p draws from a generator seeded by (base, p), where base is
/// one draw from `rng`, so the result does not depend on evaluation order.
double ksample_equality_test(std::span<const EmpiricalSample> groups,
                             std::size_t num_permutations, Rng& rng);

}  // namespace iidwb
