#include "iidwb/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iidwb {

Gaussian1D fit_gaussian(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("fit_gaussian: need at least two values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return Gaussian1D{mean, std::sqrt(ss / n)};
}

Gaussian1D fit_gaussian(const EmpiricalSample& sample) { return fit_gaussian(sample.values); }

double frechet_gaussian1d(const Gaussian1D& a, const Gaussian1D& b) noexcept {
  const double dm = a.mean - b.mean;
  const double ds = a.std - b.std;
  return dm * dm + ds * ds;
}

namespace {

// sum_{i,j} |a_i - b_j| for sorted inputs.
double sorted_abs_difference_sum(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> prefix(b.size() + 1, 0.0);
  for (std::size_t j = 0; j < b.size(); ++j) prefix[j + 1] = prefix[j] + b[j];
  const double total_b = prefix.back();
  const double m = static_cast<double>(b.size());
  double acc = 0.0;
  std::size_t k = 0;
  for (double x : a) {
    while (k < b.size() && b[k] <= x) ++k;
    const double below = static_cast<double>(k);
    acc += (x * below - prefix[k]) + ((total_b - prefix[k]) - x * (m - below));
  }
  return acc;
}

}  // namespace

double mean_abs_difference(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mean_abs_difference: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Canonical argument order keeps the result symmetric under swapping.
  if (std::lexicographical_compare(sb.begin(), sb.end(), sa.begin(), sa.end())) std::swap(sa, sb);
  const double pairs = static_cast<double>(sa.size()) * static_cast<double>(sb.size());
  return sorted_abs_difference_sum(sa, sb) / pairs;
}

double energy_distance(std::span<const double> a, std::span<const double> b) {
  const double cross = mean_abs_difference(a, b);
  const double within = mean_abs_difference(a, a) + mean_abs_difference(b, b);
  return std::max(0.0, 2.0 * cross - within);
}

double energy_distance(const EmpiricalSample& a, const EmpiricalSample& b) {
  return energy_distance(a.values, b.values);
}

namespace {

double pairwise_energy_sum(const std::vector<std::span<const double>>& groups) {
  double total = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) total += energy_distance(groups[i], groups[j]);
  return total;
}

}  // namespace

double ksample_equality_test(std::span<const EmpiricalSample> groups,
                             std::size_t num_permutations, Rng& rng) {
  if (groups.size() < 2) throw std::invalid_argument("ksample_equality_test: need at least two groups");
  if (num_permutations < 99)
    throw std::invalid_argument("ksample_equality_test: need at least 99 permutations");
  std::vector<double> pooled;
  std::vector<std::size_t> sizes;
  for (const EmpiricalSample& g : groups) {
    if (g.values.empty()) throw std::invalid_argument("ksample_equality_test: empty group");
    pooled.insert(pooled.end(), g.values.begin(), g.values.end());
    sizes.push_back(g.values.size());
  }

  auto split = [&](const std::vector<double>& values) {
    std::vector<std::span<const double>> parts;
    std::size_t offset = 0;
    for (std::size_t s : sizes) {
      parts.emplace_back(values.data() + offset, s);
      offset += s;
    }
    return parts;
  };

  const double observed = pairwise_energy_sum(split(pooled));
  // Ties count as exceedances; the slack absorbs summation-order rounding.
  const double cutoff = observed - 1e-12 * std::max(1.0, std::abs(observed));

  const std::uint64_t base = rng();
  std::size_t exceed = 0;
  std::vector<double> shuffled(pooled.size());
  for (std::size_t p = 0; p < num_permutations; ++p) {
    Rng local(derive_seed(base, {p}));
    shuffled = pooled;
    std::shuffle(shuffled.begin(), shuffled.end(), local);
    if (pairwise_energy_sum(split(shuffled)) >= cutoff) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(1 + num_permutations);
}

}  // namespace iidwb
