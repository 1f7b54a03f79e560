#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace echoscope::stats {

// Seeded generator with platform-independent derived draws (std distributions
// are implementation-defined, so they are not used for anything that is exported).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n);
  double uniform01();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

// Linear interpolation between order statistics: rank = p/100 * (n - 1).
// Throws InvalidArgument on empty input or p outside [0, 100].
double percentile(std::span<const double> values, double p);

// Sample Pearson correlation. Throws InvalidArgument on a length mismatch or
// fewer than two points and UndefinedResultError on zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Two-sided permutation p-value: (1 + #{|r_perm| >= |r_obs|}) / (1 + permutations).
double pearson_permutation_p(std::span<const double> xs, std::span<const double> ys,
                             std::size_t permutations, std::uint64_t seed);

}  // namespace echoscope::stats
