#pragma once

// Small numeric kernels used by the insight detectors and formative metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace learnstory::stats {

// 64-bit linear congruential generator (Knuth MMIX constants):
//   state' = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
// next32() yields the high 32 bits of the new state. Fully specified so that
// permutation p-values are reproducible across implementations.
class Lcg {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg(std::uint64_t seed) : state_(seed) {}

  std::uint32_t next32() {
    state_ = state_ * kMultiplier + kIncrement;
    return static_cast<std::uint32_t>(state_ >> 32);
  }
  // Uniform in [0, bound) via multiply-shift.
  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next32()) * bound) >> 32);
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates from the back: for i = n-1..1 swap(v[i], v[below(i+1)]).
template <typename T>
void shuffle(std::vector<T>& v, Lcg& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = rng.below(static_cast<std::uint32_t>(i));
    std::swap(v[i - 1], v[j]);
  }
}

double mean(std::span<const double> xs);
// Population standard deviation.
double stddev(std::span<const double> xs);
double median(std::vector<double> xs);

// Ordinary least squares slope of ys against xs; nullopt for < 2 points or
// zero variance in xs.
std::optional<double> ols_slope(std::span<const double> xs, std::span<const double> ys);
// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

// Largest normalized mean shift over all split points (both sides non-empty).
struct SplitStat {
  std::size_t split = 0;  // first index of the suffix
  double statistic = 0.0;
  double mean_before = 0.0;
  double mean_after = 0.0;
};
std::optional<SplitStat> best_split(std::span<const double> ys);

// Two-sided tail probability for a standard normal deviate, 2 * (1 - Phi(z)).
double two_sided_normal_tail(double z);

// Statistics within this tolerance of the observed value count as "at least
// as extreme", so rescaled inputs give identical p-values.
inline constexpr double kTieTolerance = 1e-12;

}  // namespace learnstory::stats
