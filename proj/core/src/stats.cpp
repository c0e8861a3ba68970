#include "learnstory/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace learnstory::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::optional<double> ols_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<SplitStat> best_split(std::span<const double> ys) {
  const std::size_t n = ys.size();
  if (n < 3) return std::nullopt;
  std::optional<SplitStat> best;
  for (std::size_t t = 1; t < n; ++t) {
    const auto before = ys.first(t);
    const auto after = ys.subspan(t);
    const double mb = mean(before), ma = mean(after);
    double ss = 0.0;
    for (double y : before) ss += (y - mb) * (y - mb);
    for (double y : after) ss += (y - ma) * (y - ma);
    const double pooled = std::sqrt(ss / static_cast<double>(n - 2));
    const double diff = std::fabs(mb - ma);
    double stat;
    if (pooled > 0.0) {
      stat = diff / pooled;
    } else {
      stat = diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (!best || stat > best->statistic) best = SplitStat{t, stat, mb, ma};
  }
  return best;
}

double two_sided_normal_tail(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

}  // namespace learnstory::stats
