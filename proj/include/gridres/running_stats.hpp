#ifndef GRIDRES_RUNNING_STATS_HPP_
#define GRIDRES_RUNNING_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace gridres {

// Welford mean/variance, population statistics.
struct RunningStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double variance() const { return count > 0 ? m2 / static_cast<double>(count) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }

  bool operator==(const RunningStats&) const = default;
};

// per-component Welford statistics for observation scaling
struct VectorRunningStats {
  std::int64_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  VectorRunningStats() = default;
  explicit VectorRunningStats(int dim) : mean(dim, 0.0), m2(dim, 0.0) {}

  int dim() const { return static_cast<int>(mean.size()); }

  void push(const std::vector<double>& x) {
    ++count;
    for (size_t i = 0; i < mean.size(); ++i) {
      double d = x[i] - mean[i];
      mean[i] += d / static_cast<double>(count);
      m2[i] += d * (x[i] - mean[i]);
    }
  }

  // (x - mean) / sqrt(var + eps), clipped to +-clip
  std::vector<double> apply(const std::vector<double>& x, double clip = 5.0,
                            double eps = 1e-8) const {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      double var = count > 0 ? m2[i] / static_cast<double>(count) : 1.0;
      double m = count > 0 ? mean[i] : 0.0;
      out[i] = std::clamp((x[i] - m) / std::sqrt(var + eps), -clip, clip);
    }
    return out;
  }

  bool operator==(const VectorRunningStats&) const = default;
};

}  // namespace gridres

#endif  // GRIDRES_RUNNING_STATS_HPP_
