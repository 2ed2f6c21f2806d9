#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gridres/error.hpp"
#include "gridres/metrics.hpp"

namespace gridres {
namespace {

std::mt19937_64 trial_engine(std::uint64_t seed, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

// uniform in [0, 1) from the top 53 bits
double unit_uniform(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<PercolationSample> percolation_curve(const Graph& g, std::span<const double> p_grid,
                                                 int trials, std::uint64_t seed) {
  const int n = g.num_nodes();
  if (n == 0) throw DomainError("percolation on an empty graph");
  if (trials < 1) throw DomainError("at least one trial required");
  for (size_t i = 0; i < p_grid.size(); ++i) {
    if (p_grid[i] < 0.0 || p_grid[i] > 1.0) throw DomainError("p outside [0,1]");
    if (i > 0 && p_grid[i] <= p_grid[i - 1]) throw DomainError("p grid must be increasing");
  }

  const int m = g.num_edges();
  std::vector<double> sum_s(p_grid.size(), 0.0);
  std::vector<double> sum_s2(p_grid.size(), 0.0);
  std::vector<double> u(m);
  std::vector<int> order(m);
  DisjointSets sets(n);

  for (int t = 0; t < trials; ++t) {
    auto eng = trial_engine(seed, t);
    for (int e = 0; e < m; ++e) u[e] = unit_uniform(eng);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return u[a] < u[b]; });
    sets.reset();
    int largest = 1;
    size_t next = 0;
    for (size_t k = 0; k < p_grid.size(); ++k) {
      // edge e is retained at p when u[e] < p
      while (next < order.size() && u[order[next]] < p_grid[k]) {
        auto [a, b] = g.edges()[order[next]];
        largest = std::max(largest, sets.unite(a, b));
        ++next;
      }
      double s = largest;
      sum_s[k] += s;
      sum_s2[k] += s * s;
    }
  }

  std::vector<PercolationSample> out(p_grid.size());
  const double nn = static_cast<double>(n);
  for (size_t k = 0; k < p_grid.size(); ++k) {
    double strength = sum_s[k] / (nn * trials);
    double second = sum_s2[k] / (nn * nn * trials);
    out[k] = {p_grid[k], strength, std::max(0.0, second - strength * strength) / strength};
  }
  return out;
}

double percolation_strength(const Graph& g, double p, int trials, std::uint64_t seed) {
  double grid[] = {p};
  return percolation_curve(g, grid, trials, seed)[0].strength;
}

double susceptibility(const Graph& g, double p, int trials, std::uint64_t seed) {
  double grid[] = {p};
  return percolation_curve(g, grid, trials, seed)[0].susceptibility;
}

double percolation_threshold(const Graph& g, std::span<const double> p_grid, int trials,
                             std::uint64_t seed) {
  if (p_grid.empty()) throw DomainError("empty p grid");
  auto curve = percolation_curve(g, p_grid, trials, seed);
  size_t best = 0;
  for (size_t k = 1; k < curve.size(); ++k) {
    if (curve[k].susceptibility > curve[best].susceptibility) best = k;
  }
  return curve[best].p;
}

std::vector<double> default_percolation_grid(double step) {
  std::vector<double> grid;
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= n; ++i) grid.push_back(std::min(1.0, i * step));
  return grid;
}

}  // namespace gridres
