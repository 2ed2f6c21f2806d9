#ifndef GRIDRES_METRICS_HPP_
#define GRIDRES_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridres/feeder.hpp"
#include "gridres/graph.hpp"

namespace gridres {

inline constexpr int kNumMetrics = 5;
using NormalizedMetrics = std::array<double, kNumMetrics>;

struct PathCounts {
  int n_ip = 0;  // isolated paths
  int n_ic = 0;  // isolated combinations
  int n_cc = 0;  // connected combinations

  PathCounts operator+(const PathCounts& o) const {
    return {n_ip + o.n_ip, n_ic + o.n_ic, n_cc + o.n_cc};
  }
  bool operator==(const PathCounts&) const = default;
};

// Raw resilience parameters, ordered (PV_CL, N_CLS, A_RoS, p_m, N_HC).
struct MetricVector {
  double pv_cl = 0.0;
  double n_cls = 0.0;
  double a_ros = 0.0;
  double p_m = 0.0;
  double n_hc = 0.0;

  NormalizedMetrics as_array() const { return {pv_cl, n_cls, a_ros, p_m, n_hc}; }
  bool operator==(const MetricVector&) const = default;
};

struct AhpWeights {
  std::vector<double> w;
  double lambda_max = 0.0;
  double consistency_index = 0.0;
  double consistency_ratio = 0.0;
};

// A supply source taking part in path classification.
struct SupplySource {
  int node_id = 0;
  double rating_kva = 0.0;
};

struct RosPath {
  double source_rating_kva = 0.0;
  double critical_rating_kva = 0.0;
};

// Which critical loads the given sources reach and the RoS terms they form.
struct CriticalSupply {
  std::vector<int> served_critical_ids;
  double served_critical_kva = 0.0;
  // one term per source whose component holds at least one critical load;
  // the component's critical demand is shared in proportion to source ratings
  std::vector<RosPath> ros_paths;
};

// Supply-route taxonomy over the critical loads of `net`:
//  - every critical load covered, all in one component holding >= 2 sources
//    -> one connected combination
//  - every critical load covered, spread over >= 2 components -> one isolated
//    combination
//  - otherwise each covered critical load is an isolated path
PathCounts classify_paths(const Subgraph& sub, const GridNetwork& net,
                          std::span<const SupplySource> sources);
// substation plus every DER as sources
PathCounts classify_paths(const Subgraph& sub, const GridNetwork& net);

CriticalSupply critical_supply(const Subgraph& sub, const GridNetwork& net,
                               std::span<const SupplySource> sources);

// PV_CL = 0.1 N_IP + 0.4 N_IC + 0.5 N_CC
double path_variability(const PathCounts& pc);

double cls_ratio(double served_kva, double total_critical_kva);

double rating_of_service(std::span<const RosPath> paths);

double average_ros(int served, int total, double ros, int num_paths);

// ---- percolation (percolation.cpp)

struct PercolationSample {
  double p = 0.0;
  double strength = 0.0;        // P_inf(p)
  double susceptibility = 0.0;  // chi(p)
};

// Bond percolation by Monte-Carlo with common random numbers: trial i draws one
// uniform per edge from a stream derived from (seed, i), so results for
// different p on the same seed are coupled and the largest-cluster size is
// nondecreasing in p within each trial.
std::vector<PercolationSample> percolation_curve(const Graph& g, std::span<const double> p_grid,
                                                 int trials, std::uint64_t seed);
double percolation_strength(const Graph& g, double p, int trials, std::uint64_t seed);
double susceptibility(const Graph& g, double p, int trials, std::uint64_t seed);
// argmax of the susceptibility over the grid, ties go to the smaller p
double percolation_threshold(const Graph& g, std::span<const double> p_grid, int trials,
                             std::uint64_t seed);
// 0.00, 0.02, ..., 1.00
std::vector<double> default_percolation_grid(double step = 0.02);

// ---- efficiency and centrality

double network_efficiency(const Graph& g);
double information_centrality(const Graph& g, int node);
std::vector<double> information_centralities(const Graph& g);

struct CentralityRule {
  // node counts as high when C_m > mean + num_std * std (population std)
  double num_std = 1.0;
};
int high_centrality_count(const Graph& g, CentralityRule rule = {});
int high_centrality_count(std::span<const double> centralities, CentralityRule rule = {});

// ---- aggregation (ahp.cpp)

// Saaty random index for an n x n matrix
double random_consistency_index(int n);
// principal-eigenvector weights; throws InconsistencyError when CR > max_cr
AhpWeights ahp_weights(const Eigen::MatrixXd& pairwise, double max_cr = 0.1);
// 5x5 matrix, whitespace separated, entries may be written as a/b
Eigen::MatrixXd parse_pairwise_matrix(std::string_view text);
// (0.2, 0.3, 0.15, 0.2, 0.15)
AhpWeights default_metric_weights();
AhpWeights metric_weights_from_values(std::span<const double> w);

// Per-component min-max scaling; a component equal across all vectors maps to 0.5.
std::vector<NormalizedMetrics> normalize_metrics(std::span<const MetricVector> raws);

double resilience_score(const NormalizedMetrics& normalized, const AhpWeights& w);

// R_C = R_max + (1 - R_max) * sum_a w_a R_a over the non-maximal configurations.
// Empty weights mean equal weights summing to one.
double composite_score(std::span<const double> scores, std::span<const double> weights = {});

// ---- operating limits

struct DerDispatch {
  int node = 0;
  double p = 0.0;
  double q = 0.0;
};

// Bounds check on every listed unit plus the capacity proxy
// served_load <= (substation rating if connected) + sum of listed unit ratings.
bool dg_feasible(const GridNetwork& net, std::span<const DerDispatch> dispatch,
                 double served_load_kva, bool substation_connected = true);

}  // namespace gridres

#endif  // GRIDRES_METRICS_HPP_
