#include "gridres/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "gridres/error.hpp"

namespace gridres {
namespace {

struct ComponentView {
  std::vector<int> label;
  std::vector<int> source_count;
};

ComponentView component_sources(const Subgraph& sub, std::span<const SupplySource> sources) {
  ComponentView v;
  v.label = connected_components(sub.graph);
  int k = v.label.empty() ? 0 : *std::max_element(v.label.begin(), v.label.end()) + 1;
  v.source_count.assign(k, 0);
  for (const auto& s : sources) {
    int idx = sub.index_of(s.node_id);
    if (idx >= 0) ++v.source_count[v.label[idx]];
  }
  return v;
}

double sum_inverse_distances(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<int> dist(n);
  std::vector<int> queue(n);
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    int head = 0, tail = 0;
    dist[s] = 0;
    queue[tail++] = s;
    while (head < tail) {
      int v = queue[head++];
      for (int w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          total += 1.0 / dist[w];
          queue[tail++] = w;
        }
      }
    }
  }
  return total;
}

}  // namespace

PathCounts classify_paths(const Subgraph& sub, const GridNetwork& net,
                          std::span<const SupplySource> sources) {
  const auto critical = net.critical_load_ids();
  PathCounts pc;
  if (critical.empty()) return pc;
  auto view = component_sources(sub, sources);

  std::set<int> covered_components;
  int covered = 0;
  for (int id : critical) {
    int idx = sub.index_of(id);
    if (idx < 0) continue;
    int comp = view.label[idx];
    if (view.source_count[comp] == 0) continue;
    ++covered;
    covered_components.insert(comp);
  }

  if (covered == static_cast<int>(critical.size())) {
    if (covered_components.size() >= 2) {
      pc.n_ic = 1;
      return pc;
    }
    if (view.source_count[*covered_components.begin()] >= 2) {
      pc.n_cc = 1;
      return pc;
    }
  }
  pc.n_ip = covered;
  return pc;
}

PathCounts classify_paths(const Subgraph& sub, const GridNetwork& net) {
  std::vector<SupplySource> sources;
  sources.push_back({net.source().id, net.source_rating_kva});
  for (const auto& d : net.ders) sources.push_back({d.node, d.rating_kva});
  return classify_paths(sub, net, sources);
}

CriticalSupply critical_supply(const Subgraph& sub, const GridNetwork& net,
                               std::span<const SupplySource> sources) {
  CriticalSupply out;
  auto view = component_sources(sub, sources);
  std::map<int, double> critical_by_comp;
  for (int id : net.critical_load_ids()) {
    int idx = sub.index_of(id);
    if (idx < 0) continue;
    int comp = view.label[idx];
    if (view.source_count[comp] == 0) continue;
    double kva = net.find_node(id)->demand_kva;
    out.served_critical_ids.push_back(id);
    out.served_critical_kva += kva;
    critical_by_comp[comp] += kva;
  }
  std::map<int, double> rating_by_comp;
  for (const auto& s : sources) {
    int idx = sub.index_of(s.node_id);
    if (idx >= 0) rating_by_comp[view.label[idx]] += s.rating_kva;
  }
  for (const auto& s : sources) {
    int idx = sub.index_of(s.node_id);
    if (idx < 0) continue;
    int comp = view.label[idx];
    auto it = critical_by_comp.find(comp);
    if (it == critical_by_comp.end()) continue;
    double share = it->second * s.rating_kva / rating_by_comp[comp];
    out.ros_paths.push_back({s.rating_kva, share});
  }
  return out;
}

double path_variability(const PathCounts& pc) {
  return 0.1 * pc.n_ip + 0.4 * pc.n_ic + 0.5 * pc.n_cc;
}

double cls_ratio(double served_kva, double total_critical_kva) {
  if (!(total_critical_kva > 0.0)) {
    throw DomainError("total critical demand must be positive");
  }
  return std::clamp(served_kva / total_critical_kva, 0.0, 1.0);
}

double rating_of_service(std::span<const RosPath> paths) {
  double ros = 0.0;
  for (const auto& p : paths) {
    if (!(p.source_rating_kva > 0.0)) throw DomainError("source rating must be positive");
    ros += (p.source_rating_kva - p.critical_rating_kva) / p.source_rating_kva;
  }
  return ros;
}

double average_ros(int served, int total, double ros, int num_paths) {
  if (total <= 0) throw DomainError("total critical load count must be positive");
  if (num_paths <= 0) throw DomainError("supply path count must be positive");
  return (static_cast<double>(served) / total) * (ros / num_paths);
}

double network_efficiency(const Graph& g) {
  const int n = g.num_nodes();
  if (n < 2) throw DomainError("network efficiency needs at least two nodes");
  return sum_inverse_distances(g) / (static_cast<double>(n) * (n - 1));
}

double information_centrality(const Graph& g, int node) {
  if (node < 0 || node >= g.num_nodes()) throw DomainError("node not in graph");
  if (g.num_nodes() < 3) {
    throw DomainError("information centrality needs at least three nodes");
  }
  double e = network_efficiency(g);
  if (e == 0.0) return 0.0;
  double e0 = network_efficiency(g.without_node(node));
  return (e - e0) / e;
}

std::vector<double> information_centralities(const Graph& g) {
  std::vector<double> c(g.num_nodes(), 0.0);
  if (g.num_nodes() < 3) return c;
  double e = network_efficiency(g);
  if (e == 0.0) return c;
  for (int m = 0; m < g.num_nodes(); ++m) {
    c[m] = (e - network_efficiency(g.without_node(m))) / e;
  }
  return c;
}

int high_centrality_count(std::span<const double> centralities, CentralityRule rule) {
  if (centralities.empty()) return 0;
  const double n = static_cast<double>(centralities.size());
  double mean = std::accumulate(centralities.begin(), centralities.end(), 0.0) / n;
  double var = 0.0;
  for (double c : centralities) var += (c - mean) * (c - mean);
  double threshold = mean + rule.num_std * std::sqrt(var / n);
  // absorbs rounding when every centrality is equal
  constexpr double kSlack = 1e-12;
  return static_cast<int>(std::count_if(centralities.begin(), centralities.end(),
                                        [&](double c) { return c > threshold + kSlack; }));
}

int high_centrality_count(const Graph& g, CentralityRule rule) {
  return high_centrality_count(information_centralities(g), rule);
}

std::vector<NormalizedMetrics> normalize_metrics(std::span<const MetricVector> raws) {
  std::vector<NormalizedMetrics> out(raws.size());
  if (raws.empty()) return out;
  for (int k = 0; k < kNumMetrics; ++k) {
    double lo = raws[0].as_array()[k];
    double hi = lo;
    for (const auto& r : raws) {
      lo = std::min(lo, r.as_array()[k]);
      hi = std::max(hi, r.as_array()[k]);
    }
    for (size_t i = 0; i < raws.size(); ++i) {
      out[i][k] = hi == lo ? 0.5 : (raws[i].as_array()[k] - lo) / (hi - lo);
    }
  }
  return out;
}

double resilience_score(const NormalizedMetrics& normalized, const AhpWeights& w) {
  if (w.w.size() != kNumMetrics) throw DomainError("expected five metric weights");
  double r = 0.0;
  for (int k = 0; k < kNumMetrics; ++k) r += normalized[k] * w.w[k];
  return r;
}

double composite_score(std::span<const double> scores, std::span<const double> weights) {
  if (scores.empty()) throw DomainError("composite score needs at least one configuration");
  auto max_it = std::max_element(scores.begin(), scores.end());
  const double r_max = *max_it;
  const size_t others = scores.size() - 1;
  if (!weights.empty() && weights.size() != others) {
    throw DomainError("one weight per non-maximal configuration expected");
  }
  double wsum = 0.0;
  double acc = 0.0;
  size_t j = 0;
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (it == max_it) continue;
    double w = weights.empty() ? 1.0 / static_cast<double>(others) : weights[j];
    if (w < 0.0) throw DomainError("negative configuration weight");
    wsum += w;
    acc += w * *it;
    ++j;
  }
  if (wsum > 1.0 + 1e-12) throw DomainError("configuration weights sum above one");
  return r_max + (1.0 - r_max) * acc;
}

bool dg_feasible(const GridNetwork& net, std::span<const DerDispatch> dispatch,
                 double served_load_kva, bool substation_connected) {
  double capacity = substation_connected ? net.source_rating_kva : 0.0;
  for (const auto& d : dispatch) {
    auto it = std::find_if(net.ders.begin(), net.ders.end(),
                           [&](const DerRecord& r) { return r.node == d.node; });
    if (it == net.ders.end()) throw DomainError("dispatch for a node without a DER");
    if (d.p < it->p_min || d.p > it->p_max) return false;
    if (d.q < it->q_min || d.q > it->q_max) return false;
    capacity += it->rating_kva;
  }
  return served_load_kva <= capacity;
}

}  // namespace gridres
