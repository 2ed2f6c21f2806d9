#ifndef GRIDRES_FEEDER_HPP_
#define GRIDRES_FEEDER_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gridres/graph.hpp"

namespace gridres {

// Remotely controllable switch devices (tactical action width).
inline constexpr int kNumSwitches = 10;

// 1 = closed, 0 = open, indexed by switch_index
using SwitchVector = std::array<std::uint8_t, kNumSwitches>;

enum class NodeKind { kSource, kLoad, kJunction };

struct NodeRecord {
  int id = 0;
  NodeKind kind = NodeKind::kLoad;
  double demand_kva = 0.0;
  bool is_critical = false;

  bool operator==(const NodeRecord&) const = default;
};

struct BranchRecord {
  int id = 0;
  int from_node = 0;
  int to_node = 0;
  bool has_switch = false;
  // set for the agent-actuated switches; fixed-state devices leave it empty
  std::optional<int> switch_index;
  bool normally_closed = true;

  bool controllable() const { return switch_index.has_value(); }
  bool operator==(const BranchRecord&) const = default;
};

struct DerRecord {
  int node = 0;
  double rating_kva = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;

  bool operator==(const DerRecord&) const = default;
};

struct GridNetwork {
  std::vector<NodeRecord> nodes;
  std::vector<BranchRecord> branches;
  // activation order for configurations follows this order
  std::vector<DerRecord> ders;
  double source_rating_kva = 0.0;

  bool operator==(const GridNetwork& o) const {
    return nodes == o.nodes && branches == o.branches && ders == o.ders &&
           source_rating_kva == o.source_rating_kva;
  }

  const NodeRecord& source() const;
  const NodeRecord* find_node(int id) const;
  const BranchRecord* find_branch(int id) const;
  // branch actuated by switch `index`, nullptr when the feeder has fewer switches
  const BranchRecord* switch_branch(int index) const;
  int num_controllable_switches() const;

  std::vector<int> critical_load_ids() const;
  double total_demand_kva() const;
  double critical_demand_kva() const;
  int num_load_nodes() const;
  double total_der_rating_kva() const;
};

enum class ScenarioKind { kFlood, kWildfire, kHurricane, kShortCircuit, kCustom };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::kCustom;
  std::string name = "custom";
  std::set<int> disabled_nodes;
  std::set<int> disabled_branches;
  std::string description;

  bool empty() const { return disabled_nodes.empty() && disabled_branches.empty(); }
};

// Network restricted to the energizable part for one switch state. Graph
// indices map back to feeder node and branch ids.
struct Subgraph {
  Graph graph;
  std::vector<int> node_ids;
  std::vector<int> branch_ids;

  // graph index of a feeder node id, -1 when absent
  int index_of(int node_id) const;
  void rebuild_index();

 private:
  std::unordered_map<int, int> index_;
};

// Throws DataError with the offending line.
GridNetwork parse_feeder(std::string_view text);
std::string serialize_feeder(const GridNetwork& net);
GridNetwork load_feeder(const std::filesystem::path& path);

Scenario parse_scenario(std::string_view text, const GridNetwork& net);
Scenario load_scenario(const std::filesystem::path& path, const GridNetwork& net);
// every *.scenario file in the directory, sorted by file name
std::vector<Scenario> load_scenario_library(const std::filesystem::path& dir,
                                            const GridNetwork& net);

SwitchVector normal_switch_state(const GridNetwork& net);
SwitchVector all_switches(std::uint8_t state);

// Branches kept: (unswitched, closed controllable, normally closed fixed, or
// listed in extra_closed) and not disabled. Disabled nodes are dropped.
Subgraph effective_topology(const GridNetwork& net, const SwitchVector& switches,
                            const Scenario& scenario,
                            std::span<const int> extra_closed_branches = {});

std::string read_text_file(const std::filesystem::path& path);

}  // namespace gridres

#endif  // GRIDRES_FEEDER_HPP_
