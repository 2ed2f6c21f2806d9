#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "gridres/error.hpp"
#include "gridres/feeder.hpp"
#include "gridres/graph.hpp"

using namespace gridres;

namespace {

const char* kTiny = R"(source_rating 100
node 1 source 0
node 2 load 10 critical
branch 1 1 2
)";

GridNetwork bundled() { return load_feeder(GRIDRES_DATA_DIR "/ieee123_simplified.feeder"); }

int line_of(const std::string& text) {
  try {
    parse_feeder(text);
  } catch (const DataError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("graph components and distances") {
  Graph g(5);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(3, 4);
  auto comp = connected_components(g);
  CHECK(comp == std::vector<int>{0, 0, 0, 1, 1});
  CHECK_FALSE(is_connected(g));
  CHECK(bfs_distances(g, 0) == std::vector<int>{0, 1, 2, -1, -1});
  auto h = path_graph(4).without_node(1);
  CHECK(h.num_nodes() == 3);
  CHECK(h.num_edges() == 1);
  CHECK(square_lattice(3, 4).num_edges() == 3 * 3 + 2 * 4);
  CHECK(complete_graph(5).num_edges() == 10);
}

TEST_CASE("disjoint sets") {
  DisjointSets ds(6);
  CHECK(ds.unite(0, 1) == 2);
  CHECK(ds.unite(2, 3) == 2);
  CHECK(ds.unite(1, 3) == 4);
  CHECK(ds.find(0) == ds.find(2));
  CHECK(ds.size_of(5) == 1);
  ds.reset();
  CHECK(ds.size_of(0) == 1);
}

TEST_CASE("bundled feeder aggregates") {
  auto net = bundled();
  CHECK(net.num_load_nodes() == 85);
  CHECK(net.total_demand_kva() == doctest::Approx(3855.26).epsilon(1e-12));
  CHECK(net.ders.size() == 4);
  CHECK(net.total_der_rating_kva() == doctest::Approx(1401.4).epsilon(1e-12));
  CHECK(net.source().id == 150);
  CHECK(net.source_rating_kva == 5000.0);
  CHECK(net.critical_load_ids() == std::vector<int>{48, 76});
  CHECK(net.critical_demand_kva() == doctest::Approx(561.89).epsilon(1e-12));
  std::vector<int> der_nodes;
  for (const auto& d : net.ders) der_nodes.push_back(d.node);
  CHECK(der_nodes == std::vector<int>{49, 21, 105, 56});

  int switched = 0, nc = 0, no = 0;
  for (const auto& b : net.branches) {
    if (!b.has_switch) continue;
    ++switched;
    (b.normally_closed ? nc : no) += 1;
  }
  CHECK(switched == 12);
  CHECK(nc == 6);
  CHECK(no == 6);
  CHECK(net.num_controllable_switches() == 10);
}

TEST_CASE("minimal feeder") {
  auto net = parse_feeder(kTiny);
  CHECK(net.nodes.size() == 2);
  CHECK(net.num_controllable_switches() == 0);
  CHECK(net.ders.empty());
}

TEST_CASE("feeder round trip") {
  auto net = bundled();
  CHECK(parse_feeder(serialize_feeder(net)) == net);
  auto tiny = parse_feeder(kTiny);
  CHECK(parse_feeder(serialize_feeder(tiny)) == tiny);
}

TEST_CASE("feeder errors carry the line") {
  CHECK(line_of("source_rating 10\nnode 1 source 0\nnode 1 load 2\n") == 3);
  CHECK(line_of("source_rating 10\nnode 1 source 0\nbranch 1 1 9\n") == 3);
  CHECK(line_of("source_rating 10\nnode 1 source 0\nnode 2 load 1\nnode 3 load 1\n"
                "branch 1 1 2 switch 4 nc\nbranch 2 2 3 switch 4 nc\n") == 6);
  CHECK(line_of("source_rating 10\nnode 1 source 0\nbogus 3\n") == 3);
  CHECK(line_of("source_rating 10\nnode 1 source 0\nnode 2 load x\n") == 3);
  CHECK_THROWS_AS(parse_feeder("node 1 load 1\nnode 2 load 1\nbranch 1 1 2\n"), DataError);
  // disconnected with switches in their normal state
  CHECK_THROWS_AS(parse_feeder("source_rating 10\nnode 1 source 0\nnode 2 load 1\n"
                               "branch 1 1 2 switch 0 no\n"),
                  DataError);
}

TEST_CASE("effective topology set difference") {
  auto net = bundled();
  auto lib = load_scenario_library(GRIDRES_DATA_DIR "/scenarios", net);
  REQUIRE(lib.size() == 4);
  CHECK(lib[0].name == "flood");
  CHECK(lib[0].kind == ScenarioKind::kFlood);

  auto all_closed = all_switches(1);
  auto base = effective_topology(net, all_closed, Scenario{});
  std::vector<int> expected;
  for (const auto& b : net.branches) {
    bool fixed_open = b.has_switch && !b.switch_index && !b.normally_closed;
    if (!fixed_open) expected.push_back(b.id);
  }
  CHECK(base.branch_ids == expected);
  CHECK(is_connected(base.graph));

  for (const auto& sc : lib) {
    auto sub = effective_topology(net, all_closed, sc);
    std::vector<int> oracle;
    for (int id : expected) {
      const auto* b = net.find_branch(id);
      if (sc.disabled_branches.count(id)) continue;
      if (sc.disabled_nodes.count(b->from_node) || sc.disabled_nodes.count(b->to_node)) continue;
      oracle.push_back(id);
    }
    CHECK(sub.branch_ids == oracle);
    CHECK(sub.graph.num_nodes() ==
          static_cast<int>(net.nodes.size() - sc.disabled_nodes.size()));
  }
}

TEST_CASE("normal state is connected and closing is monotone") {
  auto net = bundled();
  auto normal = normal_switch_state(net);
  CHECK(is_connected(effective_topology(net, normal, Scenario{}).graph));

  auto open = effective_topology(net, all_switches(0), Scenario{});
  std::set<int> prev(open.branch_ids.begin(), open.branch_ids.end());
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    SwitchVector s = all_switches(0);
    std::vector<int> order(kNumSwitches);
    for (int i = 0; i < kNumSwitches; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<int> before(open.branch_ids.begin(), open.branch_ids.end());
    for (int i : order) {
      s[i] = 1;
      auto sub = effective_topology(net, s, Scenario{});
      std::set<int> now(sub.branch_ids.begin(), sub.branch_ids.end());
      CHECK(std::includes(now.begin(), now.end(), before.begin(), before.end()));
      before = now;
    }
  }
}

TEST_CASE("every branch switched and all open gives no edges") {
  auto net = parse_feeder("source_rating 10\nnode 1 source 0\nnode 2 load 1\nnode 3 load 1\n"
                          "branch 1 1 2 switch 0 nc\nbranch 2 2 3 switch 1 nc\n");
  CHECK(effective_topology(net, all_switches(0), Scenario{}).graph.num_edges() == 0);
  CHECK(effective_topology(net, all_switches(1), Scenario{}).graph.num_edges() == 2);
}

TEST_CASE("scenario parsing rejects unknown elements") {
  auto net = bundled();
  CHECK_THROWS_AS(parse_scenario("name flood\ndisable_node 9999\n", net), DataError);
  CHECK_THROWS_AS(parse_scenario("disable_node 1\n", net), DataError);
  auto sc = parse_scenario("name mine\ndescription a b\ndisable_branch 3\n", net);
  CHECK(sc.kind == ScenarioKind::kCustom);
  CHECK(sc.description == "a b");
  CHECK(sc.disabled_branches == std::set<int>{3});
}
