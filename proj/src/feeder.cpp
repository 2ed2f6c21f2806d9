#include "gridres/feeder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "gridres/error.hpp"

namespace gridres {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  auto pos = line.find('#');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

int parse_int(std::string_view tok, int line, std::string_view what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError(fmt::format("expected integer {} but found '{}'", what, tok), line);
  }
  return v;
}

double parse_double(std::string_view tok, int line, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw DataError(fmt::format("expected number {} but found '{}'", what, tok), line);
  }
  return v;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto tokens = split_ws(strip_comment(text.substr(start, end - start)));
    if (!tokens.empty()) fn(tokens, line_no, text.substr(start, end - start));
    if (end == text.size()) break;
    start = end + 1;
  }
}

std::string_view kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::kSource: return "source";
    case NodeKind::kLoad: return "load";
    case NodeKind::kJunction: return "junction";
  }
  return "load";
}

void validate(const GridNetwork& net) {
  int sources = 0;
  for (const auto& n : net.nodes) sources += n.kind == NodeKind::kSource;
  if (sources == 0) throw DataError("missing source node");
  if (sources > 1) throw DataError("more than one source node");

  std::map<int, int> index;
  for (const auto& n : net.nodes) index.emplace(n.id, static_cast<int>(index.size()));
  Graph g(static_cast<int>(net.nodes.size()));
  for (const auto& b : net.branches) {
    bool closed = !b.has_switch || b.normally_closed;
    if (closed) g.add_edge(index[b.from_node], index[b.to_node]);
  }
  if (!is_connected(g)) {
    throw DataError("network is not connected with switches in their normal state");
  }
  if (net.critical_demand_kva() > net.source_rating_kva) {
    throw DataError(fmt::format("critical demand {} kVA exceeds source rating {} kVA",
                                net.critical_demand_kva(), net.source_rating_kva));
  }
}

}  // namespace

const NodeRecord& GridNetwork::source() const {
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::kSource) return n;
  }
  throw DataError("missing source node");
}

const NodeRecord* GridNetwork::find_node(int id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const BranchRecord* GridNetwork::find_branch(int id) const {
  for (const auto& b : branches) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const BranchRecord* GridNetwork::switch_branch(int index) const {
  for (const auto& b : branches) {
    if (b.switch_index == index) return &b;
  }
  return nullptr;
}

int GridNetwork::num_controllable_switches() const {
  return static_cast<int>(std::count_if(branches.begin(), branches.end(),
                                        [](const BranchRecord& b) { return b.controllable(); }));
}

std::vector<int> GridNetwork::critical_load_ids() const {
  std::vector<int> out;
  for (const auto& n : nodes) {
    if (n.is_critical) out.push_back(n.id);
  }
  return out;
}

double GridNetwork::total_demand_kva() const {
  double s = 0.0;
  for (const auto& n : nodes) s += n.demand_kva;
  return s;
}

double GridNetwork::critical_demand_kva() const {
  double s = 0.0;
  for (const auto& n : nodes) {
    if (n.is_critical) s += n.demand_kva;
  }
  return s;
}

int GridNetwork::num_load_nodes() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const NodeRecord& n) {
    return n.kind == NodeKind::kLoad;
  }));
}

double GridNetwork::total_der_rating_kva() const {
  double s = 0.0;
  for (const auto& d : ders) s += d.rating_kva;
  return s;
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kFlood: return "flood";
    case ScenarioKind::kWildfire: return "wildfire";
    case ScenarioKind::kHurricane: return "hurricane";
    case ScenarioKind::kShortCircuit: return "short_circuit";
    case ScenarioKind::kCustom: return "custom";
  }
  return "custom";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  if (name == "flood") return ScenarioKind::kFlood;
  if (name == "wildfire") return ScenarioKind::kWildfire;
  if (name == "hurricane") return ScenarioKind::kHurricane;
  if (name == "short_circuit") return ScenarioKind::kShortCircuit;
  return ScenarioKind::kCustom;
}

int Subgraph::index_of(int node_id) const {
  auto it = index_.find(node_id);
  return it == index_.end() ? -1 : it->second;
}

void Subgraph::rebuild_index() {
  index_.clear();
  for (int i = 0; i < static_cast<int>(node_ids.size()); ++i) index_[node_ids[i]] = i;
}

GridNetwork parse_feeder(std::string_view text) {
  GridNetwork net;
  std::map<int, int> node_line;
  std::set<int> branch_ids;
  std::set<int> switch_indices;
  std::set<int> der_nodes;
  struct PendingBranch {
    BranchRecord rec;
    int line;
  };
  std::vector<PendingBranch> pending;
  std::vector<std::pair<DerRecord, int>> pending_ders;

  for_each_line(text, [&](const std::vector<std::string_view>& tok, int line, std::string_view) {
    const auto kw = tok[0];
    if (kw == "node") {
      if (tok.size() < 4 || tok.size() > 5) {
        throw DataError("expected 'node <id> <kind> <demand_kVA> [critical]'", line);
      }
      NodeRecord n;
      n.id = parse_int(tok[1], line, "node id");
      if (tok[2] == "source") {
        n.kind = NodeKind::kSource;
      } else if (tok[2] == "load") {
        n.kind = NodeKind::kLoad;
      } else if (tok[2] == "junction") {
        n.kind = NodeKind::kJunction;
      } else {
        throw DataError(fmt::format("unknown node kind '{}'", tok[2]), line);
      }
      n.demand_kva = parse_double(tok[3], line, "demand");
      if (n.demand_kva < 0.0) throw DataError("negative demand", line);
      if (n.kind != NodeKind::kLoad && n.demand_kva != 0.0) {
        throw DataError("only load nodes may carry demand", line);
      }
      if (tok.size() == 5) {
        if (tok[4] != "critical") {
          throw DataError(fmt::format("unexpected token '{}'", tok[4]), line);
        }
        if (n.kind != NodeKind::kLoad) throw DataError("only load nodes can be critical", line);
        n.is_critical = true;
      }
      if (!node_line.emplace(n.id, line).second) {
        throw DataError(fmt::format("duplicate node id {}", n.id), line);
      }
      net.nodes.push_back(n);
    } else if (kw == "branch") {
      if (tok.size() != 4 && tok.size() != 7) {
        throw DataError("expected 'branch <id> <from> <to> [switch <idx> <nc|no>]'", line);
      }
      BranchRecord b;
      b.id = parse_int(tok[1], line, "branch id");
      b.from_node = parse_int(tok[2], line, "from node");
      b.to_node = parse_int(tok[3], line, "to node");
      if (b.from_node == b.to_node) throw DataError("branch endpoints must differ", line);
      if (tok.size() == 7) {
        if (tok[4] != "switch") {
          throw DataError(fmt::format("unexpected token '{}'", tok[4]), line);
        }
        b.has_switch = true;
        if (tok[5] != "fixed") {
          int idx = parse_int(tok[5], line, "switch index");
          if (idx < 0 || idx >= kNumSwitches) {
            throw DataError(fmt::format("switch index {} outside [0,{}]", idx, kNumSwitches - 1),
                            line);
          }
          if (!switch_indices.insert(idx).second) {
            throw DataError(fmt::format("switch index {} already in use", idx), line);
          }
          b.switch_index = idx;
        }
        if (tok[6] == "nc") {
          b.normally_closed = true;
        } else if (tok[6] == "no") {
          b.normally_closed = false;
        } else {
          throw DataError(fmt::format("expected nc or no but found '{}'", tok[6]), line);
        }
      }
      if (!branch_ids.insert(b.id).second) {
        throw DataError(fmt::format("duplicate branch id {}", b.id), line);
      }
      pending.push_back({b, line});
    } else if (kw == "der") {
      if (tok.size() != 7) {
        throw DataError("expected 'der <node> <rating_kVA> <pmin> <pmax> <qmin> <qmax>'", line);
      }
      DerRecord d;
      d.node = parse_int(tok[1], line, "DER node");
      d.rating_kva = parse_double(tok[2], line, "rating");
      d.p_min = parse_double(tok[3], line, "pmin");
      d.p_max = parse_double(tok[4], line, "pmax");
      d.q_min = parse_double(tok[5], line, "qmin");
      d.q_max = parse_double(tok[6], line, "qmax");
      if (d.rating_kva <= 0.0) throw DataError("DER rating must be positive", line);
      if (d.p_min > d.p_max) throw DataError("DER pmin exceeds pmax", line);
      if (d.q_min > d.q_max) throw DataError("DER qmin exceeds qmax", line);
      if (!der_nodes.insert(d.node).second) {
        throw DataError(fmt::format("second DER at node {}", d.node), line);
      }
      pending_ders.emplace_back(d, line);
    } else if (kw == "source_rating") {
      if (tok.size() != 2) throw DataError("expected 'source_rating <kVA>'", line);
      net.source_rating_kva = parse_double(tok[1], line, "source rating");
      if (net.source_rating_kva < 0.0) throw DataError("negative source rating", line);
    } else {
      throw DataError(fmt::format("unknown keyword '{}'", kw), line);
    }
  });

  for (auto& [b, line] : pending) {
    for (int end : {b.from_node, b.to_node}) {
      if (!node_line.count(end)) {
        throw DataError(fmt::format("branch {} references unknown node {}", b.id, end), line);
      }
    }
    net.branches.push_back(b);
  }
  for (auto& [d, line] : pending_ders) {
    if (!node_line.count(d.node)) {
      throw DataError(fmt::format("DER at unknown node {}", d.node), line);
    }
    net.ders.push_back(d);
  }
  validate(net);
  return net;
}

std::string serialize_feeder(const GridNetwork& net) {
  std::string out;
  out += fmt::format("source_rating {}\n", net.source_rating_kva);
  for (const auto& n : net.nodes) {
    out += fmt::format("node {} {} {}{}\n", n.id, kind_name(n.kind), n.demand_kva,
                       n.is_critical ? " critical" : "");
  }
  for (const auto& b : net.branches) {
    out += fmt::format("branch {} {} {}", b.id, b.from_node, b.to_node);
    if (b.has_switch) {
      out += fmt::format(" switch {} {}",
                         b.switch_index ? std::to_string(*b.switch_index) : std::string("fixed"),
                         b.normally_closed ? "nc" : "no");
    }
    out += '\n';
  }
  for (const auto& d : net.ders) {
    out += fmt::format("der {} {} {} {} {} {}\n", d.node, d.rating_kva, d.p_min, d.p_max,
                       d.q_min, d.q_max);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GridNetwork load_feeder(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  try {
    return parse_feeder(text);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

Scenario parse_scenario(std::string_view text, const GridNetwork& net) {
  Scenario sc;
  bool named = false;
  for_each_line(text, [&](const std::vector<std::string_view>& tok, int line,
                          std::string_view raw) {
    const auto kw = tok[0];
    if (kw == "name") {
      if (tok.size() != 2) throw DataError("expected 'name <string>'", line);
      sc.name = std::string(tok[1]);
      sc.kind = scenario_kind_from_string(tok[1]);
      named = true;
    } else if (kw == "description") {
      auto pos = raw.find("description") + std::string_view("description").size();
      auto rest = strip_comment(raw.substr(pos));
      auto first = rest.find_first_not_of(" \t");
      auto last = rest.find_last_not_of(" \t\r");
      sc.description = first == std::string_view::npos
                           ? std::string()
                           : std::string(rest.substr(first, last - first + 1));
    } else if (kw == "disable_node") {
      if (tok.size() != 2) throw DataError("expected 'disable_node <id>'", line);
      int id = parse_int(tok[1], line, "node id");
      if (!net.find_node(id)) throw DataError(fmt::format("unknown node {}", id), line);
      sc.disabled_nodes.insert(id);
    } else if (kw == "disable_branch") {
      if (tok.size() != 2) throw DataError("expected 'disable_branch <id>'", line);
      int id = parse_int(tok[1], line, "branch id");
      if (!net.find_branch(id)) throw DataError(fmt::format("unknown branch {}", id), line);
      sc.disabled_branches.insert(id);
    } else {
      throw DataError(fmt::format("unknown keyword '{}'", kw), line);
    }
  });
  if (!named) throw DataError("scenario has no 'name' line");
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const GridNetwork& net) {
  auto text = read_text_file(path);
  try {
    return parse_scenario(text, net);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<Scenario> load_scenario_library(const std::filesystem::path& dir,
                                            const GridNetwork& net) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw DataError(fmt::format("scenario directory '{}' not found", dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".scenario") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(load_scenario(f, net));
  return out;
}

SwitchVector normal_switch_state(const GridNetwork& net) {
  SwitchVector s{};
  for (const auto& b : net.branches) {
    if (b.switch_index) s[*b.switch_index] = b.normally_closed ? 1 : 0;
  }
  return s;
}

SwitchVector all_switches(std::uint8_t state) {
  SwitchVector s;
  s.fill(state);
  return s;
}

Subgraph effective_topology(const GridNetwork& net, const SwitchVector& switches,
                            const Scenario& scenario, std::span<const int> extra_closed_branches) {
  Subgraph sub;
  for (const auto& n : net.nodes) {
    if (!scenario.disabled_nodes.count(n.id)) sub.node_ids.push_back(n.id);
  }
  sub.rebuild_index();
  sub.graph = Graph(static_cast<int>(sub.node_ids.size()));
  for (const auto& b : net.branches) {
    if (scenario.disabled_branches.count(b.id)) continue;
    bool closed;
    if (!b.has_switch) {
      closed = true;
    } else if (b.switch_index) {
      closed = switches[*b.switch_index] != 0;
    } else {
      closed = b.normally_closed;
    }
    if (!closed) {
      closed = std::find(extra_closed_branches.begin(), extra_closed_branches.end(), b.id) !=
               extra_closed_branches.end();
    }
    if (!closed) continue;
    int u = sub.index_of(b.from_node);
    int v = sub.index_of(b.to_node);
    if (u < 0 || v < 0) continue;
    sub.graph.add_edge(u, v);
    sub.branch_ids.push_back(b.id);
  }
  return sub;
}

}  // namespace gridres
