#ifndef GRIDRES_GRAPH_HPP_
#define GRIDRES_GRAPH_HPP_

#include <span>
#include <utility>
#include <vector>

namespace gridres {

// Undirected graph over dense node indices [0, num_nodes). Parallel edges are
// allowed; self loops are not.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int num_nodes);

  // returns the edge index
  int add_edge(int u, int v);

  int num_nodes() const { return static_cast<int>(adjacency_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  std::span<const std::pair<int, int>> edges() const { return edges_; }
  std::span<const int> neighbors(int v) const { return adjacency_[v]; }

  // copy of the graph with node v removed; nodes above v shift down by one
  Graph without_node(int v) const;

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::pair<int, int>> edges_;
};

// union-find with union by size and path halving
class DisjointSets {
 public:
  explicit DisjointSets(int n);
  void reset();
  int find(int v);
  // returns the size of the merged set
  int unite(int a, int b);
  int size_of(int v) { return size_[find(v)]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

// component label per node, labels are 0..k-1 in order of first appearance
std::vector<int> connected_components(const Graph& g);
bool is_connected(const Graph& g);

// hop distances from source, -1 where unreachable
std::vector<int> bfs_distances(const Graph& g, int source);

Graph path_graph(int n);
Graph star_graph(int n);  // node 0 is the hub
Graph complete_graph(int n);
Graph square_lattice(int rows, int cols);

}  // namespace gridres

#endif  // GRIDRES_GRAPH_HPP_
