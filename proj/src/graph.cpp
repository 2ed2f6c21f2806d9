#include "gridres/graph.hpp"

#include <numeric>
#include <queue>

#include "gridres/error.hpp"

namespace gridres {

Graph::Graph(int num_nodes) : adjacency_(num_nodes) {}

int Graph::add_edge(int u, int v) {
  if (u < 0 || v < 0 || u >= num_nodes() || v >= num_nodes() || u == v) {
    throw DomainError("invalid edge endpoints");
  }
  adjacency_[u].push_back(v);
  adjacency_[v].push_back(u);
  edges_.emplace_back(u, v);
  return num_edges() - 1;
}

Graph Graph::without_node(int v) const {
  Graph out(num_nodes() - 1);
  auto remap = [v](int x) { return x > v ? x - 1 : x; };
  for (auto [a, b] : edges_) {
    if (a == v || b == v) continue;
    out.add_edge(remap(a), remap(b));
  }
  return out;
}

DisjointSets::DisjointSets(int n) : parent_(n), size_(n) { reset(); }

void DisjointSets::reset() {
  std::iota(parent_.begin(), parent_.end(), 0);
  std::fill(size_.begin(), size_.end(), 1);
}

int DisjointSets::find(int v) {
  while (parent_[v] != v) {
    parent_[v] = parent_[parent_[v]];
    v = parent_[v];
  }
  return v;
}

int DisjointSets::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return size_[a];
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return size_[a];
}

std::vector<int> connected_components(const Graph& g) {
  std::vector<int> label(g.num_nodes(), -1);
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < g.num_nodes(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : g.neighbors(v)) {
        if (label[w] < 0) {
          label[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

bool is_connected(const Graph& g) {
  if (g.num_nodes() == 0) return true;
  auto label = connected_components(g);
  for (int l : label) {
    if (l != 0) return false;
  }
  return true;
}

std::vector<int> bfs_distances(const Graph& g, int source) {
  std::vector<int> dist(g.num_nodes(), -1);
  std::queue<int> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : g.neighbors(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

Graph path_graph(int n) {
  Graph g(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

Graph star_graph(int n) {
  Graph g(n);
  for (int i = 1; i < n; ++i) g.add_edge(0, i);
  return g;
}

Graph complete_graph(int n) {
  Graph g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
  }
  return g;
}

Graph square_lattice(int rows, int cols) {
  Graph g(rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int v = r * cols + c;
      if (c + 1 < cols) g.add_edge(v, v + 1);
      if (r + 1 < rows) g.add_edge(v, v + cols);
    }
  }
  return g;
}

}  // namespace gridres
