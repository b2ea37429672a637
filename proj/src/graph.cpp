#include "gppl/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace gppl {

UndirectedGraph::UndirectedGraph(Index n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ < 1) throw std::invalid_argument("graph needs at least one node");
  for (auto& e : edges_) {
    if (e.u == e.v) throw std::invalid_argument("self-loop at node " + std::to_string(e.u + 1));
    if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end())
    throw std::invalid_argument("duplicate edge (" + std::to_string(dup->u + 1) + ", " +
                                std::to_string(dup->v + 1) + ")");
}

std::vector<Index> UndirectedGraph::degrees() const {
  std::vector<Index> deg(static_cast<std::size_t>(n_), 0);
  for (const auto& e : edges_) {
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  return deg;
}

Index UndirectedGraph::max_degree() const {
  auto deg = degrees();
  return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

bool UndirectedGraph::is_path() const {
  if (num_edges() != n_ - 1) return false;
  for (Index i = 0; i < num_edges(); ++i) {
    const auto& e = edges_[static_cast<std::size_t>(i)];
    if (e.u != i || e.v != i + 1) return false;
  }
  return true;
}

UndirectedGraph path_graph(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return UndirectedGraph(n, std::move(edges));
}

UndirectedGraph grid_graph(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be positive");
  auto node = [rows](Index r, Index c) { return c * rows + r; };
  std::vector<Edge> edges;
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r + 1 < rows; ++r) edges.push_back({node(r, c), node(r + 1, c)});
  for (Index c = 0; c + 1 < cols; ++c)
    for (Index r = 0; r < rows; ++r) edges.push_back({node(r, c), node(r, c + 1)});
  return UndirectedGraph(rows * cols, std::move(edges));
}

SparseMatrix build_incidence(const UndirectedGraph& graph) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * graph.edges().size());
  Index row = 0;
  for (const auto& e : graph.edges()) {
    t.emplace_back(row, e.u, -1.0);
    t.emplace_back(row, e.v, 1.0);
    ++row;
  }
  SparseMatrix f(graph.num_edges(), graph.num_nodes());
  f.setFromTriplets(t.begin(), t.end());
  return f;
}

SparseMatrix build_laplacian(const UndirectedGraph& graph) {
  SparseMatrix f = build_incidence(graph);
  SparseMatrix l = SparseMatrix(f.transpose()) * f;
  l.prune(0.0);
  return l;
}

double DiffOperator::fill_ratio() const {
  const double cells = static_cast<double>(rows()) * static_cast<double>(cols());
  return cells > 0 ? static_cast<double>(matrix.nonZeros()) / cells : 0.0;
}

DiffOperator build_diff_operator(const UndirectedGraph& graph, int k) {
  if (k < 0) throw std::invalid_argument("difference order k must be non-negative");
  const SparseMatrix f = build_incidence(graph);
  const SparseMatrix ft = f.transpose();
  SparseMatrix d = f;
  for (int step = 1; step <= k; ++step) {
    SparseMatrix next = (step % 2 == 1) ? SparseMatrix(ft * d) : SparseMatrix(f * d);
    next.prune(0.0);
    d = std::move(next);
  }
  return DiffOperator{k, std::move(d)};
}

SparseMatrix univariate_difference(Index n, int order) {
  if (order < 0) throw std::invalid_argument("difference order must be non-negative");
  if (order >= n) throw std::invalid_argument("difference order must be below n");
  SparseMatrix d(n, n);
  d.setIdentity();
  for (int step = 0; step < order; ++step) {
    const Index m = d.rows();
    std::vector<Eigen::Triplet<double>> t;
    for (Index i = 0; i + 1 < m; ++i) {
      t.emplace_back(i, i, -1.0);
      t.emplace_back(i, i + 1, 1.0);
    }
    SparseMatrix first(m - 1, m);
    first.setFromTriplets(t.begin(), t.end());
    d = SparseMatrix(first * d);
    d.prune(0.0);
  }
  return d;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
  }

 private:
  std::vector<Index> parent_;
};

}  // namespace

std::vector<std::vector<Index>> connected_components(const UndirectedGraph& graph,
                                                     std::span<const Index> excluded_edges) {
  const Index p = graph.num_edges();
  std::vector<char> skip(static_cast<std::size_t>(p), 0);
  for (Index e : excluded_edges) {
    if (e < 0 || e >= p)
      throw std::out_of_range("excluded edge index " + std::to_string(e) + " outside [0, " +
                              std::to_string(p) + ")");
    skip[static_cast<std::size_t>(e)] = 1;
  }
  DisjointSets sets(graph.num_nodes());
  for (Index e = 0; e < p; ++e)
    if (!skip[static_cast<std::size_t>(e)]) sets.unite(graph.edge(e).u, graph.edge(e).v);

  std::vector<std::vector<Index>> out;
  std::vector<Index> slot(static_cast<std::size_t>(graph.num_nodes()), -1);
  for (Index i = 0; i < graph.num_nodes(); ++i) {
    const Index root = sets.find(i);
    auto& s = slot[static_cast<std::size_t>(root)];
    if (s < 0) {
      s = static_cast<Index>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(s)].push_back(i);
  }
  return out;
}

std::vector<Index> support(const Vector& x, double threshold) {
  std::vector<Index> idx;
  for (Index i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) > threshold) idx.push_back(i);
  return idx;
}

StructureCounts structure_counts(const Vector& beta, const DiffOperator& op, double threshold) {
  if (threshold < 0) throw std::invalid_argument("threshold must be non-negative");
  if (beta.size() != op.cols())
    throw DimensionError("beta has length " + std::to_string(beta.size()) + ", operator has " +
                         std::to_string(op.cols()) + " columns");
  const Vector diff = op.matrix * beta;
  return {static_cast<Index>(support(diff, threshold).size()),
          static_cast<Index>(support(beta, threshold).size())};
}

}  // namespace gppl
