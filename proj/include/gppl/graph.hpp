#pragma once

// Undirected graphs and the graph difference operators built from them.
//
// Nodes are 0-based in memory. The text formats in io.hpp are 1-based.
// Edges are stored as (u, v) with u < v, sorted lexicographically; every
// row ordering of the incidence matrix and of the higher order operators
// derives from that order.

#include "gppl/types.hpp"

#include <compare>
#include <span>
#include <utility>
#include <vector>

namespace gppl {

struct Edge {
  Index u = 0;
  Index v = 0;
  auto operator<=>(const Edge&) const = default;
};

class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  // Normalizes each pair to (min, max) and sorts. Throws std::invalid_argument
  // on self-loops, duplicates, out-of-range endpoints or n < 1.
  UndirectedGraph(Index n, std::vector<Edge> edges);

  Index num_nodes() const noexcept { return n_; }
  Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(Index e) const { return edges_.at(static_cast<std::size_t>(e)); }

  Index max_degree() const;
  std::vector<Index> degrees() const;

  // True when the edge set is exactly {(i, i+1)}.
  bool is_path() const;

 private:
  Index n_ = 0;
  std::vector<Edge> edges_;
};

UndirectedGraph path_graph(Index n);

// rows x cols lattice. Node (r, c) maps to index c * rows + r (column-major
// stacking), with vertical then horizontal neighbour edges before sorting.
UndirectedGraph grid_graph(Index rows, Index cols);

// Oriented incidence matrix F (p x n): edge e = (u, v) gives -1 at u, +1 at v.
SparseMatrix build_incidence(const UndirectedGraph& graph);

// L = F^T F.
SparseMatrix build_laplacian(const UndirectedGraph& graph);

// The order-(k+1) graph difference operator. m = n for odd k, m = p for even k.
struct DiffOperator {
  int k = 0;
  SparseMatrix matrix;

  Index rows() const noexcept { return matrix.rows(); }
  Index cols() const noexcept { return matrix.cols(); }
  double fill_ratio() const;
  // Storage hint: small or densely filled operators are cheaper as dense.
  bool prefers_dense() const { return cols() < 64 || fill_ratio() > 0.25; }
  Matrix dense() const { return Matrix(matrix); }
};

// Recursion: F, then alternately F^T * (.) for odd steps and F * (.) for even.
DiffOperator build_diff_operator(const UndirectedGraph& graph, int k);

// Univariate difference operator of the given order, (n - order) x n, with
// rows (-1, 1), (1, -2, 1), ... as used by the fused/smooth/spline lassos.
SparseMatrix univariate_difference(Index n, int order);

// Connected components of the graph after dropping the listed edge indices.
// Components are returned with nodes ascending, ordered by their smallest node.
std::vector<std::vector<Index>> connected_components(
    const UndirectedGraph& graph, std::span<const Index> excluded_edges = {});

struct StructureCounts {
  Index s1 = 0;  // entries of op * beta above threshold
  Index s2 = 0;  // entries of beta above threshold
  auto operator<=>(const StructureCounts&) const = default;
};

inline constexpr double kDefaultCountThreshold = 1e-8;

StructureCounts structure_counts(const Vector& beta, const DiffOperator& op,
                                 double threshold = kDefaultCountThreshold);

// Indices i with |x_i| > threshold.
std::vector<Index> support(const Vector& x, double threshold);

}  // namespace gppl
