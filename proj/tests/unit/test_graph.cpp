#include "gppl/graph.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numeric>

using namespace gppl;

namespace {

// Binomial-coefficient construction of the univariate operator.
Matrix binomial_difference(Index n, int order) {
  Matrix D = Matrix::Zero(n - order, n);
  for (Index i = 0; i < n - order; ++i) {
    double c = 1.0;  // C(order, j)
    for (int j = 0; j <= order; ++j) {
      D(i, i + j) = ((order - j) % 2 == 0 ? 1.0 : -1.0) * c;
      c = c * (order - j) / (j + 1);
    }
  }
  return D;
}

// Union-find component count, independent of connected_components.
int count_components(const UndirectedGraph& g) {
  std::vector<Index> parent(static_cast<std::size_t>(g.num_nodes()));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges()) parent[find(e.u)] = find(e.v);
  int r = 0;
  for (Index i = 0; i < g.num_nodes(); ++i) r += find(i) == i;
  return r;
}

Matrix dense_laplacian(const UndirectedGraph& g) {
  Matrix L = Matrix::Zero(g.num_nodes(), g.num_nodes());
  for (const auto& e : g.edges()) {
    L(e.u, e.u) += 1;
    L(e.v, e.v) += 1;
    L(e.u, e.v) -= 1;
    L(e.v, e.u) -= 1;
  }
  return L;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("graph construction normalizes and validates edges") {
  UndirectedGraph g(4, {{2, 1}, {0, 3}, {0, 1}});
  REQUIRE(g.num_edges() == 3);
  CHECK(g.edge(0) == Edge{0, 1});
  CHECK(g.edge(1) == Edge{0, 3});
  CHECK(g.edge(2) == Edge{1, 2});
  CHECK(g.max_degree() == 2);
  CHECK_FALSE(g.is_path());
  CHECK(path_graph(5).is_path());

  CHECK_THROWS_AS(UndirectedGraph(3, {{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(UndirectedGraph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(UndirectedGraph(3, {{0, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(UndirectedGraph(0, {}), std::invalid_argument);
}

TEST_CASE("incidence matrix puts -1 at the smaller node") {
  const UndirectedGraph g(3, {{0, 2}, {1, 2}});
  const Matrix F(build_incidence(g));
  Matrix expected(2, 3);
  expected << -1, 0, 1, 0, -1, 1;
  CHECK(F == expected);
}

TEST_CASE("Laplacian equals F^T F and degree minus adjacency") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const UndirectedGraph g = testutil::random_graph(12, 0.3, s);
    const Matrix L(build_laplacian(g));
    const Matrix F(build_incidence(g));
    CHECK((L - F.transpose() * F).cwiseAbs().maxCoeff() == 0.0);
    CHECK((L - dense_laplacian(g)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("operator shapes on the published path and grid examples") {
  const UndirectedGraph path = path_graph(250);
  const DiffOperator d1 = build_diff_operator(path, 0);
  CHECK(d1.rows() == 249);
  CHECK(d1.cols() == 250);
  const DiffOperator d2 = build_diff_operator(path, 1);
  CHECK(d2.rows() == 250);
  CHECK(d2.cols() == 250);
  CHECK((d2.dense() - Matrix(build_laplacian(path))).cwiseAbs().maxCoeff() == 0.0);

  const UndirectedGraph grid = grid_graph(25, 25);
  CHECK(grid.num_nodes() == 625);
  CHECK(grid.num_edges() == 1200);
  CHECK(grid.max_degree() == 4);
  const DiffOperator d3 = build_diff_operator(grid, 2);
  CHECK(d3.rows() == 1200);
  CHECK(d3.cols() == 625);
}

TEST_CASE("grid nodes are stacked column by column") {
  const UndirectedGraph g = grid_graph(3, 2);
  // (r, c) -> c * 3 + r; vertical neighbours (r, r+1) and horizontal (c, c+1).
  std::vector<Edge> expected{{0, 1}, {0, 3}, {1, 2}, {1, 4}, {2, 5}, {3, 4}, {4, 5}};
  CHECK(g.edges() == expected);
}

TEST_CASE("constant vectors are annihilated for every order") {
  const UndirectedGraph g = testutil::random_graph(15, 0.25, 7);
  for (int k = 0; k <= 4; ++k) {
    const DiffOperator op = build_diff_operator(g, k);
    const Vector ones = Vector::Ones(15);
    CHECK((op.matrix * ones).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("recursion matches direct powers of the Laplacian") {
  const UndirectedGraph g = testutil::random_graph(10, 0.4, 3);
  const Matrix F(build_incidence(g));
  const Matrix L(build_laplacian(g));
  Matrix Lp = Matrix::Identity(10, 10);
  for (int k = 0; k <= 5; ++k) {
    const Matrix op = build_diff_operator(g, k).dense();
    if (k % 2 == 0) {
      CHECK((op - F * Lp).cwiseAbs().maxCoeff() == 0.0);
    } else {
      Lp = Lp * L;
      CHECK((op - Lp).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("univariate operator matches binomial coefficients") {
  for (int order = 1; order <= 4; ++order) {
    const Matrix D(univariate_difference(9, order));
    CHECK(D == binomial_difference(9, order));
  }
}

TEST_CASE("trimmed path operators recover the univariate operators up to sign") {
  for (Index n = 5; n <= 30; ++n) {
    const UndirectedGraph g = path_graph(n);
    for (int k = 0; k <= 3; ++k) {
      const Matrix trimmed = testutil::trim_path_operator(build_diff_operator(g, k).dense(), k);
      const Matrix target = testutil::trim_sign(k) * binomial_difference(n, k + 1);
      REQUIRE(trimmed.rows() == target.rows());
      CHECK((trimmed - target).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("rank of the difference operators is n minus the number of components") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index n = 5 + static_cast<Index>(s % 16);
    const double p = 0.05 + 0.3 * static_cast<double>(s % 7) / 6.0;
    const UndirectedGraph g = testutil::random_graph(n, p, 1000 + s);
    const int r = count_components(g);
    for (int k = 0; k <= 3; ++k) {
      const Matrix op = build_diff_operator(g, k).dense();
      CHECK(testutil::numerical_rank(op) == n - r);
    }
  }
}

TEST_CASE("largest Laplacian eigenvalue is at most twice the maximum degree") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const UndirectedGraph g = testutil::random_graph(8 + static_cast<Index>(s % 13), 0.35, 5000 + s);
    const Matrix L = dense_laplacian(g);
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(L).eigenvalues().maxCoeff();
    CHECK(lmax <= 2.0 * static_cast<double>(g.max_degree()) + 1e-12);
  }
}

TEST_CASE("connected components after excluding edges") {
  const UndirectedGraph p4 = path_graph(4);
  const std::vector<Index> cut{1};  // edge (2,3) in 1-based labels
  auto comps = connected_components(p4, cut);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<Index>{0, 1});
  CHECK(comps[1] == std::vector<Index>{2, 3});

  CHECK(connected_components(p4).size() == 1);

  const UndirectedGraph tri(3, {{0, 1}, {1, 2}, {0, 2}});
  const std::vector<Index> all{0, 1, 2};
  CHECK(connected_components(tri, all).size() == 3);

  const std::vector<Index> bad{5};
  CHECK_THROWS_AS(connected_components(tri, bad), std::out_of_range);
}

TEST_CASE("components agree with union-find on random graphs") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const UndirectedGraph g = testutil::random_graph(20, 0.08, 300 + s);
    const auto comps = connected_components(g);
    CHECK(static_cast<int>(comps.size()) == count_components(g));
    std::vector<int> seen(20, 0);
    for (const auto& c : comps)
      for (Index v : c) ++seen[static_cast<std::size_t>(v)];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int x) { return x == 1; }));
  }
}

TEST_CASE("structure counts and supports") {
  const UndirectedGraph g = path_graph(6);
  const DiffOperator op = build_diff_operator(g, 0);
  CHECK(structure_counts(Vector::Zero(6), op) == StructureCounts{0, 0});
  Vector b(6);
  b << 0, 0, 1, 1, 1, 0;
  CHECK(structure_counts(b, op) == StructureCounts{2, 3});
  Vector tiny = Vector::Constant(6, 1e-9);
  CHECK(structure_counts(tiny, op).s2 == 0);
  CHECK(structure_counts(tiny, op, 1e-10).s2 == 6);
  CHECK_THROWS_AS(structure_counts(Vector::Zero(5), op), DimensionError);
  CHECK(support(b, 0.5) == std::vector<Index>{2, 3, 4});
}

TEST_CASE("storage hint follows size and fill") {
  CHECK(build_diff_operator(path_graph(20), 0).prefers_dense());
  CHECK_FALSE(build_diff_operator(path_graph(200), 0).prefers_dense());
  CHECK_THROWS(build_diff_operator(path_graph(5), -1));
}

}  // TEST_SUITE
