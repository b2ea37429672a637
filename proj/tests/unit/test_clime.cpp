#include "gppl/clime.hpp"
#include "oracles/simplex_oracle.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace gppl;

namespace {

Matrix random_gram(Index N, Index n, std::uint64_t seed) {
  const Matrix X = testutil::random_matrix(N, n, seed);
  return X.transpose() * X / static_cast<double>(N);
}

double feasibility(const Matrix& S, const Vector& theta, Index i) {
  Vector e = Vector::Zero(S.rows());
  e[i] = 1.0;
  return (S * theta - e).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_SUITE("clime") {

TEST_CASE("simplex oracle solves a textbook LP") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
  Matrix A(3, 2);
  A << 1, 0, 0, 2, 3, 2;
  Vector b(3);
  b << 4, 12, 18;
  Vector c(2);
  c << -3, -5;
  const oracle::LpResult r = oracle::simplex_min(c, A, b);
  REQUIRE(r.feasible);
  CHECK(r.objective == doctest::Approx(-36.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(6.0));
}

TEST_CASE("every method matches the LP oracle on small problems") {
  for (Index n = 2; n <= 6; ++n)
    for (double mu : {0.02, 0.1, 0.4}) {
      const Matrix S = random_gram(3 * n + 5, n, 10 * n + static_cast<std::uint64_t>(mu * 100));
      for (auto method : {ClimeMethod::kAdmm, ClimeMethod::kInteriorPoint, ClimeMethod::kAuto}) {
        ClimeConfig cfg;
        cfg.method = method;
        for (Index i = 0; i < n; ++i) {
          const oracle::LpResult ref = oracle::clime_row_lp(S, static_cast<int>(i), mu);
          REQUIRE(ref.feasible);
          const ClimeRowResult row = clime_row(S, i, mu, cfg);
          CAPTURE(n);
          CAPTURE(mu);
          CAPTURE(to_string(method));
          CHECK(row.converged);
          const double obj = row.theta.lpNorm<1>();
          CHECK(std::abs(obj - ref.objective) <= 1e-4 * std::max(1.0, ref.objective));
          CHECK(feasibility(S, row.theta, i) <= mu + 1e-6);
        }
      }
    }
}

TEST_CASE("identity Gram matrix has the shrunken unit vector as solution") {
  const Matrix S = Matrix::Identity(5, 5);
  const PrecisionSurrogate t = clime_fit(S, 0.2);
  REQUIRE(t.is_full());
  CHECK((t.full() - 0.8 * Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(t.feasibility <= 0.2 + 1e-6);
}

TEST_CASE("mu >= 1 makes zero the solution") {
  const Matrix S = random_gram(10, 4, 3);
  const ClimeRowResult r = clime_row(S, 2, 1.0);
  CHECK(r.converged);
  CHECK(r.theta.isZero());
}

TEST_CASE("partial fits keep the requested rows in order") {
  const Matrix S = random_gram(40, 8, 4);
  const PrecisionSurrogate t = clime_fit(S, 0.05, {}, {5, 1, 5});
  CHECK(t.rows == std::vector<Index>{1, 5});
  CHECK(t.theta_hat.rows() == 2);
  CHECK(t.position(5) == 1);
  CHECK_FALSE(t.position(2).has_value());
  CHECK_FALSE(t.is_full());
  CHECK_THROWS_AS(t.full(), std::logic_error);
  const ClimeRowResult r5 = clime_row(S, 5, 0.05);
  CHECK((t.theta_hat.row(1).transpose() - r5.theta).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(t.l1_norms.size() == 2);
  CHECK(t.feasibility <= 0.05 + 1e-6);
  CHECK_THROWS_AS(clime_fit(S, 0.05, {}, {8}), std::out_of_range);
}

TEST_CASE("rank-deficient Gram matrices need diagonal loading") {
  const Index n = 30, N = 15;
  const Matrix S = random_gram(N, n, 5);
  const double mu = clime_default_mu(0.05, n, N);
  ClimeConfig cfg;
  cfg.strict = false;
  const PrecisionSurrogate raw = clime_fit(S, mu, cfg, {0});
  CHECK_FALSE(raw.converged());

  cfg.perturbation = clime_default_perturbation(S, N);
  const PrecisionSurrogate loaded = clime_fit(S, mu, cfg, {0, 3});
  CHECK(loaded.converged());
  CHECK(loaded.perturbation == cfg.perturbation);
  CHECK(loaded.feasibility <= mu + 1e-6);
  // against the unloaded matrix the slack grows by delta * |theta|_inf
  const double inf_norm = loaded.theta_hat.cwiseAbs().maxCoeff();
  CHECK(loaded.raw_feasibility <= mu + cfg.perturbation * inf_norm + 1e-6);

  cfg.strict = true;
  cfg.perturbation = 0.0;
  CHECK_THROWS_AS(clime_fit(S, mu, cfg, {0}), ConvergenceError);
}

TEST_CASE("default tuning constants") {
  CHECK(clime_default_mu(0.05, 250, 200) == doctest::Approx(0.05 * std::sqrt(std::log(250.0) / 200.0)));
  const Matrix S = random_gram(20, 10, 6);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues();
  const double cond = std::max(ev.maxCoeff() - 10.0 * ev.minCoeff(), 0.0) / 9.0;
  CHECK(clime_default_perturbation(S, 20) == doctest::Approx(std::max(cond, 1.0 / std::sqrt(20.0))));
}

TEST_CASE("spectral norm estimate") {
  const Matrix A = testutil::random_matrix(12, 7, 8);
  const double ref = A.jacobiSvd().singularValues()[0];
  CHECK(spectral_norm_estimate(A, 1000, 1e-14) == doctest::Approx(ref).epsilon(1e-8));
  CHECK(spectral_norm_estimate(Matrix::Zero(3, 3)) == 0.0);
}

TEST_CASE("argument checks") {
  Matrix S = random_gram(10, 4, 9);
  CHECK_THROWS_AS(clime_row(S, 4, 0.1), std::out_of_range);
  CHECK_THROWS_AS(clime_row(S, 0, 0.0), std::invalid_argument);
  S(0, 1) += 0.1;
  CHECK_THROWS_AS(ClimeSolver{S}, std::invalid_argument);
  CHECK_THROWS_AS(ClimeSolver(Matrix::Zero(2, 3)), std::invalid_argument);
  ClimeConfig c;
  c.perturbation = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_clime_method("interior-point") == ClimeMethod::kInteriorPoint);
  CHECK(parse_clime_method(to_string(ClimeMethod::kAdmm)) == ClimeMethod::kAdmm);
  CHECK_THROWS_AS(parse_clime_method("simplex"), std::invalid_argument);
}

}  // TEST_SUITE
