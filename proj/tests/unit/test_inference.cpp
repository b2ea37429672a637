#include "gppl/inference.hpp"
#include "gppl/normal.hpp"
#include "gppl/simgen.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace gppl;

namespace {

struct Setup {
  RegressionProblem problem;
  Vector beta_star;
  Vector eps;
  Matrix sigma_N;
};

Setup low_dim(Index N, Index n, std::uint64_t seed, double noise) {
  Matrix X = testutil::random_matrix(N, n, seed);
  Vector beta = Vector::Zero(n);
  beta.head(n / 2).setConstant(1.0);
  Vector eps = noise * testutil::random_matrix(N, 1, seed + 1).col(0);
  Vector y = X * beta + eps;
  Matrix S = X.transpose() * X / static_cast<double>(N);
  return {RegressionProblem(std::move(X), std::move(y)), beta, eps, S};
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("one-step estimate follows its defining formula") {
  const Setup s = low_dim(40, 6, 1, 0.5);
  const PrecisionSurrogate t = clime_fit(s.sigma_N, 0.05);
  const Vector beta_hat = fit(s.problem, {PenaltyKind::kLasso, 0.05, 0.0, 0}).beta_hat;
  const Vector bt = one_step(beta_hat, t, s.problem);
  const Vector direct =
      beta_hat + t.full() * s.problem.X().transpose() * (s.problem.y() - s.problem.X() * beta_hat) / 40.0;
  CHECK((bt - direct).lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK_THROWS_AS(one_step(Vector::Zero(5), t, s.problem), DimensionError);
}

TEST_CASE("decomposition identity holds to rounding on synthetic runs") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SyntheticDataset d = make_dataset({Family::kPath250, 1, 100, kDefaultSigmaEps, seed});
    const Matrix S = d.problem.X().transpose() * d.problem.X() / 100.0;
    ClimeConfig cfg;
    cfg.perturbation = clime_default_perturbation(S, 100);
    const PrecisionSurrogate t = clime_fit(S, clime_default_mu(0.05, 250, 100), cfg, {0, 1, 100});
    const Vector beta_hat = fit(d.problem, d.graph, {PenaltyKind::kGppl, 0.01, 0.05, 0}).beta_hat;
    const Decomposition dec = decompose(beta_hat, d.beta_star, d.epsilon, t, d.problem);
    CHECK(dec.identity_error < 1e-10);
    CHECK(dec.bias.lpNorm<Eigen::Infinity>() <= dec.bias_bound * (1 + 1e-12));
    CHECK(dec.lhs.size() == 3);
  }
}

TEST_CASE("variance forms and intervals") {
  const Setup s = low_dim(50, 5, 2, 0.3);
  const PrecisionSurrogate t = clime_fit(s.sigma_N, 0.02);
  const Vector v = variance_forms(t, s.sigma_N);
  for (Index j = 0; j < 5; ++j) {
    const Vector th = t.full().row(j).transpose();
    CHECK(v[j] == doctest::Approx(th.dot(s.sigma_N * th)).epsilon(1e-13));
  }
  const Vector bt = Vector::LinSpaced(5, -1.0, 1.0);
  const InferenceReport rep = confidence_intervals(bt, t, s.sigma_N, 0.3, false, 0.05, 50);
  const double z = normal_quantile(0.975);
  for (Index j = 0; j < 5; ++j) {
    CHECK(rep.se[j] == doctest::Approx(0.3 * std::sqrt(v[j] / 50.0)));
    CHECK(rep.intervals(j, 1) - rep.intervals(j, 0) == doctest::Approx(2 * z * rep.se[j]));
    CHECK(rep.intervals(j, 0) + rep.intervals(j, 1) == doctest::Approx(2 * bt[j]));
  }
  CHECK_THROWS_AS(confidence_intervals(bt, t, s.sigma_N, 0.3, false, 1.0, 50), std::invalid_argument);
  CHECK_THROWS_AS(confidence_intervals(bt, t, s.sigma_N, -0.3, false, 0.05, 50), std::invalid_argument);
  CHECK_THROWS_AS(confidence_intervals(Vector::Zero(4), t, s.sigma_N, 0.3, false, 0.05, 50), DimensionError);
}

TEST_CASE("zero rows of Theta leave their intervals undefined") {
  const Setup s = low_dim(30, 4, 3, 0.3);
  const PrecisionSurrogate t = clime_fit(s.sigma_N, 1.5);
  const InferenceReport rep = infer(s.problem, Vector::Zero(4), t, 1.0, 0.05);
  for (bool d : rep.defined) CHECK_FALSE(d);
  CHECK(std::isnan(rep.se[0]));
  CHECK(std::isnan(rep.intervals(0, 0)));
  CHECK_THROWS_AS(test_coordinate(rep, 0), std::domain_error);
}

TEST_CASE("estimated sigma is the root mean squared residual") {
  const Setup s = low_dim(30, 4, 4, 0.3);
  const Vector b = Vector::Constant(4, 0.2);
  CHECK(estimate_sigma(s.problem, b) ==
        doctest::Approx(std::sqrt((s.problem.y() - s.problem.X() * b).squaredNorm() / 30.0)));
}

TEST_CASE("noiseless data give a vanishing sigma estimate and intervals that exclude zero") {
  const Setup s = low_dim(100, 10, 5, 0.0);
  const FitResult f = fit(s.problem, {PenaltyKind::kLasso, 1e-9, 0.0, 0});
  const PrecisionSurrogate t = clime_fit(s.sigma_N, 0.01);
  const InferenceReport rep = infer(s.problem, f.beta_hat, t, std::nullopt, 0.05);
  CHECK(rep.sigma_used < 1e-6);
  CHECK(rep.sigma_is_estimated);
  for (Index j = 0; j < 5; ++j) {
    CHECK(rep.intervals(j, 0) > 0.0);
    CHECK(test_coordinate(rep, j).reject);
  }
}

TEST_CASE("coordinate and edge statistics") {
  const Setup s = low_dim(60, 6, 6, 0.4);
  const PrecisionSurrogate t = clime_fit(s.sigma_N, 0.03);
  const Vector beta_hat = fit(s.problem, {PenaltyKind::kLasso, 0.02, 0.0, 0}).beta_hat;
  const InferenceReport rep = infer(s.problem, beta_hat, t, 0.4, 0.05);

  const TestResult tc = test_coordinate(rep, 4);
  const double z = std::sqrt(60.0) * rep.beta_tilde[4] / (0.4 * std::sqrt(rep.variance[4]));
  CHECK(tc.statistic == doctest::Approx(z));
  CHECK(tc.p_value == doctest::Approx(2.0 * (1.0 - normal_cdf(std::abs(z)))));
  CHECK(tc.reject == (std::abs(z) > 1.959963984540054));
  CHECK(tc.kind == TestKind::kCoordinate);

  const UndirectedGraph g = path_graph(6);
  const TestResult te = test_edge(rep, t, s.sigma_N, g, 2);  // nodes 2 and 3
  const Vector gv = t.full().row(3).transpose() - t.full().row(2).transpose();
  const double ze = std::sqrt(60.0) * (rep.beta_tilde[3] - rep.beta_tilde[2]) / (0.4 * std::sqrt(gv.dot(s.sigma_N * gv)));
  CHECK(te.statistic == doctest::Approx(ze));
  CHECK(te.kind == TestKind::kEdge);
  CHECK(te.target == 2);
  CHECK_THROWS_AS(test_edge(rep, t, s.sigma_N, g, 5), std::out_of_range);

  const PrecisionSurrogate part = clime_fit(s.sigma_N, 0.03, {}, {0, 1});
  const InferenceReport prep = infer(s.problem, beta_hat, part, 0.4, 0.05);
  CHECK_THROWS_AS(test_coordinate(prep, 3), std::out_of_range);
  CHECK_THROWS_AS(test_edge(prep, part, s.sigma_N, g, 2), std::out_of_range);
  CHECK(test_edge(prep, part, s.sigma_N, g, 0).statistic == doctest::Approx(
            std::sqrt(60.0) * (prep.beta_tilde[1] - prep.beta_tilde[0]) /
            (0.4 * std::sqrt((part.theta_hat.row(1) - part.theta_hat.row(0)) * s.sigma_N *
                             (part.theta_hat.row(1) - part.theta_hat.row(0)).transpose()))));
}

TEST_CASE("intervals cover at roughly the nominal rate in a low-dimensional model") {
  const Index N = 200, n = 10;
  const Matrix X = testutil::random_matrix(N, n, 9);
  const Matrix S = X.transpose() * X / static_cast<double>(N);
  const PrecisionSurrogate t = clime_fit(S, 0.01, {}, {0});
  Vector beta = Vector::Zero(n);
  beta[0] = 1.0;
  int covered = 0;
  const int trials = 300;
  for (int r = 0; r < trials; ++r) {
    const Vector eps = gaussian_noise(N, 1.0, 100 + static_cast<std::uint64_t>(r));
    const RegressionProblem p(X, X * beta + eps);
    const Vector bh = fit(p, {PenaltyKind::kLasso, 0.02, 0.0, 0}).beta_hat;
    const InferenceReport rep = infer(p, bh, t, 1.0, 0.05);
    covered += rep.intervals(0, 0) <= 1.0 && 1.0 <= rep.intervals(0, 1);
  }
  const double rate = static_cast<double>(covered) / trials;
  CHECK(rate > 0.90);
  CHECK(rate < 0.99);
}

TEST_CASE("Kolmogorov tail against a high-precision series") {
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.96394524366487509).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735452).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.049485876755377884).epsilon(1e-12));
  CHECK(kolmogorov_sf(1.63) == doctest::Approx(0.0098463648884865313).epsilon(1e-12));
  CHECK(kolmogorov_sf(2.0) == doctest::Approx(0.00067092525577969535).epsilon(1e-10));
  CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("KS statistics agree with a reference implementation") {
  CHECK(ks_test_normal({-1.2, -0.3, 0.1, 0.4, 2.0}).statistic == doctest::Approx(0.18208857781104737));
  CHECK(ks_test_uniform({0.05, 0.2, 0.21, 0.6, 0.93, 0.97}).statistic == doctest::Approx(0.29));
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100.0);
  const KsResult r = ks_test_uniform(grid);
  CHECK(r.statistic == doctest::Approx(0.005));
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(ks_test_normal({}), std::invalid_argument);
}

TEST_CASE("edge-test p-values are uniform under a true null in most meta-repetitions") {
  const Index N = 100, n = 8;
  const UndirectedGraph g = path_graph(n);
  Vector beta = Vector::Zero(n);
  beta.segment(2, 3).setConstant(0.8);  // edge (3, 4) joins equal coefficients
  int passed = 0;
  const int meta = 10;
  for (int m = 0; m < meta; ++m) {
    const Matrix X = testutil::random_matrix(N, n, 500 + static_cast<std::uint64_t>(m));
    const Matrix S = X.transpose() * X / static_cast<double>(N);
    const PrecisionSurrogate t = clime_fit(S, 0.01, {}, {2, 3});
    std::vector<double> p;
    for (int r = 0; r < 200; ++r) {
      const Vector eps = gaussian_noise(N, 0.5, 10000 * static_cast<std::uint64_t>(m + 1) + r);
      const RegressionProblem prob(X, X * beta + eps);
      const Vector bh = fit(prob, g, {PenaltyKind::kGppl, 0.005, 0.005, 0}).beta_hat;
      const InferenceReport rep = infer(prob, bh, t, 0.5, 0.05);
      p.push_back(test_edge(rep, t, S, g, 2).p_value);
    }
    passed += ks_test_uniform(p).p_value > 0.01;
  }
  CHECK(passed >= 9);
}

}  // TEST_SUITE
