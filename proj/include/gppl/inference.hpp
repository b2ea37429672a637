#pragma once

// De-biased one-step estimation and the tests built on it.
//
// Everything here works on the rows of Theta that were actually solved, so a
// study that only needs a few coordinates never pays for the full matrix.

#include "gppl/clime.hpp"
#include "gppl/graph.hpp"
#include "gppl/solver.hpp"
#include "gppl/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gppl {

// beta_tilde_j = beta_hat_j + theta_j^T X^T (y - X beta_hat) / N for every
// solved row j, in the order of theta.rows.
Vector one_step(const Vector& beta_hat, const PrecisionSurrogate& theta,
                const RegressionProblem& problem);

// sqrt(N)(beta_tilde - beta*) = psi - e on the solved rows, with
// psi = Theta X^T eps / sqrt(N) and e = sqrt(N)(Theta Sigma - I)(beta_hat - beta*).
struct Decomposition {
  Vector lhs;
  Vector psi;
  Vector bias;
  double identity_error = 0.0;  // ||lhs - (psi - bias)||_inf
  double bias_bound = 0.0;      // sqrt(N) * raw feasibility * ||beta_hat - beta*||_1
};

Decomposition decompose(const Vector& beta_hat, const Vector& beta_star, const Vector& epsilon,
                        const PrecisionSurrogate& theta, const RegressionProblem& problem);

// sqrt(RSS / N).
double estimate_sigma(const RegressionProblem& problem, const Vector& beta_hat);

struct InferenceReport {
  std::vector<Index> coordinates;  // solved rows of Theta
  Vector beta_tilde;
  Vector variance;  // theta_j^T Sigma_N theta_j
  Vector se;        // sigma * sqrt(variance / N); NaN where variance <= 0
  Matrix intervals;  // coordinates.size() x 2; NaN where undefined
  std::vector<bool> defined;
  double alpha = 0.05;
  double sigma_used = 0.0;
  bool sigma_is_estimated = false;
  Index samples = 0;

  std::optional<Index> position(Index j) const;
};

// theta_j^T Sigma theta_j for every row of theta.
Vector variance_forms(const PrecisionSurrogate& theta, const Matrix& sigma_N);

// Intervals beta_tilde_j +- z_{1 - alpha/2} * se_j. Throws std::invalid_argument
// when alpha is outside (0, 1) or sigma is negative.
InferenceReport confidence_intervals(const Vector& beta_tilde, const PrecisionSurrogate& theta,
                                     const Matrix& sigma_N, double sigma, bool sigma_is_estimated,
                                     double alpha, Index samples);

// Full pipeline: one-step estimate, sigma (known when given, else estimated
// from the residuals of beta_hat) and intervals.
InferenceReport infer(const RegressionProblem& problem, const Vector& beta_hat,
                      const PrecisionSurrogate& theta, std::optional<double> known_sigma,
                      double alpha);

enum class TestKind { kCoordinate, kEdge };
std::string_view to_string(TestKind kind);

struct TestResult {
  TestKind kind = TestKind::kCoordinate;
  Index target = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

// H0: beta*_j = 0. Throws std::out_of_range if j was not solved and
// std::domain_error on a zero variance.
TestResult test_coordinate(const InferenceReport& report, Index j, std::optional<double> alpha = {});

// H0: beta*_v = beta*_u for edge (u, v). Both endpoints must be solved rows.
TestResult test_edge(const InferenceReport& report, const PrecisionSurrogate& theta,
                     const Matrix& sigma_N, const UndirectedGraph& graph, Index edge,
                     std::optional<double> alpha = {});

// One-sample Kolmogorov-Smirnov test with the asymptotic p-value
// (Stephens' small-sample correction).
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
double kolmogorov_sf(double lambda);
KsResult ks_test_normal(std::vector<double> sample);
KsResult ks_test_uniform(std::vector<double> sample);

}  // namespace gppl
