#include "gppl/inference.hpp"

#include "gppl/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gppl {

namespace {

void check_theta(const PrecisionSurrogate& theta, Index n) {
  if (theta.dimension() != n)
    throw DimensionError("precision surrogate has " + std::to_string(theta.dimension()) +
                         " columns but the design has " + std::to_string(n));
}

TestResult make_test(TestKind kind, Index target, double z, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  TestResult t;
  t.kind = kind;
  t.target = target;
  t.statistic = z;
  t.p_value = two_sided_p_value(z);
  t.reject = std::abs(z) > normal_quantile(1.0 - alpha / 2.0);
  return t;
}

KsResult ks_test(std::vector<double> sample, double (*cdf)(double)) {
  if (sample.empty()) throw std::invalid_argument("KS test needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

Vector one_step(const Vector& beta_hat, const PrecisionSurrogate& theta,
                const RegressionProblem& problem) {
  const Index n = problem.features();
  if (beta_hat.size() != n) throw DimensionError("beta_hat has the wrong length");
  check_theta(theta, n);
  const Vector score =
      problem.X().transpose() * (problem.y() - problem.X() * beta_hat) / static_cast<double>(problem.samples());
  Vector out = theta.theta_hat * score;
  for (std::size_t r = 0; r < theta.rows.size(); ++r) out[static_cast<Index>(r)] += beta_hat[theta.rows[r]];
  return out;
}

Decomposition decompose(const Vector& beta_hat, const Vector& beta_star, const Vector& epsilon,
                        const PrecisionSurrogate& theta, const RegressionProblem& problem) {
  const Index n = problem.features();
  const Index N = problem.samples();
  if (beta_star.size() != n || epsilon.size() != N) throw DimensionError("decomposition inputs disagree");
  const double root_n = std::sqrt(static_cast<double>(N));
  const Vector bt = one_step(beta_hat, theta, problem);
  const Vector diff = beta_hat - beta_star;

  Decomposition d;
  d.lhs.resize(bt.size());
  for (std::size_t r = 0; r < theta.rows.size(); ++r) {
    const Index ri = static_cast<Index>(r);
    d.lhs[ri] = root_n * (bt[ri] - beta_star[theta.rows[r]]);
  }
  d.psi = theta.theta_hat * (problem.X().transpose() * epsilon) / root_n;
  const Vector sigma_diff = problem.X().transpose() * (problem.X() * diff) / static_cast<double>(N);
  d.bias = theta.theta_hat * sigma_diff;
  for (std::size_t r = 0; r < theta.rows.size(); ++r) d.bias[static_cast<Index>(r)] -= diff[theta.rows[r]];
  d.bias *= root_n;
  d.identity_error = d.lhs.size() ? (d.lhs - (d.psi - d.bias)).lpNorm<Eigen::Infinity>() : 0.0;
  d.bias_bound = root_n * theta.raw_feasibility * diff.lpNorm<1>();
  return d;
}

double estimate_sigma(const RegressionProblem& problem, const Vector& beta_hat) {
  if (beta_hat.size() != problem.features()) throw DimensionError("beta_hat has the wrong length");
  return std::sqrt((problem.y() - problem.X() * beta_hat).squaredNorm() /
                   static_cast<double>(problem.samples()));
}

std::optional<Index> InferenceReport::position(Index j) const {
  auto it = std::lower_bound(coordinates.begin(), coordinates.end(), j);
  if (it == coordinates.end() || *it != j) return std::nullopt;
  return static_cast<Index>(it - coordinates.begin());
}

Vector variance_forms(const PrecisionSurrogate& theta, const Matrix& sigma_N) {
  check_theta(theta, sigma_N.rows());
  const Matrix g = theta.theta_hat * sigma_N;
  return g.cwiseProduct(theta.theta_hat).rowwise().sum();
}

InferenceReport confidence_intervals(const Vector& beta_tilde, const PrecisionSurrogate& theta,
                                     const Matrix& sigma_N, double sigma, bool sigma_is_estimated,
                                     double alpha, Index samples) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be non-negative");
  if (samples < 1) throw std::invalid_argument("sample size must be positive");
  if (beta_tilde.size() != static_cast<Index>(theta.rows.size()))
    throw DimensionError("beta_tilde does not match the solved rows");

  InferenceReport rep;
  rep.coordinates = theta.rows;
  rep.beta_tilde = beta_tilde;
  rep.variance = variance_forms(theta, sigma_N);
  rep.alpha = alpha;
  rep.sigma_used = sigma;
  rep.sigma_is_estimated = sigma_is_estimated;
  rep.samples = samples;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Index k = beta_tilde.size();
  rep.se.resize(k);
  rep.intervals.resize(k, 2);
  rep.defined.assign(static_cast<std::size_t>(k), false);
  for (Index r = 0; r < k; ++r) {
    const double v = rep.variance[r];
    if (v > 0.0) {
      rep.se[r] = sigma * std::sqrt(v / static_cast<double>(samples));
      rep.intervals(r, 0) = beta_tilde[r] - z * rep.se[r];
      rep.intervals(r, 1) = beta_tilde[r] + z * rep.se[r];
      rep.defined[static_cast<std::size_t>(r)] = true;
    } else {
      rep.se[r] = nan;
      rep.intervals(r, 0) = nan;
      rep.intervals(r, 1) = nan;
    }
  }
  return rep;
}

InferenceReport infer(const RegressionProblem& problem, const Vector& beta_hat,
                      const PrecisionSurrogate& theta, std::optional<double> known_sigma,
                      double alpha) {
  const Vector bt = one_step(beta_hat, theta, problem);
  const Matrix sigma_N =
      problem.X().transpose() * problem.X() / static_cast<double>(problem.samples());
  const double sigma = known_sigma ? *known_sigma : estimate_sigma(problem, beta_hat);
  return confidence_intervals(bt, theta, sigma_N, sigma, !known_sigma, alpha, problem.samples());
}

std::string_view to_string(TestKind kind) { return kind == TestKind::kEdge ? "edge" : "coordinate"; }

TestResult test_coordinate(const InferenceReport& report, Index j, std::optional<double> alpha) {
  const auto pos = report.position(j);
  if (!pos) throw std::out_of_range("coordinate " + std::to_string(j) + " has no inference row");
  const double denom = report.sigma_used * std::sqrt(report.variance[*pos]);
  if (!(denom > 0.0)) throw std::domain_error("zero variance for coordinate " + std::to_string(j));
  const double z = std::sqrt(static_cast<double>(report.samples)) * report.beta_tilde[*pos] / denom;
  return make_test(TestKind::kCoordinate, j, z, alpha.value_or(report.alpha));
}

TestResult test_edge(const InferenceReport& report, const PrecisionSurrogate& theta,
                     const Matrix& sigma_N, const UndirectedGraph& graph, Index edge,
                     std::optional<double> alpha) {
  if (edge < 0 || edge >= graph.num_edges()) throw std::out_of_range("edge index out of range");
  if (graph.num_nodes() != theta.dimension()) throw DimensionError("graph and surrogate disagree");
  const Edge& e = graph.edge(edge);
  const auto pu = report.position(e.u);
  const auto pv = report.position(e.v);
  const auto tu = theta.position(e.u);
  const auto tv = theta.position(e.v);
  if (!pu || !pv || !tu || !tv)
    throw std::out_of_range("edge " + std::to_string(edge) + " endpoints have no inference rows");
  // F_j^T Theta = theta_v - theta_u.
  const Vector g = theta.theta_hat.row(*tv).transpose() - theta.theta_hat.row(*tu).transpose();
  const double q = g.dot(sigma_N * g);
  const double denom = report.sigma_used * std::sqrt(std::max(q, 0.0));
  if (!(denom > 0.0)) throw std::domain_error("zero variance for edge " + std::to_string(edge));
  const double diff = report.beta_tilde[*pv] - report.beta_tilde[*pu];
  const double z = std::sqrt(static_cast<double>(report.samples)) * diff / denom;
  return make_test(TestKind::kEdge, edge, z, alpha.value_or(report.alpha));
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // the alternating series is 1 to double precision here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::vector<double> sample) { return ks_test(std::move(sample), &normal_cdf); }

KsResult ks_test_uniform(std::vector<double> sample) {
  return ks_test(std::move(sample), &uniform_cdf);
}

}  // namespace gppl
