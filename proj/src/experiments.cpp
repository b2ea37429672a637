#include "gppl/experiments.hpp"

#include "gppl/parallel.hpp"

#include <cmath>
#include <numeric>

namespace gppl {

namespace {

CVConfig cv_config(const TuningGrid& grid, const RegressionProblem& problem, std::vector<int> ks,
                   std::uint64_t seed) {
  CVConfig cv;
  cv.folds = grid.folds;
  cv.lambda_grid = default_lambda_grid(problem, grid.lambda_count, grid.lambda_ratio);
  cv.gamma_grid = grid.gamma_grid;
  cv.k_candidates = std::move(ks);
  cv.seed = seed;
  cv.solver = grid.solver;
  return cv;
}

}  // namespace

void BenchCell::validate() const {
  if (reps < 2) throw std::invalid_argument("standard errors need at least 2 repetitions");
  ScenarioSpec{family, scenario, samples, sigma_eps, seed}.validate();
}

std::vector<int> scenario_k_candidates(int scenario) {
  const int k = scenario_order(scenario);
  if (k < 0) return {0, 1, 2, 3};
  return {k};
}

BenchResult run_bench_cell(const BenchCell& cell) {
  cell.validate();
  BenchResult out;
  out.cell = cell;
  out.reps.resize(static_cast<std::size_t>(cell.reps));
  const std::vector<int> ks = scenario_k_candidates(cell.scenario);
  parallel_for(out.reps.size(), [&](std::size_t r) {
    const std::uint64_t seed = cell.seed + r;
    const SyntheticDataset data =
        make_dataset(ScenarioSpec{cell.family, cell.scenario, cell.samples, cell.sigma_eps, seed});
    const CVResult cv =
        cross_validate(data.problem, &data.graph, cell.method, cv_config(cell.tuning, data.problem, ks, seed));
    BenchRep& rep = out.reps[r];
    rep.rep = static_cast<int>(r);
    rep.seed = seed;
    rep.l2_error = (cv.refit.beta_hat - data.beta_star).norm();
    rep.tuning = cv.best;
    rep.converged = cv.refit.converged;
    rep.nonconverged_cv_fits = cv.nonconverged_fits;
    rep.s1 = static_cast<Index>(cv.refit.support_s1.size());
    rep.s2 = static_cast<Index>(cv.refit.support_s2.size());
  });
  double sum = 0.0;
  for (const auto& r : out.reps) sum += r.l2_error;
  out.mean = sum / cell.reps;
  double ss = 0.0;
  for (const auto& r : out.reps) ss += (r.l2_error - out.mean) * (r.l2_error - out.mean);
  out.se = std::sqrt(ss / (cell.reps - 1)) / std::sqrt(static_cast<double>(cell.reps));
  return out;
}

InferenceStudyResult run_inference_study(const InferenceStudyConfig& config) {
  if (config.trials < 1) throw std::invalid_argument("inference study needs at least one trial");
  const Index n = family_dimension(config.family);
  const UndirectedGraph graph = family_graph(config.family);
  if (config.coordinate < 0 || config.coordinate >= n) throw std::out_of_range("coordinate out of range");
  if (config.edge < 0 || config.edge >= graph.num_edges()) throw std::out_of_range("edge out of range");

  InferenceStudyResult res;
  res.config = config;
  const Matrix X = gaussian_design(config.samples, n, config.seed);
  const Matrix sigma_N = X.transpose() * X / static_cast<double>(config.samples);

  res.mu_known = clime_default_mu(config.mu_c_known, n, config.samples);
  res.mu_estimated = clime_default_mu(config.mu_c_estimated, n, config.samples);
  res.perturbation = std::isnan(config.perturbation) ? clime_default_perturbation(sigma_N, config.samples)
                                                     : config.perturbation;
  ClimeConfig cc = config.clime;
  cc.perturbation = res.perturbation;
  const Edge& tested = graph.edge(config.edge);
  std::vector<Index> rows{config.coordinate, tested.u, tested.v};
  const PrecisionSurrogate theta_known = clime_fit(sigma_N, res.mu_known, cc, rows);
  const PrecisionSurrogate theta_est = clime_fit(sigma_N, res.mu_estimated, cc, rows);
  res.feasibility_known = theta_known.feasibility;
  res.feasibility_estimated = theta_est.feasibility;
  res.raw_feasibility_known = theta_known.raw_feasibility;
  res.raw_feasibility_estimated = theta_est.raw_feasibility;

  auto trial_spec = [&](int t) {
    return ScenarioSpec{config.family, config.scenario, config.samples, config.sigma_eps,
                        config.seed + static_cast<std::uint64_t>(t)};
  };
  {
    const SyntheticDataset first = make_dataset(trial_spec(0), X);
    const CVResult cv = cross_validate(first.problem, &graph, PenaltyKind::kGppl,
                                       cv_config(config.tuning, first.problem,
                                                 scenario_k_candidates(config.scenario), config.seed));
    res.tuning = cv.best;
  }
  res.beta_star_coordinate = make_beta_star(config.family, config.scenario)[config.coordinate];

  res.trials.resize(static_cast<std::size_t>(config.trials));
  parallel_for(res.trials.size(), [&](std::size_t t) {
    const SyntheticDataset data = make_dataset(trial_spec(static_cast<int>(t)), X);
    Fitter fitter(data.problem, &graph, PenaltyKind::kGppl, res.tuning.k, config.tuning.solver);
    const FitResult fit = fitter.fit(res.tuning.lambda, res.tuning.lambda_g);
    const InferenceReport known = infer(data.problem, fit.beta_hat, theta_known, config.sigma_eps, config.alpha);
    const InferenceReport est = infer(data.problem, fit.beta_hat, theta_est, std::nullopt, config.alpha);
    const Index pk = *known.position(config.coordinate);
    const Index pe = *est.position(config.coordinate);
    const double root_n = std::sqrt(static_cast<double>(config.samples));

    InferenceTrial& tr = res.trials[t];
    tr.trial = static_cast<int>(t);
    tr.beta_tilde_known = known.beta_tilde[pk];
    tr.beta_tilde_estimated = est.beta_tilde[pe];
    tr.sigma_hat = est.sigma_used;
    tr.z_known = root_n * (tr.beta_tilde_known - res.beta_star_coordinate) /
                 (known.sigma_used * std::sqrt(known.variance[pk]));
    tr.z_estimated = root_n * (tr.beta_tilde_estimated - res.beta_star_coordinate) /
                     (est.sigma_used * std::sqrt(est.variance[pe]));
    tr.lo_known = known.intervals(pk, 0);
    tr.hi_known = known.intervals(pk, 1);
    tr.lo_estimated = est.intervals(pe, 0);
    tr.hi_estimated = est.intervals(pe, 1);
    tr.covered_known = tr.lo_known <= res.beta_star_coordinate && res.beta_star_coordinate <= tr.hi_known;
    tr.covered_estimated =
        tr.lo_estimated <= res.beta_star_coordinate && res.beta_star_coordinate <= tr.hi_estimated;
    tr.edge_test = test_edge(known, theta_known, sigma_N, graph, config.edge, config.alpha);
    const Decomposition d = decompose(fit.beta_hat, data.beta_star, data.epsilon, theta_known, data.problem);
    tr.decomposition_error = d.identity_error;
    tr.bias_norm = d.bias.lpNorm<Eigen::Infinity>();
    tr.bias_bound = d.bias_bound;
  });

  std::vector<double> zk, ze;
  int cov_k = 0, cov_e = 0, rejects = 0;
  for (const auto& tr : res.trials) {
    cov_k += tr.covered_known;
    cov_e += tr.covered_estimated;
    rejects += tr.edge_test.reject;
    zk.push_back(tr.z_known);
    ze.push_back(tr.z_estimated);
    res.max_decomposition_error = std::max(res.max_decomposition_error, tr.decomposition_error);
    if (tr.bias_norm > tr.bias_bound * (1.0 + 1e-9) + 1e-12) res.bias_bound_holds = false;
  }
  const double T = static_cast<double>(config.trials);
  res.coverage_known = cov_k / T;
  res.coverage_estimated = cov_e / T;
  res.type1_error = rejects / T;
  res.ks_known = ks_test_normal(zk);
  res.ks_estimated = ks_test_normal(ze);
  return res;
}

}  // namespace gppl
