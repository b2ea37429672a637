#pragma once

// Monte-Carlo harnesses: estimation-error cells and the inference study.

#include "gppl/inference.hpp"
#include "gppl/model_select.hpp"
#include "gppl/simgen.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace gppl {

// Grids used when tuning inside the harnesses. lambda runs over `lambda_count`
// log-spaced values from lambda_max down to lambda_ratio * lambda_max.
struct TuningGrid {
  int lambda_count = 50;
  double lambda_ratio = 1e-4;
  std::vector<double> gamma_grid{0.0, 0.1, 0.5, 1.0, 2.0, 5.0};
  int folds = 5;
  SolverConfig solver;
};

struct BenchCell {
  Family family = Family::kPath250;
  int scenario = 1;
  Index samples = 200;
  PenaltyKind method = PenaltyKind::kGppl;
  int reps = 20;
  std::uint64_t seed = 1;
  double sigma_eps = kDefaultSigmaEps;
  TuningGrid tuning;

  void validate() const;  // reps >= 2
};

struct BenchRep {
  int rep = 0;
  std::uint64_t seed = 0;
  double l2_error = 0.0;
  Tuning tuning;
  bool converged = true;
  int nonconverged_cv_fits = 0;
  Index s1 = 0;
  Index s2 = 0;
};

struct BenchResult {
  BenchCell cell;
  std::vector<BenchRep> reps;
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(reps)
};

// The k candidates for a scenario: {0}, {1}, {2} or {0, 1, 2, 3}.
std::vector<int> scenario_k_candidates(int scenario);

// Replication r uses seed + r for data and folds. Replications may run in parallel.
BenchResult run_bench_cell(const BenchCell& cell);

struct InferenceStudyConfig {
  Family family = Family::kPath250;
  int scenario = 1;
  Index samples = 200;
  int trials = 200;
  std::uint64_t seed = 1;
  double sigma_eps = kDefaultSigmaEps;
  double mu_c_known = 0.05;
  double mu_c_estimated = 0.08;
  double alpha = 0.05;
  Index coordinate = 0;  // coordinate whose interval is tracked
  Index edge = 0;        // edge tested for equality of its endpoints
  // Diagonal loading for CLIME; NaN selects clime_default_perturbation.
  double perturbation = std::numeric_limits<double>::quiet_NaN();
  TuningGrid tuning;
  ClimeConfig clime;
};

struct InferenceTrial {
  int trial = 0;
  double beta_tilde_known = 0.0;
  double beta_tilde_estimated = 0.0;
  double z_known = 0.0;      // standardized with the true sigma
  double z_estimated = 0.0;  // standardized with sigma_hat
  double sigma_hat = 0.0;
  double lo_known = 0.0, hi_known = 0.0;
  double lo_estimated = 0.0, hi_estimated = 0.0;
  bool covered_known = false;
  bool covered_estimated = false;
  TestResult edge_test;
  double decomposition_error = 0.0;
  double bias_norm = 0.0;
  double bias_bound = 0.0;
};

struct InferenceStudyResult {
  InferenceStudyConfig config;
  Tuning tuning;
  double mu_known = 0.0;
  double mu_estimated = 0.0;
  double perturbation = 0.0;
  double feasibility_known = 0.0;
  double feasibility_estimated = 0.0;
  double raw_feasibility_known = 0.0;
  double raw_feasibility_estimated = 0.0;
  double beta_star_coordinate = 0.0;
  std::vector<InferenceTrial> trials;
  double coverage_known = 0.0;
  double coverage_estimated = 0.0;
  double type1_error = 0.0;
  KsResult ks_known;
  KsResult ks_estimated;
  double max_decomposition_error = 0.0;
  bool bias_bound_holds = true;
};

// The design is drawn once from `seed`; tuning is chosen by cross-validation
// on the first trial and then held fixed; trial t draws noise from seed + t.
InferenceStudyResult run_inference_study(const InferenceStudyConfig& config);

}  // namespace gppl
