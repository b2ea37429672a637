#pragma once

// K-fold cross-validation over (lambda, gamma = lambda_g / lambda, k).

#include "gppl/graph.hpp"
#include "gppl/solver.hpp"
#include "gppl/types.hpp"

#include <cstdint>
#include <vector>

namespace gppl {

struct CVConfig {
  int folds = 5;
  std::vector<double> lambda_grid;  // positive; empty means default_lambda_grid
  std::vector<double> gamma_grid{0.0, 0.1, 0.5, 1.0, 2.0, 5.0};
  std::vector<int> k_candidates{0};
  std::uint64_t seed = 1;
  bool warm_start = true;
  SolverConfig solver;

  void validate(Index samples) const;
};

struct Tuning {
  double lambda = 0.0;
  double gamma = 0.0;
  double lambda_g = 0.0;  // gamma * lambda
  int k = 0;
};

struct CVResult {
  Tuning best;
  double best_error = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> gamma_grid;
  std::vector<int> k_candidates;
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Index>> fold_members;
  std::vector<double> fold_errors;  // [k][gamma][lambda][fold], row-major
  int nonconverged_fits = 0;
  FitResult refit;

  double fold_error(std::size_t ki, std::size_t gi, std::size_t li, std::size_t f) const;
  double mean_error(std::size_t ki, std::size_t gi, std::size_t li) const;
};

// Seeded permutation cut into `folds` contiguous blocks whose sizes differ
// by at most one. Members of each fold are sorted.
std::vector<std::vector<Index>> make_folds(Index samples, int folds, std::uint64_t seed);

// `count` log-spaced values from ||X^T y / N||_inf down to ratio times that.
// Throws std::invalid_argument when the maximum is zero.
std::vector<double> default_lambda_grid(const RegressionProblem& problem, int count = 50,
                                        double ratio = 1e-4);

// Only gppl searches over gamma and k; ridge-type kinds use gamma as
// lambda_2 / lambda_1; the lasso ignores both.
CVResult cross_validate(const RegressionProblem& problem, const UndirectedGraph* graph,
                        PenaltyKind kind, const CVConfig& config);

}  // namespace gppl
