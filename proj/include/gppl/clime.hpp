#pragma once

// CLIME: row-wise l1-minimal approximate inverse of a Gram matrix,
//
//     theta_i = argmin ||theta||_1  s.t.  ||Sigma theta - e_i||_inf <= mu,
//
// solved by linearized ADMM on the split w = Sigma theta - e_i. Rows on which
// ADMM stalls are handed to a primal-dual interior-point LP solver, which
// meets the constraint to near machine precision.

#include "gppl/types.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace gppl {

// kAuto: ADMM first, interior point for rows that do not converge.
enum class ClimeMethod { kAdmm, kInteriorPoint, kAuto };
std::string_view to_string(ClimeMethod method);
ClimeMethod parse_clime_method(std::string_view name);

struct ClimeConfig {
  ClimeMethod method = ClimeMethod::kAuto;
  double rho = 1.0;
  double eps_abs = 1e-7;
  double eps_rel = 1e-5;
  int max_iter = 50000;
  // ADMM budget under kAuto before the row goes to the interior-point solver.
  int auto_admm_iter = 2000;
  bool adaptive_rho = true;
  int rho_update_interval = 50;
  // Stop only once every constraint is met to within this slack.
  double feasibility_slack = 5e-7;
  int ipm_max_iter = 200;
  double ipm_tol = 1e-9;
  // Added to the diagonal of Sigma before solving. Zero keeps the textbook
  // program; see clime_default_perturbation for rank-deficient Gram matrices.
  double perturbation = 0.0;
  // Throw ConvergenceError on the first row that fails to converge.
  bool strict = true;

  void validate() const;
};

struct ClimeRowResult {
  Vector theta;
  int iterations = 0;
  bool converged = false;
  double feasibility = 0.0;  // ||Sigma theta - e_i||_inf against the solved matrix
  ClimeMethod method = ClimeMethod::kAdmm;  // solver that produced theta
};

struct PrecisionSurrogate {
  std::vector<Index> rows;  // coordinates solved, ascending
  Matrix theta_hat;         // rows.size() x n; row r is theta for coordinate rows[r]
  double mu = 0.0;
  double perturbation = 0.0;
  double feasibility = 0.0;      // max |Theta (Sigma + delta I) - I| over solved rows
  double raw_feasibility = 0.0;  // same against Sigma itself
  Vector l1_norms;
  std::vector<int> iterations;
  std::vector<ClimeMethod> methods;
  std::vector<Index> failed_rows;

  Index dimension() const { return theta_hat.cols(); }
  bool converged() const { return failed_rows.empty(); }
  bool is_full() const { return static_cast<Index>(rows.size()) == theta_hat.cols(); }
  // Position of coordinate j in `rows`, or nullopt when it was not solved.
  std::optional<Index> position(Index j) const;
  // The full n x n matrix; throws std::logic_error unless every row was solved.
  const Matrix& full() const;
};

// mu = c * sqrt(log n / N).
double clime_default_mu(double c, Index n, Index samples);

// max((lambda_max - n lambda_min)_+ / (n - 1), 1 / sqrt(N)): the diagonal
// loading used by common CLIME implementations. Sigma must be symmetric.
double clime_default_perturbation(const Matrix& sigma, Index samples);

// Largest singular value by power iteration.
double spectral_norm_estimate(const Matrix& A, int steps = 100, double tol = 1e-10);

class ClimeSolver {
 public:
  // Throws std::invalid_argument if sigma is not square and symmetric to 1e-12
  // (relative to its largest entry).
  ClimeSolver(Matrix sigma, ClimeConfig config = {});

  ClimeRowResult solve_row(Index i, double mu) const;
  Index dimension() const { return sigma_.rows(); }
  const Matrix& constraint_matrix() const { return sigma_; }

 private:
  ClimeRowResult admm_row(Index i, double mu, int max_iter) const;

  Matrix sigma_;  // includes the perturbation
  ClimeConfig config_;
  double sigma_max_ = 0.0;
};

ClimeRowResult clime_row(const Matrix& sigma, Index i, double mu, const ClimeConfig& config = {});

// Solves the requested rows (all rows when `rows` is empty), possibly in
// parallel, and assembles them by row index.
PrecisionSurrogate clime_fit(const Matrix& sigma, double mu, const ClimeConfig& config = {},
                             std::vector<Index> rows = {});

}  // namespace gppl
