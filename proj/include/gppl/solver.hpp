#pragma once

// Penalized least squares on graphs.
//
// Every program handled here has the form
//
//     (1/2N) ||y - X beta||^2 + (ridge term) + sum_i w_i |(D beta)_i|
//
// and is solved by scaled ADMM on the split z = D beta. The graph lasso
// (kind gppl) uses D = [ (lambda_g / lambda) Delta ; I ] with a single
// threshold lambda. The ridge-type comparators fold lambda_g ||Delta beta||^2
// into the quadratic and keep D = I.

#include "gppl/graph.hpp"
#include "gppl/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gppl {

enum class PenaltyKind { kGppl, kLasso, kSmooth, kSpline, kGraphSmooth, kGraphSpline };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(std::string_view name);

// Kinds whose operator is taken from the graph (as opposed to the path).
bool needs_graph(PenaltyKind kind);

class RegressionProblem {
 public:
  // Throws DimensionError on shape mismatch and std::invalid_argument on
  // empty or non-finite input.
  RegressionProblem(Matrix X, Vector y);

  const Matrix& X() const noexcept { return X_; }
  const Vector& y() const noexcept { return y_; }
  Index samples() const noexcept { return X_.rows(); }
  Index features() const noexcept { return X_.cols(); }

  RegressionProblem subset(const std::vector<Index>& rows) const;

 private:
  Matrix X_;
  Vector y_;
};

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::kGppl;
  double lambda = 0.0;    // lambda, or lambda_1 for the ridge-type kinds
  double lambda_g = 0.0;  // lambda_g, or lambda_2; ignored by kind lasso
  int k = 0;              // operator order, gppl only

  void validate() const;
};

struct SolverConfig {
  double rho = 1.0;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  int max_iter = 20000;
  bool adaptive_rho = true;
  int rho_update_interval = 50;
  double rho_min = 1e-4;
  double rho_max = 1e4;
  // Absolute threshold for the reported supports. Unset means
  // 1e-6 * max(1, ||beta||_inf), raised to the primal residual of ADMM fits.
  std::optional<double> support_threshold;

  void validate() const;
};

// Iterates carried between fits for warm starts along a tuning path.
struct AdmmState {
  Vector beta;
  Vector z;
  Vector u;
  double rho = 0.0;
};

struct FitResult {
  Vector beta_hat;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  std::vector<Index> support_s1;  // support of Delta beta_hat
  std::vector<Index> support_s2;  // support of beta_hat
  double support_threshold = 0.0;
  Vector dual;  // rho * u: subgradient certificate for the l1 term
  AdmmState state;
};

double soft_threshold(double a, double kappa);

// [gamma * Delta ; I_n], (m + n) x n.
SparseMatrix build_D(const SparseMatrix& delta, double gamma);
inline SparseMatrix build_D(const DiffOperator& op, double gamma) { return build_D(op.matrix, gamma); }

// D^+ = (D^T D)^{-1} D^T through a cached Cholesky factor of D^T D.
class PseudoInverse {
 public:
  explicit PseudoInverse(const SparseMatrix& D);
  Matrix apply(const Matrix& V) const;
  Vector apply(const Vector& v) const;

 private:
  SparseMatrix Dt_;
  Eigen::LLT<Matrix> factor_;
};

// The operator Delta entering the penalty of `kind` (0 x n for the lasso).
// Univariate operators are used for smooth/spline, graph operators otherwise.
SparseMatrix penalty_operator(PenaltyKind kind, int k, Index n, const UndirectedGraph* graph);

double evaluate_objective(const RegressionProblem& problem, const SparseMatrix& delta,
                          const PenaltySpec& penalty, const Vector& beta);

// Binds a problem and a penalty family; caches Gram products, the operator
// and Cholesky factors so repeated calls along a tuning grid are cheap.
// The problem must outlive the fitter.
class Fitter {
 public:
  Fitter(const RegressionProblem& problem, const UndirectedGraph* graph, PenaltyKind kind, int k,
         SolverConfig config = {});
  ~Fitter();
  Fitter(Fitter&&) noexcept;
  Fitter& operator=(Fitter&&) noexcept;

  FitResult fit(double lambda, double lambda_g, const AdmmState* warm = nullptr);

  const SparseMatrix& delta() const;
  PenaltyKind kind() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot fit. `warm_start` seeds beta (z = D beta, u = 0).
FitResult fit(const RegressionProblem& problem, const UndirectedGraph& graph,
              const PenaltySpec& penalty, const SolverConfig& config = {},
              const std::optional<Vector>& warm_start = std::nullopt);

// Same, for kinds that do not need a graph (lasso, smooth, spline).
FitResult fit(const RegressionProblem& problem, const PenaltySpec& penalty,
              const SolverConfig& config = {},
              const std::optional<Vector>& warm_start = std::nullopt);

// Minimum-norm least squares solution of X beta = y.
Vector min_norm_least_squares(const Matrix& X, const Vector& y);

// Subgradient optimality check for (1/2N)||y - X b||^2 + lambda ||D b||_1.
struct KktReport {
  double stationarity = 0.0;  // ||X^T(X b - y)/N + D^T v||_inf
  double scale = 0.0;         // 1 + ||X^T y / N||_inf
  double dual_norm = 0.0;     // ||v||_inf
  double sign_violation = 0.0;  // max |v_i - lambda sign((D b)_i)| over the support

  bool passes(double lambda, double tol = 1e-5) const {
    return stationarity <= tol * scale && dual_norm <= lambda * (1.0 + tol) &&
           sign_violation <= tol * std::max(lambda, 1.0);
  }
};

KktReport kkt_certificate(const RegressionProblem& problem, const SparseMatrix& D, double lambda,
                          const Vector& beta, const Vector& dual, double support_threshold);

// D and the effective threshold for a gppl fit, as used by the solver.
struct PenaltyMatrix {
  SparseMatrix D;
  double lambda = 0.0;
};
PenaltyMatrix gppl_penalty_matrix(const SparseMatrix& delta, double lambda, double lambda_g);

// Path graph, k = 0: compares the gppl objective with an independent ADMM on
// the fused-lasso split (z1 = Delta_u beta, z2 = beta, separate thresholds).
// Throws std::invalid_argument when the graph is not a path or k != 0.
bool fused_lasso_equivalence_check(const RegressionProblem& problem, const UndirectedGraph& graph,
                                   const PenaltySpec& penalty, const SolverConfig& config = {},
                                   double rel_tol = 1e-6);

}  // namespace gppl
