#include "gppl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace gppl {

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::kGppl: return "gppl";
    case PenaltyKind::kLasso: return "lasso";
    case PenaltyKind::kSmooth: return "smooth";
    case PenaltyKind::kSpline: return "spline";
    case PenaltyKind::kGraphSmooth: return "graph_smooth";
    case PenaltyKind::kGraphSpline: return "graph_spline";
  }
  return "unknown";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  for (auto kind : {PenaltyKind::kGppl, PenaltyKind::kLasso, PenaltyKind::kSmooth,
                    PenaltyKind::kSpline, PenaltyKind::kGraphSmooth, PenaltyKind::kGraphSpline})
    if (to_string(kind) == key) return kind;
  throw std::invalid_argument("unknown penalty kind '" + std::string(name) + "'");
}

bool needs_graph(PenaltyKind kind) {
  return kind == PenaltyKind::kGppl || kind == PenaltyKind::kGraphSmooth ||
         kind == PenaltyKind::kGraphSpline;
}

RegressionProblem::RegressionProblem(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() < 1 || X_.cols() < 1) throw std::invalid_argument("design matrix is empty");
  if (X_.rows() != y_.size())
    throw DimensionError("design has " + std::to_string(X_.rows()) + " rows but response has " +
                         std::to_string(y_.size()) + " entries");
  if (!X_.allFinite() || !y_.allFinite()) throw std::invalid_argument("non-finite input data");
}

RegressionProblem RegressionProblem::subset(const std::vector<Index>& rows) const {
  Matrix xs(static_cast<Index>(rows.size()), X_.cols());
  Vector ys(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    xs.row(static_cast<Index>(i)) = X_.row(rows[i]);
    ys[static_cast<Index>(i)] = y_[rows[i]];
  }
  return RegressionProblem(std::move(xs), std::move(ys));
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be finite and non-negative");
  if (!(lambda_g >= 0.0) || !std::isfinite(lambda_g))
    throw std::invalid_argument("lambda_g must be finite and non-negative");
  if (k < 0) throw std::invalid_argument("k must be non-negative");
}

void SolverConfig::validate() const {
  if (!(rho > 0) || !(eps_abs > 0) || !(eps_rel > 0) || max_iter < 1 || rho_update_interval < 1)
    throw std::invalid_argument("solver configuration values must be positive");
  if (support_threshold && *support_threshold < 0)
    throw std::invalid_argument("support threshold must be non-negative");
}

double soft_threshold(double a, double kappa) {
  if (a > kappa) return a - kappa;
  if (a < -kappa) return a + kappa;
  return 0.0;
}

SparseMatrix build_D(const SparseMatrix& delta, double gamma) {
  if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
  const Index m = delta.rows();
  const Index n = delta.cols();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(delta.nonZeros() + n));
  if (gamma != 0.0) {
    for (Index r = 0; r < m; ++r)
      for (SparseMatrix::InnerIterator it(delta, r); it; ++it)
        t.emplace_back(r, it.col(), gamma * it.value());
  }
  for (Index i = 0; i < n; ++i) t.emplace_back(m + i, i, 1.0);
  SparseMatrix d(m + n, n);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

PseudoInverse::PseudoInverse(const SparseMatrix& D) : Dt_(D.transpose()) {
  Matrix dtd = Matrix(Dt_ * D);
  factor_.compute(dtd);
  if (factor_.info() != Eigen::Success)
    throw std::runtime_error("internal error: D^T D is not positive definite");
}

Matrix PseudoInverse::apply(const Matrix& V) const { return factor_.solve(Matrix(Dt_ * V)); }
Vector PseudoInverse::apply(const Vector& v) const { return factor_.solve(Vector(Dt_ * v)); }

SparseMatrix penalty_operator(PenaltyKind kind, int k, Index n, const UndirectedGraph* graph) {
  auto require_graph = [&]() -> const UndirectedGraph& {
    if (!graph) throw std::invalid_argument(std::string(to_string(kind)) + " requires a graph");
    if (graph->num_nodes() != n)
      throw DimensionError("graph has " + std::to_string(graph->num_nodes()) +
                           " nodes but the design has " + std::to_string(n) + " columns");
    return *graph;
  };
  switch (kind) {
    case PenaltyKind::kGppl: return build_diff_operator(require_graph(), k).matrix;
    case PenaltyKind::kGraphSmooth: return build_diff_operator(require_graph(), 0).matrix;
    case PenaltyKind::kGraphSpline: return build_diff_operator(require_graph(), 1).matrix;
    case PenaltyKind::kSmooth: return univariate_difference(n, 1);
    case PenaltyKind::kSpline: return univariate_difference(n, 2);
    case PenaltyKind::kLasso: return SparseMatrix(0, n);
  }
  return SparseMatrix(0, n);
}

double evaluate_objective(const RegressionProblem& problem, const SparseMatrix& delta,
                          const PenaltySpec& penalty, const Vector& beta) {
  const double n_samples = static_cast<double>(problem.samples());
  double value = 0.5 / n_samples * (problem.y() - problem.X() * beta).squaredNorm();
  value += penalty.lambda * beta.lpNorm<1>();
  if (penalty.kind == PenaltyKind::kLasso || delta.rows() == 0) return value;
  const Vector d = delta * beta;
  if (penalty.kind == PenaltyKind::kGppl)
    value += penalty.lambda_g * d.lpNorm<1>();
  else
    value += penalty.lambda_g * d.squaredNorm();
  return value;
}

Vector min_norm_least_squares(const Matrix& X, const Vector& y) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  return cod.solve(y);
}

namespace {

SparseMatrix identity(Index n) {
  SparseMatrix eye(n, n);
  eye.setIdentity();
  return eye;
}

SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(top.nonZeros() + bottom.nonZeros()));
  for (Index r = 0; r < top.rows(); ++r)
    for (SparseMatrix::InnerIterator it(top, r); it; ++it) t.emplace_back(r, it.col(), it.value());
  for (Index r = 0; r < bottom.rows(); ++r)
    for (SparseMatrix::InnerIterator it(bottom, r); it; ++it)
      t.emplace_back(top.rows() + r, it.col(), it.value());
  SparseMatrix out(top.rows() + bottom.rows(), top.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

struct AdmmOutcome {
  AdmmState state;
  int iterations = 0;
  double primal = 0.0;
  double dual = 0.0;
  bool converged = false;
};

// Scaled ADMM for  1/2 b'Qb - c'b + sum_i w_i |(D b)_i|.
class AdmmEngine {
 public:
  AdmmEngine(Matrix Q, Vector linear, SparseMatrix D)
      : Q_(std::move(Q)), linear_(std::move(linear)), D_(std::move(D)), Dt_(D_.transpose()),
        DtD_(Matrix(Dt_ * D_)) {}

  const SparseMatrix& D() const { return D_; }

  AdmmOutcome solve(const Vector& weights, const AdmmState* warm, const SolverConfig& cfg) {
    const Index n = Q_.cols();
    const Index m = D_.rows();
    AdmmState s;
    s.rho = (warm && warm->rho > 0) ? warm->rho : cfg.rho;
    s.beta = (warm && warm->beta.size() == n) ? warm->beta : Vector::Zero(n);
    s.z = (warm && warm->z.size() == m) ? warm->z : Vector(D_ * s.beta);
    s.u = (warm && warm->u.size() == m) ? warm->u : Vector::Zero(m);

    const double sqrt_m = std::sqrt(static_cast<double>(m));
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    AdmmOutcome out;
    AdmmOutcome best;
    double best_score = std::numeric_limits<double>::infinity();
    Vector dbeta(m), z_old(m), rhs(n), dz(m);
    const Eigen::LLT<Matrix>* chol = &factor(s.rho);
    for (int it = 1; it <= cfg.max_iter; ++it) {
      rhs.noalias() = linear_ + s.rho * (Dt_ * (s.z - s.u));
      s.beta = chol->solve(rhs);
      dbeta.noalias() = D_ * s.beta;
      z_old = s.z;
      for (Index i = 0; i < m; ++i) s.z[i] = soft_threshold(dbeta[i] + s.u[i], weights[i] / s.rho);
      s.u += dbeta - s.z;

      dz = s.z - z_old;
      const double r = (dbeta - s.z).norm();
      const double d = s.rho * (Dt_ * dz).norm();
      const double eps_pri = sqrt_m * cfg.eps_abs + cfg.eps_rel * std::max(dbeta.norm(), s.z.norm());
      const double eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * s.rho * (Dt_ * s.u).norm();
      out.iterations = it;
      out.primal = r;
      out.dual = d;
      if (r <= eps_pri && d <= eps_dual) {
        out.converged = true;
        break;
      }
      const double score = std::max(r / eps_pri, d / eps_dual);
      if (score < best_score) {
        best_score = score;
        best.state = s;
        best.iterations = it;
        best.primal = r;
        best.dual = d;
      }
      if (cfg.adaptive_rho && it % cfg.rho_update_interval == 0) {
        double scale = 1.0;
        if (r > 10.0 * d && s.rho * 2.0 <= cfg.rho_max) scale = 2.0;
        else if (d > 10.0 * r && s.rho / 2.0 >= cfg.rho_min) scale = 0.5;
        if (scale != 1.0) {
          s.rho *= scale;
          s.u /= scale;
          chol = &factor(s.rho);
        }
      }
    }
    if (!out.converged && best_score < std::numeric_limits<double>::infinity()) {
      // Report the iterate closest to the stopping rule, with the total iteration count.
      best.iterations = out.iterations;
      return best;
    }
    out.state = std::move(s);
    return out;
  }

 private:
  const Eigen::LLT<Matrix>& factor(double rho) {
    auto it = cache_.find(rho);
    if (it != cache_.end()) return it->second;
    Matrix system = Q_ + rho * DtD_;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
      // Singular when D alone does not pin down null(X); a vanishing
      // proximal term keeps the beta-update well posed.
      const double shift = 1e-10 * (1.0 + system.diagonal().cwiseAbs().maxCoeff());
      system.diagonal().array() += shift;
      llt.compute(system);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("internal error: ADMM system matrix is not positive definite");
    }
    if (cache_.size() > 16) cache_.clear();
    return cache_.emplace(rho, std::move(llt)).first->second;
  }

  Matrix Q_;
  Vector linear_;
  SparseMatrix D_;
  SparseMatrix Dt_;
  Matrix DtD_;
  std::map<double, Eigen::LLT<Matrix>> cache_;
};

double default_threshold(const Vector& beta) {
  return 1e-6 * std::max(1.0, beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0);
}

}  // namespace

PenaltyMatrix gppl_penalty_matrix(const SparseMatrix& delta, double lambda, double lambda_g) {
  if (lambda > 0.0) {
    if (lambda_g == 0.0) return {identity(delta.cols()), lambda};
    return {build_D(delta, lambda_g / lambda), lambda};
  }
  return {delta, lambda_g};
}

struct Fitter::Impl {
  const RegressionProblem& problem;
  PenaltyKind kind;
  int k;
  SolverConfig config;
  Matrix gram;
  Vector xty;
  SparseMatrix delta;

  // Engine for the current structural key: gamma for gppl, lambda_2 for ridge kinds.
  std::unique_ptr<AdmmEngine> engine;
  double engine_key = std::numeric_limits<double>::quiet_NaN();
  int engine_mode = -1;

  Impl(const RegressionProblem& p, const UndirectedGraph* graph, PenaltyKind kd, int order,
       SolverConfig cfg)
      : problem(p), kind(kd), k(order), config(cfg) {
    config.validate();
    if (k < 0) throw std::invalid_argument("k must be non-negative");
    const double n_samples = static_cast<double>(p.samples());
    gram.noalias() = p.X().transpose() * p.X();
    gram /= n_samples;
    xty.noalias() = p.X().transpose() * p.y();
    xty /= n_samples;
    const UndirectedGraph* g = needs_graph(kind) ? graph : nullptr;
    if (needs_graph(kind) && !graph)
      throw std::invalid_argument(std::string(to_string(kind)) + " requires a graph");
    if (graph && graph->num_nodes() != p.features())
      throw DimensionError("graph has " + std::to_string(graph->num_nodes()) +
                           " nodes but the design has " + std::to_string(p.features()) + " columns");
    // Supports of lasso fits are still reported against the graph operator when one is given.
    if (kind == PenaltyKind::kLasso && graph)
      delta = build_diff_operator(*graph, k).matrix;
    else
      delta = penalty_operator(kind, k, p.features(), g);
  }

  AdmmEngine& engine_for(int mode, double key, const std::function<AdmmEngine()>& make) {
    if (!engine || engine_mode != mode || engine_key != key) {
      engine = std::make_unique<AdmmEngine>(make());
      engine_mode = mode;
      engine_key = key;
    }
    return *engine;
  }

  // `floor` is the primal residual of an ADMM fit: entries of D beta below it
  // cannot be told apart from the exact zeros of the split variable.
  FitResult finish(Vector beta, const PenaltySpec& pen, double floor = 0.0) const {
    FitResult res;
    res.beta_hat = std::move(beta);
    res.objective = evaluate_objective(problem, delta, pen, res.beta_hat);
    res.support_threshold =
        config.support_threshold.value_or(std::max(default_threshold(res.beta_hat), floor));
    if (delta.rows() > 0) res.support_s1 = support(delta * res.beta_hat, res.support_threshold);
    res.support_s2 = support(res.beta_hat, res.support_threshold);
    return res;
  }

  FitResult from_admm(AdmmOutcome&& o, const PenaltySpec& pen) const {
    FitResult res = finish(o.state.beta, pen, o.primal);
    res.iterations = o.iterations;
    res.primal_residual = o.primal;
    res.dual_residual = o.dual;
    res.converged = o.converged;
    res.dual = o.state.rho * o.state.u;
    res.state = std::move(o.state);
    return res;
  }

  FitResult direct(Vector beta, const PenaltySpec& pen) const {
    FitResult res = finish(std::move(beta), pen);
    res.converged = true;
    res.state.beta = res.beta_hat;
    return res;
  }

  FitResult fit(double lambda, double lambda_g, const AdmmState* warm) {
    PenaltySpec pen{kind, lambda, lambda_g, k};
    pen.validate();
    const Index n = problem.features();

    if (kind == PenaltyKind::kGppl || kind == PenaltyKind::kLasso) {
      const double lg = kind == PenaltyKind::kLasso ? 0.0 : lambda_g;
      if (lambda == 0.0 && lg == 0.0) return direct(min_norm_least_squares(problem.X(), problem.y()), pen);
      // mode 0: D = I; mode 1: [gamma Delta; I]; mode 2: Delta alone.
      int mode;
      double key;
      if (lambda > 0.0 && lg == 0.0) {
        mode = 0;
        key = 0.0;
      } else if (lambda > 0.0) {
        mode = 1;
        key = lg / lambda;
      } else {
        mode = 2;
        key = 0.0;
      }
      AdmmEngine& eng = engine_for(mode, key, [&] {
        SparseMatrix D = mode == 0 ? identity(n) : mode == 1 ? build_D(delta, key) : delta;
        return AdmmEngine(gram, xty, std::move(D));
      });
      const double w = mode == 2 ? lg : lambda;
      const Vector weights = Vector::Constant(eng.D().rows(), w);
      return from_admm(eng.solve(weights, warm, config), pen);
    }

    // Ridge-type kinds: fold lambda_2 ||Delta b||^2 into the quadratic.
    auto make_q = [&] {
      Matrix q = gram;
      if (lambda_g > 0.0) q += 2.0 * lambda_g * Matrix(SparseMatrix(delta.transpose()) * delta);
      return q;
    };
    if (lambda == 0.0) {
      const Matrix q = make_q();
      Eigen::LLT<Matrix> llt(q);
      if (llt.info() == Eigen::Success) return direct(llt.solve(xty), pen);
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(q);
      return direct(cod.solve(xty), pen);
    }
    AdmmEngine& eng = engine_for(3, lambda_g, [&] { return AdmmEngine(make_q(), xty, identity(n)); });
    return from_admm(eng.solve(Vector::Constant(n, lambda), warm, config), pen);
  }
};

Fitter::Fitter(const RegressionProblem& problem, const UndirectedGraph* graph, PenaltyKind kind,
               int k, SolverConfig config)
    : impl_(std::make_unique<Impl>(problem, graph, kind, k, config)) {}
Fitter::~Fitter() = default;
Fitter::Fitter(Fitter&&) noexcept = default;
Fitter& Fitter::operator=(Fitter&&) noexcept = default;

FitResult Fitter::fit(double lambda, double lambda_g, const AdmmState* warm) {
  return impl_->fit(lambda, lambda_g, warm);
}
const SparseMatrix& Fitter::delta() const { return impl_->delta; }
PenaltyKind Fitter::kind() const { return impl_->kind; }

namespace {

FitResult fit_impl(const RegressionProblem& problem, const UndirectedGraph* graph,
                   const PenaltySpec& penalty, const SolverConfig& config,
                   const std::optional<Vector>& warm_start) {
  penalty.validate();
  Fitter fitter(problem, graph, penalty.kind, penalty.k, config);
  if (!warm_start) return fitter.fit(penalty.lambda, penalty.lambda_g);
  if (warm_start->size() != problem.features())
    throw DimensionError("warm start has length " + std::to_string(warm_start->size()));
  AdmmState warm;
  warm.beta = *warm_start;
  return fitter.fit(penalty.lambda, penalty.lambda_g, &warm);
}

}  // namespace

FitResult fit(const RegressionProblem& problem, const UndirectedGraph& graph,
              const PenaltySpec& penalty, const SolverConfig& config,
              const std::optional<Vector>& warm_start) {
  return fit_impl(problem, &graph, penalty, config, warm_start);
}

FitResult fit(const RegressionProblem& problem, const PenaltySpec& penalty,
              const SolverConfig& config, const std::optional<Vector>& warm_start) {
  return fit_impl(problem, nullptr, penalty, config, warm_start);
}

KktReport kkt_certificate(const RegressionProblem& problem, const SparseMatrix& D, double lambda,
                          const Vector& beta, const Vector& dual, double support_threshold) {
  if (D.cols() != beta.size() || D.rows() != dual.size())
    throw DimensionError("certificate dimensions disagree");
  const double n_samples = static_cast<double>(problem.samples());
  const Vector xty = problem.X().transpose() * problem.y() / n_samples;
  const Vector grad = problem.X().transpose() * (problem.X() * beta - problem.y()) / n_samples;
  KktReport rep;
  rep.stationarity = (grad + SparseMatrix(D.transpose()) * dual).lpNorm<Eigen::Infinity>();
  rep.scale = 1.0 + xty.lpNorm<Eigen::Infinity>();
  rep.dual_norm = dual.size() ? dual.lpNorm<Eigen::Infinity>() : 0.0;
  const Vector db = D * beta;
  for (Index i = 0; i < db.size(); ++i) {
    if (std::abs(db[i]) > support_threshold) {
      const double target = db[i] > 0 ? lambda : -lambda;
      rep.sign_violation = std::max(rep.sign_violation, std::abs(dual[i] - target));
    }
  }
  return rep;
}

bool fused_lasso_equivalence_check(const RegressionProblem& problem, const UndirectedGraph& graph,
                                   const PenaltySpec& penalty, const SolverConfig& config,
                                   double rel_tol) {
  if (!graph.is_path()) throw std::invalid_argument("fused lasso check needs a path graph");
  if (penalty.k != 0) throw std::invalid_argument("fused lasso check needs k = 0");
  penalty.validate();
  PenaltySpec gp = penalty;
  gp.kind = PenaltyKind::kGppl;
  const FitResult ours = fit(problem, graph, gp, config);

  // Direct formulation: lambda_1 ||b||_1 + lambda_2 ||Delta_u b||_1 with
  // separate thresholds per block (no rescaling of the difference rows).
  const Index n = problem.features();
  const double n_samples = static_cast<double>(problem.samples());
  const SparseMatrix du = univariate_difference(n, 1);
  Vector result;
  if (penalty.lambda_g == 0.0) {
    PenaltySpec lasso{PenaltyKind::kLasso, penalty.lambda, 0.0, 0};
    result = fit(problem, lasso, config).beta_hat;
  } else {
    Matrix q = problem.X().transpose() * problem.X() / n_samples;
    Vector c = problem.X().transpose() * problem.y() / n_samples;
    AdmmEngine eng(std::move(q), std::move(c), vstack(du, identity(n)));
    Vector w(du.rows() + n);
    w.head(du.rows()).setConstant(penalty.lambda_g);
    w.tail(n).setConstant(penalty.lambda);
    result = eng.solve(w, nullptr, config).state.beta;
  }
  const double direct = 0.5 / n_samples * (problem.y() - problem.X() * result).squaredNorm() +
                        penalty.lambda * result.lpNorm<1>() +
                        penalty.lambda_g * (du * result).lpNorm<1>();
  return std::abs(ours.objective - direct) <= rel_tol * std::max(1.0, std::abs(direct));
}

}  // namespace gppl
