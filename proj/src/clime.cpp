#include "gppl/clime.hpp"

#include "gppl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gppl {

void ClimeConfig::validate() const {
  if (!(rho > 0) || !(eps_abs > 0) || !(eps_rel > 0) || max_iter < 1 || rho_update_interval < 1 ||
      !(feasibility_slack > 0))
    throw std::invalid_argument("CLIME configuration values must be positive");
  if (ipm_max_iter < 1 || !(ipm_tol > 0)) throw std::invalid_argument("invalid interior-point settings");
  if (!(perturbation >= 0) || !std::isfinite(perturbation))
    throw std::invalid_argument("CLIME perturbation must be finite and non-negative");
}

std::optional<Index> PrecisionSurrogate::position(Index j) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), j);
  if (it == rows.end() || *it != j) return std::nullopt;
  return static_cast<Index>(it - rows.begin());
}

const Matrix& PrecisionSurrogate::full() const {
  if (!is_full()) throw std::logic_error("precision surrogate holds only a subset of rows");
  return theta_hat;
}

std::string_view to_string(ClimeMethod method) {
  switch (method) {
    case ClimeMethod::kAdmm: return "admm";
    case ClimeMethod::kInteriorPoint: return "interior_point";
    case ClimeMethod::kAuto: return "auto";
  }
  return "unknown";
}

ClimeMethod parse_clime_method(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  for (auto m : {ClimeMethod::kAdmm, ClimeMethod::kInteriorPoint, ClimeMethod::kAuto})
    if (to_string(m) == key) return m;
  throw std::invalid_argument("unknown CLIME method '" + std::string(name) + "'");
}

double clime_default_mu(double c, Index n, Index samples) {
  if (!(c > 0) || n < 1 || samples < 1) throw std::invalid_argument("invalid CLIME tuning inputs");
  return c * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(samples));
}

double clime_default_perturbation(const Matrix& sigma, Index samples) {
  const Index n = sigma.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()[0];
  const double lmax = es.eigenvalues()[n - 1];
  const double cond = n > 1 ? std::max(lmax - static_cast<double>(n) * lmin, 0.0) / (n - 1) : 0.0;
  return std::max(cond, 1.0 / std::sqrt(static_cast<double>(samples)));
}

double spectral_norm_estimate(const Matrix& A, int steps, double tol) {
  Vector v = Vector::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
  double est = 0.0;
  for (int s = 0; s < steps; ++s) {
    Vector w = A.transpose() * (A * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = std::sqrt(norm);
    if (std::abs(next - est) <= tol * next) return next;
    est = next;
  }
  return est;
}

namespace {

// Mehrotra predictor-corrector for the row LP in inequality form
//
//     min sum(t)  s.t.  theta - t <= 0, -theta - t <= 0,
//                       A theta <= e + mu, -A theta <= mu - e,
//
// with x = (theta, t), G x + s = h, s >= 0. The Newton system G^T W G is
// reduced to an n x n system in theta by eliminating t.
struct LpOutcome {
  Vector theta;
  int iterations = 0;
  bool converged = false;
};

// Ill-conditioning of the reduced system eventually stalls the dual residual;
// the best iterate is kept and accepted once all residuals are below `accept`.
LpOutcome clime_row_interior_point(const Matrix& A, Index i, double mu, int max_iter, double tol,
                                   double accept = 1e-7) {
  const Index n = A.rows();
  const Index m = 4 * n;
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  Vector h(m);
  h << Vector::Zero(2 * n), e.array() + mu, mu - e.array();

  auto G_mul = [&](const Vector& th, const Vector& t) {
    Vector out(m);
    const Vector at = A * th;
    out << th - t, -th - t, at, -at;
    return out;
  };
  // Returns (G^T v)_theta and (G^T v)_t.
  auto Gt_mul = [&](const Vector& v, Vector& gth, Vector& gt) {
    const auto v1 = v.segment(0, n), v2 = v.segment(n, n), v3 = v.segment(2 * n, n), v4 = v.segment(3 * n, n);
    gth = v1 - v2 + A.transpose() * (v3 - v4);
    gt = -v1 - v2;
  };

  Vector th = Vector::Zero(n);
  Vector t = Vector::Ones(n);
  Vector s = (h - G_mul(th, t)).cwiseMax(1.0);
  Vector z = Vector::Ones(m);
  const double h_scale = 1.0 + h.lpNorm<Eigen::Infinity>();

  LpOutcome out;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  Matrix K(n, n);
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    const Vector rp = G_mul(th, t) + s - h;
    Vector rd_th, rd_t;
    Gt_mul(z, rd_th, rd_t);
    rd_t.array() += 1.0;  // c = (0, 1)
    const double gap = s.dot(z);
    const double merit = std::max({rp.lpNorm<Eigen::Infinity>() / h_scale,
                                   std::max(rd_th.lpNorm<Eigen::Infinity>(), rd_t.lpNorm<Eigen::Infinity>()) / 2.0,
                                   gap / (1.0 + std::abs(t.sum()))});
    if (merit < best_merit) {
      best_merit = merit;
      out.theta = th;
      since_best = 0;
    } else if (best_merit <= 1e3 * accept && ++since_best >= 5) {
      break;
    }
    if (merit <= tol) break;
    const Vector w = z.cwiseQuotient(s);
    const auto w1 = w.segment(0, n).array(), w2 = w.segment(n, n).array();
    const Vector d = w.segment(2 * n, n) + w.segment(3 * n, n);
    const Vector w12 = (w1 + w2).matrix();
    const Vector cross = (w2 - w1).matrix();
    K.noalias() = A.transpose() * d.asDiagonal() * A;
    K.diagonal() += (4.0 * w1 * w2 / (w1 + w2)).matrix();
    Eigen::LDLT<Matrix> ldlt(K);
    if (ldlt.info() != Eigen::Success || !K.allFinite()) break;

    // Solves for (dx, ds, dz) given the complementarity right-hand side rc.
    auto newton = [&](const Vector& rc, Vector& dth, Vector& dt, Vector& ds, Vector& dz) {
      const Vector v = w.cwiseProduct(rp) - rc.cwiseQuotient(s);
      Vector b_th, b_t;
      Gt_mul(v, b_th, b_t);
      b_th = -rd_th - b_th;
      b_t = -rd_t - b_t;
      dth = ldlt.solve(b_th - cross.cwiseProduct(b_t.cwiseQuotient(w12)));
      dt = (b_t - cross.cwiseProduct(dth)).cwiseQuotient(w12);
      dz = w.cwiseProduct(G_mul(dth, dt) + rp) - rc.cwiseQuotient(s);
      ds = -(rc + s.cwiseProduct(dz)).cwiseQuotient(z);
    };
    auto max_step = [&](const Vector& ds, const Vector& dz) {
      double a = 1.0;
      for (Index k = 0; k < m; ++k) {
        if (ds[k] < 0) a = std::min(a, -s[k] / ds[k]);
        if (dz[k] < 0) a = std::min(a, -z[k] / dz[k]);
      }
      return a;
    };

    Vector dth, dt, ds, dz;
    newton(s.cwiseProduct(z), dth, dt, ds, dz);
    const double a_aff = max_step(ds, dz);
    const double mu_now = gap / static_cast<double>(m);
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu_now, 3);
    const Vector rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vector::Constant(m, sigma * mu_now);
    newton(rc, dth, dt, ds, dz);
    const double a = std::min(1.0, 0.99 * max_step(ds, dz));
    th += a * dth;
    t += a * dt;
    s += a * ds;
    z += a * dz;
  }
  out.converged = best_merit <= accept;
  return out;
}

}  // namespace

ClimeSolver::ClimeSolver(Matrix sigma, ClimeConfig config)
    : sigma_(std::move(sigma)), config_(config) {
  config_.validate();
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() < 1)
    throw DimensionError("Gram matrix must be square and non-empty");
  if (!sigma_.allFinite()) throw std::invalid_argument("Gram matrix has non-finite entries");
  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("Gram matrix is not symmetric");
  sigma_.diagonal().array() += config_.perturbation;
  sigma_max_ = spectral_norm_estimate(sigma_);
}

ClimeRowResult ClimeSolver::solve_row(Index i, double mu) const {
  const Index n = sigma_.rows();
  if (i < 0 || i >= n) throw std::out_of_range("CLIME row index out of range");
  if (!(mu > 0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be positive");

  ClimeRowResult res;
  if (mu >= 1.0) {
    // theta = 0 is feasible and has the smallest possible norm.
    res.theta = Vector::Zero(n);
    res.converged = true;
    res.feasibility = 1.0;
    res.method = ClimeMethod::kAdmm;
    return res;
  }
  if (config_.method == ClimeMethod::kAdmm) res = admm_row(i, mu, config_.max_iter);
  if (config_.method == ClimeMethod::kAuto)
    res = admm_row(i, mu, std::min(config_.max_iter, config_.auto_admm_iter));
  if (config_.method == ClimeMethod::kInteriorPoint ||
      (config_.method == ClimeMethod::kAuto && !res.converged)) {
    const int admm_iterations = res.iterations;
    const LpOutcome lp = clime_row_interior_point(sigma_, i, mu, config_.ipm_max_iter, config_.ipm_tol);
    Vector e = Vector::Zero(n);
    e[i] = 1.0;
    res.theta = lp.theta;
    res.iterations = admm_iterations + lp.iterations;
    res.feasibility = (sigma_ * res.theta - e).lpNorm<Eigen::Infinity>();
    res.converged = lp.converged && res.feasibility <= mu + config_.feasibility_slack;
    res.method = ClimeMethod::kInteriorPoint;
  }
  if (!res.converged && config_.strict)
    throw ConvergenceError("CLIME row " + std::to_string(i) + " did not converge", i);
  return res;
}

ClimeRowResult ClimeSolver::admm_row(Index i, double mu, int max_iter) const {
  const Index n = sigma_.rows();
  ClimeRowResult res;
  res.method = ClimeMethod::kAdmm;
  res.theta = Vector::Zero(n);
  if (sigma_max_ == 0.0) return res;

  const Matrix& A = sigma_;
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  double rho = config_.rho;
  double tau = 0.95 / (rho * sigma_max_ * sigma_max_);
  Vector theta = Vector::Zero(n);
  Vector a_theta = Vector::Zero(n);
  Vector w = (a_theta - e).cwiseMax(-mu).cwiseMin(mu);
  Vector u = Vector::Zero(n);
  Vector grad(n), theta_new(n), w_new(n), r(n), s(n), dtheta(n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  for (int it = 1; it <= max_iter; ++it) {
    grad.noalias() = A.transpose() * (a_theta - e - w + u);
    theta_new = theta - tau * rho * grad;
    for (Index j = 0; j < n; ++j) {
      const double t = theta_new[j];
      theta_new[j] = t > tau ? t - tau : (t < -tau ? t + tau : 0.0);
    }
    dtheta = theta - theta_new;
    Vector a_new = A * theta_new;
    w_new = (a_new - e + u).cwiseMax(-mu).cwiseMin(mu);
    r = a_new - e - w_new;
    u += r;
    // Dual residual of the linearized scheme; A dtheta = a_theta - a_new.
    s = dtheta / tau + rho * (A.transpose() * ((w - w_new) - (a_theta - a_new)));

    theta.swap(theta_new);
    a_theta.swap(a_new);
    w.swap(w_new);

    const double rn = r.norm();
    const double sn = s.norm();
    const double eps_pri =
        sqrt_n * config_.eps_abs + config_.eps_rel * std::max({a_theta.norm(), w.norm(), 1.0});
    res.iterations = it;
    if (rn <= eps_pri) {
      const double eps_dual =
          sqrt_n * config_.eps_abs + config_.eps_rel * rho * (A.transpose() * u).norm();
      const double viol = ((a_theta - e).cwiseAbs().array() - mu).maxCoeff();
      if (sn <= eps_dual && viol <= config_.feasibility_slack) {
        res.converged = true;
        break;
      }
    }
    if (config_.adaptive_rho && it % config_.rho_update_interval == 0) {
      double scale = 1.0;
      if (rn > 10.0 * sn && rho < 1e4) scale = 2.0;
      else if (sn > 10.0 * rn && rho > 1e-4) scale = 0.5;
      if (scale != 1.0) {
        rho *= scale;
        u /= scale;
        tau = 0.95 / (rho * sigma_max_ * sigma_max_);
      }
    }
  }
  res.theta = std::move(theta);
  res.feasibility = (A * res.theta - e).lpNorm<Eigen::Infinity>();
  return res;
}

ClimeRowResult clime_row(const Matrix& sigma, Index i, double mu, const ClimeConfig& config) {
  return ClimeSolver(sigma, config).solve_row(i, mu);
}

PrecisionSurrogate clime_fit(const Matrix& sigma, double mu, const ClimeConfig& config,
                             std::vector<Index> rows) {
  const ClimeSolver solver(sigma, config);
  const Index n = solver.dimension();
  if (rows.empty()) {
    rows.resize(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  for (Index r : rows)
    if (r < 0 || r >= n) throw std::out_of_range("CLIME row index out of range");

  std::vector<ClimeRowResult> results(rows.size());
  parallel_for(rows.size(), [&](std::size_t r) { results[r] = solver.solve_row(rows[r], mu); });

  PrecisionSurrogate out;
  out.rows = rows;
  out.mu = mu;
  out.perturbation = config.perturbation;
  out.theta_hat.resize(static_cast<Index>(rows.size()), n);
  out.l1_norms.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index ri = static_cast<Index>(r);
    out.theta_hat.row(ri) = results[r].theta.transpose();
    out.l1_norms[ri] = results[r].theta.lpNorm<1>();
    out.iterations.push_back(results[r].iterations);
    out.methods.push_back(results[r].method);
    if (!results[r].converged) out.failed_rows.push_back(rows[r]);
  }
  Matrix resid = out.theta_hat * solver.constraint_matrix();
  Matrix raw = out.theta_hat * sigma;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    resid(static_cast<Index>(r), rows[r]) -= 1.0;
    raw(static_cast<Index>(r), rows[r]) -= 1.0;
  }
  out.feasibility = resid.size() ? resid.cwiseAbs().maxCoeff() : 0.0;
  out.raw_feasibility = raw.size() ? raw.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

}  // namespace gppl
