#pragma once

// Reference solver for
//
//     min_b (1/2N)||y - X b||^2 + lambda2 ||R b||^2 + sum_i w_i |(D b)_i|
//
// by accelerated projected gradient on the dual (box |v_i| <= w_i), with
// adaptive restart. Needs X^T X / N + 2 lambda2 R^T R positive definite.
// Shares nothing with the library solver: dense algebra, no ADMM.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace oracle {

struct ProxGradResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  double gap = 0.0;  // primal minus dual objective, >= 0
  int iterations = 0;
};

inline ProxGradResult dual_fista(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& D,
                                 const Eigen::VectorXd& w, const Eigen::MatrixXd& R = {}, double lambda2 = 0.0,
                                 int max_iter = 2000000, double gap_tol = 1e-15) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const double N = static_cast<double>(X.rows());
  MatrixXd Q = X.transpose() * X / N;
  if (lambda2 > 0.0) Q += 2.0 * lambda2 * R.transpose() * R;
  const VectorXd c = X.transpose() * y / N;
  const double yy = y.squaredNorm() / (2.0 * N);
  const Eigen::LLT<MatrixXd> llt(Q);
  const MatrixXd Qinv = llt.solve(MatrixXd::Identity(Q.rows(), Q.cols()));

  auto primal = [&](const VectorXd& b) {
    double pen = 0.0;
    const VectorXd db = D * b;
    for (Eigen::Index i = 0; i < db.size(); ++i) pen += w[i] * std::abs(db[i]);
    return 0.5 * b.dot(Q * b) - c.dot(b) + yy + pen;
  };
  auto dual = [&](const VectorXd& v) {
    const VectorXd r = c - D.transpose() * v;
    return yy - 0.5 * r.dot(Qinv * r);
  };
  auto project = [&](VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], -w[i], w[i]);
    return v;
  };

  ProxGradResult out;
  if (D.rows() == 0) {
    out.beta = Qinv * c;
    out.objective = primal(out.beta);
    return out;
  }
  const MatrixXd H = D * Qinv * D.transpose();
  const double L = std::max(Eigen::SelfAdjointEigenSolver<MatrixXd>(H).eigenvalues().maxCoeff(), 1e-300);

  VectorXd v = VectorXd::Zero(D.rows()), z = v, v_prev = v;
  double t = 1.0;
  double best_gap = INFINITY;
  for (int it = 1; it <= max_iter; ++it) {
    // gradient of (1/2) r^T Qinv r with r = c - D^T v is -D Qinv r
    const VectorXd grad = -D * (Qinv * (c - D.transpose() * z));
    v_prev = v;
    v = project(z - grad / L);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // restart when the momentum direction points uphill
    if ((z - v).dot(v - v_prev) > 0.0) {
      t = 1.0;
      z = v;
    } else {
      z = v + ((t - 1.0) / t_next) * (v - v_prev);
      t = t_next;
    }
    if (it % 50 == 0 || it == max_iter) {
      const VectorXd b = Qinv * (c - D.transpose() * v);
      const double p = primal(b);
      const double gap = p - dual(v);
      if (gap < best_gap) {
        best_gap = gap;
        out.beta = b;
        out.objective = p;
        out.gap = gap;
      }
      out.iterations = it;
      if (gap <= gap_tol * std::max(1.0, std::abs(p))) break;
    }
  }
  return out;
}

}  // namespace oracle
