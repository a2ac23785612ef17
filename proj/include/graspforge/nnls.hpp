#pragma once

// Nonnegative least squares by the Lawson-Hanson active-set method:
//   minimize ||A x - b||^2  subject to  x >= 0.

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <vector>

namespace graspforge {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = true;
};

template <typename MatrixA, typename VectorB>
NnlsResult nnls(const Eigen::MatrixBase<MatrixA>& a, const Eigen::MatrixBase<VectorB>& b,
                int max_iterations = -1) {
  using Eigen::Index;
  const Index n = a.cols();
  NnlsResult out;
  out.x = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    out.residual_norm = b.norm();
    return out;
  }
  if (max_iterations < 0) max_iterations = static_cast<int>(3 * n + 30);

  // Dual-feasibility tolerance relative to the problem scale.
  const double scale = std::max(1.0, (a.transpose() * b).cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;

  std::vector<char> passive(n, 0);
  std::vector<char> blocked(n, 0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd residual = b;
  Eigen::VectorXd w = a.transpose() * residual;
  std::vector<Index> cols;
  Eigen::MatrixXd sub;

  auto solve_passive = [&](Eigen::VectorXd& z) {
    cols.clear();
    for (Index j = 0; j < n; ++j) {
      if (passive[j]) cols.push_back(j);
    }
    sub.resize(a.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = a.col(cols[k]);
    const Eigen::VectorXd zp = sub.colPivHouseholderQr().solve(b);
    z = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zp[static_cast<Index>(k)];
  };

  int iter = 0;
  while (true) {
    Index enter = -1;
    double best = tol;
    for (Index j = 0; j < n; ++j) {
      if (!passive[j] && !blocked[j] && w[j] > best) best = w[j], enter = j;
    }
    if (enter < 0) break;
    if (++iter > max_iterations) {
      out.converged = false;
      break;
    }
    passive[enter] = 1;
    Eigen::VectorXd z;
    solve_passive(z);
    if (z[enter] <= 0.0) {
      // Column is (numerically) dependent on the passive set and cannot
      // help; exclude it until the passive set changes.
      passive[enter] = 0;
      blocked[enter] = 1;
      continue;
    }
    // Inner loop: restore feasibility of the passive solution.
    while (true) {
      bool feasible = true;
      for (Index j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) feasible = false;
      }
      if (feasible) break;
      double alpha = 1.0;
      for (Index j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
      }
      x += alpha * (z - x);
      for (Index j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[j] = 0;
          x[j] = 0.0;
        }
      }
      solve_passive(z);
    }
    x = z;
    std::fill(blocked.begin(), blocked.end(), 0);
    residual = b - a * x;
    w = a.transpose() * residual;
  }
  for (Index j = 0; j < n; ++j) {
    if (x[j] < 0.0) x[j] = 0.0;
  }
  out.x = x;
  out.residual_norm = (b - a * x).norm();
  out.iterations = iter;
  return out;
}

}  // namespace graspforge
