#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace taut {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// A_F^T A_F could not be factored.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SnnlsOptions {
  double kkt_tol = 1e-10;  ///< relative to max |A^T b|
  int block_retries = 3;   ///< full exchanges allowed without progress
  int greedy_flips = 50;   ///< worst-first single flips before Murty's rule
  bool active_set_fallback = true;  ///< Lawson-Hanson when pivoting does not converge
  std::size_t max_iters = 0;  ///< 0 picks 20 * cols + 100
  double cond_warn = 1e8;
  /// Optional initial free set (same length as cols).
  const std::vector<char>* warm_start = nullptr;
};

struct SnnlsResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd residual;  ///< b - A lambda
  std::vector<char> free_set;
  std::size_t iterations = 0;
  std::size_t block_exchanges = 0;
  std::size_t single_exchanges = 0;
  bool used_active_set = false;
  double condition_estimate = 1.0;
  bool condition_warning = false;
  /// max over columns of (A^T r)_i / max|A^T b|, clipped below at 0.
  double kkt_violation = 0.0;
  bool converged = false;
};

/// min ||A x - b|| over x >= 0 by block principal pivoting on the normal
/// equations. A warm start that stalls is retried cold, then Lawson-Hanson
/// takes over if pivoting still has not converged. Throws SingularMatrixError when a free submatrix is rank
/// deficient and std::invalid_argument on non-finite input.
SnnlsResult snnls_solve(const SparseMatrix& a, const Eigen::VectorXd& b, const SnnlsOptions& opts = {});

struct MinNormResult {
  Eigen::VectorXd w;
  std::size_t iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;  ///< ||M w - c||
};

/// Minimum-norm least-squares solution of M w = c by LSQR started from 0.
/// `max_iters` 0 means 4 * (rows + cols).
MinNormResult minnorm_solve(const SparseMatrix& m, const Eigen::VectorXd& c, double tol = 1e-8,
                            std::size_t max_iters = 0);

}  // namespace taut
