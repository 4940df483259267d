#include "taut/snnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace taut {

namespace {

SparseMatrix select_columns(const SparseMatrix& a, const std::vector<Eigen::Index>& cols) {
  SparseMatrix out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXi nnz(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    nnz[static_cast<Eigen::Index>(k)] = static_cast<int>(a.col(cols[k]).nonZeros());
  }
  out.reserve(nnz);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    for (SparseMatrix::InnerIterator it(a, cols[k]); it; ++it) {
      out.insert(it.row(), static_cast<Eigen::Index>(k)) = it.value();
    }
  }
  out.makeCompressed();
  return out;
}

struct FreeSolve {
  Eigen::VectorXd x;
  double condition = 1.0;
};

// Least squares on the free columns through the normal equations, with two
// rounds of iterative refinement to recover accuracy lost to squaring.
FreeSolve solve_free(const SparseMatrix& af, const Eigen::VectorXd& b) {
  FreeSolve out;
  if (af.cols() == 0) {
    out.x.resize(0);
    return out;
  }
  const SparseMatrix q = SparseMatrix(af.transpose() * af);
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  ldlt.compute(q);
  if (ldlt.info() != Eigen::Success) throw SingularMatrixError("singular rigidity submatrix");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.minCoeff();
  if (!(dmin > 1e-14 * dmax)) throw SingularMatrixError("singular rigidity submatrix");
  out.condition = dmax / dmin;
  out.x = ldlt.solve(af.transpose() * b);
  for (int round = 0; round < 2; ++round) {
    const Eigen::VectorXd r = b - af * out.x;
    out.x += ldlt.solve(af.transpose() * r);
  }
  return out;
}

// Block principal pivoting from res.free_set. Leaves the last iterate in x.
void pivot(const SparseMatrix& a, const Eigen::VectorXd& b, const SnnlsOptions& opts, double y_tol,
           std::size_t max_iters, SnnlsResult& res, Eigen::VectorXd& x) {
  const Eigen::Index n = a.cols();
  x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  std::size_t best_infeasible = std::numeric_limits<std::size_t>::max();
  int retries = opts.block_retries;
  std::vector<Eigen::Index> free_idx;
  std::vector<Eigen::Index> infeasible;

  for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
    free_idx.clear();
    for (Eigen::Index i = 0; i < n; ++i)
      if (res.free_set[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    const SparseMatrix af = select_columns(a, free_idx);
    const FreeSolve fs = solve_free(af, b);
    res.condition_estimate = fs.condition;
    x.setZero();
    for (std::size_t k = 0; k < free_idx.size(); ++k) x[free_idx[k]] = fs.x[static_cast<Eigen::Index>(k)];
    const Eigen::VectorXd r = b - af * fs.x;
    y = -(a.transpose() * r);

    const double x_tol = opts.kkt_tol * std::max(fs.x.size() ? fs.x.cwiseAbs().maxCoeff() : 0.0,
                                                 std::numeric_limits<double>::min());
    infeasible.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool is_free = res.free_set[static_cast<std::size_t>(i)];
      if ((is_free && x[i] < -x_tol) || (!is_free && y[i] < -y_tol)) infeasible.push_back(i);
    }
    if (infeasible.empty()) {
      res.converged = true;
      break;
    }
    if (infeasible.size() < best_infeasible) {
      best_infeasible = infeasible.size();
      retries = opts.block_retries;
    } else {
      --retries;
    }
    if (retries > 0) {
      for (const Eigen::Index i : infeasible) res.free_set[static_cast<std::size_t>(i)] ^= 1;
      ++res.block_exchanges;
    } else {
      // Flip the worst violation first; after too many flips without
      // progress drop to Murty's rule (largest index), which terminates.
      Eigen::Index pick = infeasible.back();
      if (retries > -opts.greedy_flips) {
        double worst = 0.0;
        for (const Eigen::Index i : infeasible) {
          const bool is_free = res.free_set[static_cast<std::size_t>(i)];
          const double v = is_free ? -x[i] / x_tol : -y[i] / std::max(y_tol, std::numeric_limits<double>::min());
          if (v > worst) {
            worst = v;
            pick = i;
          }
        }
      }
      res.free_set[static_cast<std::size_t>(pick)] ^= 1;
      ++res.single_exchanges;
    }
  }

}

// Lawson-Hanson active set. Slower than pivoting but the objective drops
// every outer step, so it does not cycle on ill-conditioned instances.
void active_set(const SparseMatrix& a, const Eigen::VectorXd& b, double y_tol, SnnlsResult& res,
                Eigen::VectorXd& x) {
  const Eigen::Index n = a.cols();
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);  // entered with a non-positive solve
  std::vector<Eigen::Index> idx;
  x = Eigen::VectorXd::Zero(n);
  const std::size_t max_outer = 3 * static_cast<std::size_t>(n) + 10;
  for (std::size_t outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index enter = -1;
    double best = y_tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (!passive[u] && !blocked[u] && w[i] > best) {
        best = w[i];
        enter = i;
      }
    }
    if (enter < 0) {
      res.converged = std::none_of(blocked.begin(), blocked.end(), [](char c) { return c != 0; });
      break;
    }
    passive[static_cast<std::size_t>(enter)] = 1;
    bool moved = false;
    for (;;) {
      ++res.iterations;
      idx.clear();
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
      const FreeSolve fs = solve_free(select_columns(a, idx), b);
      res.condition_estimate = fs.condition;
      double step = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double z = fs.x[static_cast<Eigen::Index>(k)], xi = x[idx[k]];
        if (z <= 0.0) step = std::min(step, xi > 0.0 ? xi / (xi - z) : 0.0);
      }
      if (step > 0.0) moved = true;
      for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] += step * (fs.x[static_cast<Eigen::Index>(k)] - x[idx[k]]);
      if (step >= 1.0) break;
      for (const Eigen::Index i : idx) {
        if (x[i] <= 0.0) {
          x[i] = 0.0;
          passive[static_cast<std::size_t>(i)] = 0;
        }
      }
    }
    if (moved) {
      std::fill(blocked.begin(), blocked.end(), 0);
    } else {
      blocked[static_cast<std::size_t>(enter)] = 1;
    }
  }
  res.free_set = passive;
}

}  // namespace

SnnlsResult snnls_solve(const SparseMatrix& a, const Eigen::VectorXd& b, const SnnlsOptions& opts) {
  if (a.rows() != b.size()) throw std::invalid_argument("snnls: dimension mismatch");
  if (!b.allFinite()) throw std::invalid_argument("snnls: non-finite right-hand side");
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      if (!std::isfinite(it.value())) throw std::invalid_argument("snnls: non-finite matrix entry");

  const Eigen::Index n = a.cols();
  SnnlsResult res;
  const bool warm = opts.warm_start && opts.warm_start->size() == static_cast<std::size_t>(n);
  res.free_set.assign(static_cast<std::size_t>(n), 0);
  if (warm) res.free_set = *opts.warm_start;

  const Eigen::VectorXd atb = a.transpose() * b;
  const double y_scale = n > 0 ? atb.cwiseAbs().maxCoeff() : 0.0;
  const double y_tol = opts.kkt_tol * y_scale;
  const std::size_t max_iters = opts.max_iters ? opts.max_iters : 20 * static_cast<std::size_t>(n) + 100;

  Eigen::VectorXd x;
  // A warm start that has not settled after a few sweeps is worth less
  // than a cold start.
  pivot(a, b, opts, y_tol, warm ? std::min(max_iters, 5 * static_cast<std::size_t>(n) + 50) : max_iters, res, x);
  if (!res.converged && warm) {
    const std::size_t used = res.iterations;
    res.free_set.assign(static_cast<std::size_t>(n), 0);
    pivot(a, b, opts, y_tol, max_iters, res, x);
    res.iterations += used;
  }
  if (!res.converged && opts.active_set_fallback) {
    const std::size_t used = res.iterations;
    res.iterations = 0;
    active_set(a, b, y_tol, res, x);
    res.iterations += used;
    res.used_active_set = true;
  }

  res.lambda = x.cwiseMax(0.0);
  res.residual = b - a * res.lambda;
  const Eigen::VectorXd atr = a.transpose() * res.residual;
  res.kkt_violation = 0.0;
  if (y_scale > 0.0 && n > 0) res.kkt_violation = std::max(0.0, atr.maxCoeff() / y_scale);
  res.condition_warning = res.condition_estimate > opts.cond_warn;
  return res;
}

MinNormResult minnorm_solve(const SparseMatrix& m, const Eigen::VectorXd& c, double tol, std::size_t max_iters) {
  if (m.rows() != c.size()) throw std::invalid_argument("minnorm: dimension mismatch");
  if (!c.allFinite()) throw std::invalid_argument("minnorm: non-finite right-hand side");
  MinNormResult out;
  out.w = Eigen::VectorXd::Zero(m.cols());
  if (max_iters == 0) max_iters = 4 * static_cast<std::size_t>(m.rows() + m.cols());

  Eigen::VectorXd u = c;
  double beta = u.norm();
  const double cnorm = beta;
  if (beta == 0.0) {
    out.converged = true;
    return out;
  }
  u /= beta;
  Eigen::VectorXd v = m.transpose() * u;
  double alpha = v.norm();
  if (alpha == 0.0) {
    out.residual_norm = cnorm;
    out.converged = true;  // c is orthogonal to the range; w = 0 is optimal
    return out;
  }
  v /= alpha;
  Eigen::VectorXd w = v;
  double phibar = beta;
  double rhobar = alpha;
  double anorm_sq = alpha * alpha;

  for (out.iterations = 1; out.iterations <= max_iters; ++out.iterations) {
    u = m * v - alpha * u;
    beta = u.norm();
    if (beta > 0.0) u /= beta;
    anorm_sq += beta * beta;
    v = m.transpose() * u - beta * v;
    alpha = v.norm();
    if (alpha > 0.0) v /= alpha;
    anorm_sq += alpha * alpha;

    const double rho = std::hypot(rhobar, beta);
    const double cs = rhobar / rho;
    const double sn = beta / rho;
    const double theta = sn * alpha;
    rhobar = -cs * alpha;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    out.w += (phi / rho) * w;
    w = v - (theta / rho) * w;

    const double rnorm = phibar;
    const double arnorm = phibar * alpha * std::abs(cs);
    if (rnorm <= tol * cnorm || arnorm <= tol * std::sqrt(anorm_sq) * rnorm || alpha == 0.0 || beta == 0.0) {
      out.converged = true;
      break;
    }
  }
  if (out.iterations > max_iters) out.iterations = max_iters;
  out.residual_norm = (m * out.w - c).norm();
  return out;
}

}  // namespace taut
