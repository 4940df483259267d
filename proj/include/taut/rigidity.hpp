#pragma once

#include <vector>

#include "taut/geometry.hpp"
#include "taut/snnls.hpp"
#include "taut/thickness.hpp"

namespace taut {

inline constexpr double kCriticalThreshold = 0.01;
inline constexpr double kHighQualityThreshold = 0.001;

/// Columns are -grad(d/2) for each strut, then -grad MinRad for each kink,
/// both in sorted order. Explicit zeros are pruned.
SparseMatrix build_rigidity_matrix(const Polygon& poly, const ActiveSets& active);

/// Split of a direction into a part in the constraint cone (A lambda) and the
/// remainder, which is the constrained gradient.
struct Resolution {
  Variation constrained_gradient;
  Variation resolved_part;
  Eigen::VectorXd multipliers;  ///< in the units of the unscaled columns
  double residual_ratio = 1.0;
  SnnlsResult solve;
  double mu = 0.0;  ///< regularization weight, 0 for the plain solve
};

/// Projects `direction` against the cone spanned by the columns of `a`.
/// Columns are equilibrated to unit norm for the solve.
Resolution resolve(const Variation& direction, const SparseMatrix& a,
                   const std::vector<char>* warm_start = nullptr);

/// Same split for min ||A lambda - direction||^2 + mu ||lambda||^2 with
/// equilibrated columns. Always solvable, so it stands in for `resolve` when
/// the free columns are linearly dependent.
Resolution resolve_regularized(const Variation& direction, const SparseMatrix& a, double mu = 1e-10);

struct CriticalityReport {
  bool critical = false;
  double residual_ratio = 1.0;
  double force_balance = 0.0;  ///< ||direction - A lambda||
  Eigen::VectorXd multipliers;
};

CriticalityReport criticality_report(const Resolution& r, double threshold = kCriticalThreshold);

}  // namespace taut
