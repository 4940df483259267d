#include "taut/rigidity.hpp"

#include <algorithm>

namespace taut {

namespace {

void push_column(std::vector<Eigen::Triplet<double>>& t, Eigen::Index col, const SparseVariation& g) {
  for (const auto& [v, w] : g.terms) {
    for (int d = 0; d < 3; ++d) {
      if (w[d] != 0.0) t.emplace_back(static_cast<Eigen::Index>(3 * v + d), col, -w[d]);
    }
  }
}

}  // namespace

SparseMatrix build_rigidity_matrix(const Polygon& poly, const ActiveSets& active) {
  std::vector<Strut> struts = active.struts;
  std::sort(struts.begin(), struts.end(), strut_less);
  std::vector<Kink> kinks = active.kinks;
  std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) {
    return a.vertex != b.vertex ? a.vertex < b.vertex : a.side < b.side;
  });

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(12 * struts.size() + 9 * kinks.size());
  Eigen::Index col = 0;
  for (const Strut& s : struts) push_column(t, col++, grad_chord(poly, s.p, s.q));
  for (const Kink& k : kinks) push_column(t, col++, grad_minrad(poly, k.vertex, k.side));
  SparseMatrix a(static_cast<Eigen::Index>(3 * poly.num_vertices()), col);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

Resolution resolve(const Variation& direction, const SparseMatrix& a, const std::vector<char>* warm_start) {
  Resolution out;
  const Eigen::VectorXd& b = direction.data();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double n = a.col(j).norm();
    if (n > 0.0) scale[j] = 1.0 / n;
  }
  const SparseMatrix scaled = a * scale.asDiagonal();
  SnnlsOptions opts;
  opts.warm_start = warm_start;
  out.solve = snnls_solve(scaled, b, opts);
  out.multipliers = scale.cwiseProduct(out.solve.lambda);
  out.constrained_gradient = Variation(out.solve.residual);
  out.resolved_part = Variation(Eigen::VectorXd(b - out.solve.residual));
  const double bn = b.norm();
  out.residual_ratio = bn > 0.0 ? out.solve.residual.norm() / bn : 0.0;
  return out;
}

Resolution resolve_regularized(const Variation& direction, const SparseMatrix& a, double mu) {
  Resolution out;
  const Eigen::VectorXd& b = direction.data();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(cols);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double n = a.col(j).norm();
    if (n > 0.0) scale[j] = 1.0 / n;
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) t.emplace_back(it.row(), j, it.value() * scale[j]);
    t.emplace_back(rows + j, j, std::sqrt(mu));
  }
  SparseMatrix stacked(rows + cols, cols);
  stacked.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + cols);
  rhs.head(rows) = b;
  out.solve = snnls_solve(stacked, rhs);
  out.mu = mu;
  out.multipliers = scale.cwiseProduct(out.solve.lambda);
  const Eigen::VectorXd r = out.solve.residual.head(rows);
  out.constrained_gradient = Variation(r);
  out.resolved_part = Variation(Eigen::VectorXd(b - r));
  const double bn = b.norm();
  out.residual_ratio = bn > 0.0 ? r.norm() / bn : 0.0;
  return out;
}

CriticalityReport criticality_report(const Resolution& r, double threshold) {
  CriticalityReport rep;
  rep.residual_ratio = r.residual_ratio;
  rep.critical = r.residual_ratio <= threshold;
  rep.force_balance = r.constrained_gradient.norm();
  rep.multipliers = r.multipliers;
  return rep;
}

}  // namespace taut
