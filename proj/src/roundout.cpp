#include "taut/roundout.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <fmt/format.h>

namespace taut {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kStraight = 1e-12;

Vec3 piece_point(const CurvePiece& p, double u) {
  if (!p.is_arc) return p.origin + u * p.dir;
  const double phi = u / p.radius;
  return p.origin + p.radius * (std::cos(phi) * p.dir + std::sin(phi) * p.tangent0);
}

Vec3 piece_tangent(const CurvePiece& p, double u) {
  if (!p.is_arc) return p.dir;
  const double phi = u / p.radius;
  return -std::sin(phi) * p.dir + std::cos(phi) * p.tangent0;
}

}  // namespace

double SmoothCurve::length() const {
  double l = 0.0;
  for (double x : lengths_) l += x;
  return l;
}

const CurvePiece& SmoothCurve::locate(std::size_t c, double& s) const {
  const auto& ps = pieces_[c];
  const double len = lengths_[c];
  s = std::fmod(s, len);
  if (s < 0) s += len;
  auto it = std::upper_bound(ps.begin(), ps.end(), s, [](double v, const CurvePiece& p) { return v < p.start; });
  const CurvePiece& p = *(it == ps.begin() ? it : it - 1);
  s = std::clamp(s - p.start, 0.0, p.length);
  return p;
}

Vec3 SmoothCurve::point(std::size_t c, double s) const {
  const CurvePiece& p = locate(c, s);
  return piece_point(p, s);
}

Vec3 SmoothCurve::tangent(std::size_t c, double s) const {
  const CurvePiece& p = locate(c, s);
  return piece_tangent(p, s);
}

double SmoothCurve::curvature_prefix(std::size_t c, double s) const {
  if (s >= lengths_[c]) return total_curvature_[c];
  if (s <= 0) return 0.0;
  const CurvePiece& p = locate(c, s);
  return p.curvature_before + (p.is_arc ? s / p.radius : 0.0);
}

double SmoothCurve::max_tangent_mismatch() const {
  double worst = 0.0;
  for (const auto& ps : pieces_)
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const CurvePiece& a = ps[i];
      const CurvePiece& b = ps[(i + 1) % ps.size()];
      worst = std::max(worst, (piece_tangent(a, a.length) - piece_tangent(b, 0.0)).norm());
    }
  return worst;
}

std::vector<Vec3> SmoothCurve::sample(std::size_t c, std::size_t n, double offset) const {
  std::vector<Vec3> out;
  out.reserve(n);
  const double step = lengths_[c] / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(point(c, offset + step * static_cast<double>(k)));
  return out;
}

SmoothCurve splice(const Polygon& poly) {
  poly.validate();
  SmoothCurve out;
  for (std::size_t c = 0; c < poly.num_components(); ++c) {
    const std::size_t b = poly.component_begin(c);
    const std::size_t n = poly.component_size(c);
    std::vector<double> h(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const VertexAngle va = vertex_angle(poly, b + k);
      if (va.theta < kStraight) continue;
      if (kPi - va.theta < 1e-9) throw RoundoutError(fmt::format("corners too tight to splice: vertex {} folds back", b + k));
      h[k] = 0.5 * std::min(va.prev_edge_length, va.next_edge_length);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double e = poly.edge_length(b + k);
      if (h[k] + h[(k + 1) % n] > e * (1 + 1e-12))
        throw RoundoutError(fmt::format("corners too tight to splice: arcs overlap on edge {}", b + k));
    }

    std::vector<CurvePiece> pieces;
    double s = 0.0, tc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t v = b + k;
      const Vec3 tp = poly.edge(poly.prev(v)).normalized();
      const Vec3 tn = poly.edge(v).normalized();
      if (h[k] > 0) {
        const VertexAngle va = vertex_angle(poly, v);
        const double r = h[k] / std::tan(0.5 * va.theta);
        const Vec3 n0 = (tn - tn.dot(tp) * tp).normalized();
        CurvePiece arc;
        arc.is_arc = true;
        arc.start = s;
        arc.radius = r;
        arc.angle = va.theta;
        arc.length = r * va.theta;
        arc.origin = poly.vertex(v) - h[k] * tp + r * n0;
        arc.dir = -n0;
        arc.tangent0 = tp;
        arc.vertex = v;
        arc.curvature_before = tc;
        pieces.push_back(arc);
        s += arc.length;
        tc += va.theta;
        out.min_radius_ = std::min(out.min_radius_, r);
      }
      const double seg = poly.edge_length(v) - h[k] - h[(k + 1) % n];
      if (seg > 0) {
        CurvePiece p;
        p.start = s;
        p.length = seg;
        p.origin = poly.vertex(v) + h[k] * tn;
        p.dir = tn;
        p.vertex = v;
        p.curvature_before = tc;
        pieces.push_back(p);
        s += seg;
      }
    }
    out.pieces_.push_back(std::move(pieces));
    out.lengths_.push_back(s);
    out.total_curvature_.push_back(tc);
  }
  out.curvature_bound_ = std::isfinite(out.min_radius_) ? 1.0 / out.min_radius_ : 0.0;
  return out;
}

double critical_distance_lower_bound(double x, double h, double k) {
  const double kh2 = k * h * h;
  const double disc = kh2 * kh2 + x * x - 4.0 * h * h;
  if (disc <= 0) return 0.0;
  return std::max(0.0, std::sqrt(disc) - kh2);
}

namespace {

struct Square {
  double lb;
  std::size_t a, b;
  double s, t, hs, ht;
  double dist;
};

struct SquareOrder {
  bool operator()(const Square& x, const Square& y) const {
    if (x.lb != y.lb) return x.lb > y.lb;
    if (x.a != y.a) return x.a > y.a;
    if (x.b != y.b) return x.b > y.b;
    if (x.s != y.s) return x.s > y.s;
    return x.t > y.t;
  }
};

class Search {
 public:
  Search(const SmoothCurve& c) : curve_(c), k_(c.curvature_bound()) {}

  // Returns false when the square provably holds no doubly-critical pair.
  bool evaluate(Square& q, double parent_lb) const {
    if (q.a == q.b && q.t + q.ht <= q.s - q.hs) return false;
    const Vec3 p = curve_.point(q.a, q.s);
    const Vec3 r = curve_.point(q.b, q.t);
    const Vec3 diff = p - r;
    q.dist = diff.norm();

    if (q.a == q.b && !curvature_allows(q)) return false;

    // First-order conditions cannot vanish if the center value is farther
    // from zero than its Lipschitz spread over the square.
    const double dmax = q.dist + q.hs + q.ht;
    const double gs = curve_.tangent(q.a, q.s).dot(diff);
    const double gt = -curve_.tangent(q.b, q.t).dot(diff);
    const double bs = (k_ * dmax + 1.0) * q.hs + q.ht;
    const double bt = (k_ * dmax + 1.0) * q.ht + q.hs;
    const double slack = 1e-12 * (1.0 + dmax);
    if (std::abs(gs) > bs + slack || std::abs(gt) > bt + slack) return false;

    q.lb = std::max(parent_lb, critical_distance_lower_bound(q.dist, std::max(q.hs, q.ht), k_));
    return true;
  }

 private:
  // Both arcs joining a doubly-critical pair carry total curvature >= pi.
  bool curvature_allows(const Square& q) const {
    const double total = curve_.total_curvature(q.a);
    const double len = curve_.component_length(q.a);
    auto pre = [&](double x) { return curve_.curvature_prefix(q.a, std::clamp(x, 0.0, len)); };
    const double hi = pre(q.t + q.ht) - pre(q.s - q.hs);
    const double lo = pre(q.t - q.ht) - pre(q.s + q.hs);
    const double m1 = std::max(0.0, lo);
    const double m2 = std::max(hi, -lo);
    const double tol = 1e-9;
    return !(m2 < kPi - tol || m1 > total - kPi + tol);
  }

  const SmoothCurve& curve_;
  double k_;
};

}  // namespace

CertifiedDistance certified_min_distance(const SmoothCurve& curve, double eps, double cap) {
  if (!(eps > 0)) throw std::invalid_argument("certified_min_distance: eps must be positive");
  const double k = curve.curvature_bound();
  double longest = 0.0;
  for (std::size_t c = 0; c < curve.num_components(); ++c) longest = std::max(longest, curve.component_length(c));
  const double h0 = std::max({eps, k > 1 ? 0.25 / k : 0.25, longest / 512.0});
  Search search(curve);
  std::priority_queue<Square, std::vector<Square>, SquareOrder> queue;
  CertifiedDistance out;

  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < curve.num_components(); ++c)
    cells.push_back(static_cast<std::size_t>(std::ceil(curve.component_length(c) / (2 * h0))));

  for (std::size_t a = 0; a < curve.num_components(); ++a)
    for (std::size_t b = a; b < curve.num_components(); ++b) {
      const double hs = curve.component_length(a) / (2.0 * static_cast<double>(cells[a]));
      const double ht = curve.component_length(b) / (2.0 * static_cast<double>(cells[b]));
      for (std::size_t i = 0; i < cells[a]; ++i)
        for (std::size_t j = (a == b ? i : 0); j < cells[b]; ++j) {
          Square q{0.0, a, b, (2.0 * static_cast<double>(i) + 1) * hs, (2.0 * static_cast<double>(j) + 1) * ht, hs, ht, 0.0};
          ++out.squares;
          if (search.evaluate(q, 0.0)) queue.push(q);
        }
    }

  while (!queue.empty()) {
    const Square q = queue.top();
    queue.pop();
    if (q.lb >= cap || std::max(q.hs, q.ht) <= eps) {
      out.lower_bound = q.lb;
      out.comp_a = q.a;
      out.comp_b = q.b;
      out.s = q.s;
      out.t = q.t;
      out.capped = q.lb >= cap;
      break;
    }
    for (int ds : {-1, 1})
      for (int dt : {-1, 1}) {
        Square c{0.0, q.a, q.b, q.s + 0.5 * ds * q.hs, q.t + 0.5 * dt * q.ht, 0.5 * q.hs, 0.5 * q.ht, 0.0};
        ++out.squares;
        if (search.evaluate(c, q.lb)) queue.push(c);
      }
  }
  if (out.lower_bound <= 0.5)
    throw RoundoutError(fmt::format(
        "self-distance bound {:.6g} is not above 1/2; rescale the curve to thickness near 1 before rounding out",
        out.lower_bound));
  return out;
}

RopBound rop_upper_bound(const Polygon& poly, double gap) {
  RopBound out;
  const SmoothCurve curve = splice(poly);
  out.smooth_length = curve.length();
  out.polygon_length = polygon_length(poly);
  out.min_radius = curve.min_radius();
  const double scale = std::isfinite(out.min_radius) ? out.min_radius : 1.0;
  const double eps = std::sqrt(gap * scale / (1.0 + curve.curvature_bound()));
  out.search = certified_min_distance(curve, eps, 2.0 * out.min_radius);
  out.distance_bound = out.search.lower_bound;
  out.curvature_controls = out.min_radius <= 0.5 * out.distance_bound;
  out.thickness = std::min(out.min_radius, 0.5 * out.distance_bound);
  out.rop = out.smooth_length / out.thickness;
  return out;
}

}  // namespace taut
