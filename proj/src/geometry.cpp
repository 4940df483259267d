#include "taut/geometry.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace taut {

Polygon::Polygon(const std::vector<std::vector<Vec3>>& components) {
  std::size_t total = 0;
  for (const auto& c : components) total += c.size();
  coords_.resize(3 * total);
  owner_.reserve(total);
  std::size_t k = 0;
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (const Vec3& v : components[c]) {
      coords_.segment<3>(3 * k++) = v;
      owner_.push_back(c);
    }
    offsets_.push_back(k);
  }
  validate();
}

std::size_t Polygon::component_of(std::size_t vertex) const { return owner_[vertex]; }

std::size_t Polygon::next(std::size_t vertex) const {
  const std::size_t c = owner_[vertex];
  return vertex + 1 == offsets_[c + 1] ? offsets_[c] : vertex + 1;
}

std::size_t Polygon::prev(std::size_t vertex) const {
  const std::size_t c = owner_[vertex];
  return vertex == offsets_[c] ? offsets_[c + 1] - 1 : vertex - 1;
}

std::vector<std::vector<Vec3>> Polygon::components() const {
  std::vector<std::vector<Vec3>> out(num_components());
  for (std::size_t c = 0; c < num_components(); ++c) {
    for (std::size_t i = offsets_[c]; i < offsets_[c + 1]; ++i) out[c].push_back(vertex(i));
  }
  return out;
}

Polygon Polygon::with_coords(Eigen::VectorXd coords) const {
  if (coords.size() != coords_.size()) throw GeometryError("coordinate vector has the wrong size");
  Polygon p = *this;
  p.coords_ = std::move(coords);
  return p;
}

void Polygon::validate() const {
  if (num_components() == 0) throw GeometryError("polygon has no components");
  for (std::size_t c = 0; c < num_components(); ++c) {
    if (component_size(c) < 3) {
      throw GeometryError(fmt::format("component {} has {} vertices; need at least 3", c,
                                      component_size(c)));
    }
  }
  if (!coords_.allFinite()) throw GeometryError("non-finite vertex coordinate");
  for (std::size_t i = 0; i < num_edges(); ++i) {
    if (edge_length(i) == 0.0) throw GeometryError(fmt::format("edge {} has zero length", i));
  }
}

void SparseVariation::add(std::size_t vertex, const Vec3& v) {
  for (auto& [idx, w] : terms) {
    if (idx == vertex) {
      w += v;
      return;
    }
  }
  terms.emplace_back(vertex, v);
}

Vec3 SparseVariation::sum() const {
  Vec3 s = Vec3::Zero();
  for (const auto& [idx, w] : terms) s += w;
  return s;
}

Variation SparseVariation::dense(std::size_t num_vertices) const {
  Variation out(num_vertices);
  for (const auto& [idx, w] : terms) out.add(idx, w);
  return out;
}

Polygon displaced(const Polygon& poly, const Variation& w, double step) {
  return poly.with_coords(poly.coords() + step * w.data());
}

double turning_angle(const Vec3& prev, const Vec3& v, const Vec3& next) {
  const Vec3 a = v - prev;
  const Vec3 b = next - v;
  if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0) {
    throw GeometryError("turning angle undefined at coincident points");
  }
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

VertexAngle vertex_angle(const Polygon& poly, std::size_t i) {
  const std::size_t ip = poly.prev(i);
  const std::size_t in = poly.next(i);
  VertexAngle out;
  out.vertex = i;
  out.theta = turning_angle(poly.vertex(ip), poly.vertex(i), poly.vertex(in));
  out.prev_edge_length = poly.edge_length(ip);
  out.next_edge_length = poly.edge_length(i);
  return out;
}

MinRadPair minrad_pm(const Polygon& poly, std::size_t i) {
  if (i >= poly.num_vertices()) throw GeometryError("vertex index out of range");
  const VertexAngle a = vertex_angle(poly, i);
  MinRadPair out;
  if (a.theta == 0.0) return out;
  const double denom = 2.0 * std::tan(0.5 * a.theta);
  out.minus = a.prev_edge_length / denom;
  out.plus = a.next_edge_length / denom;
  return out;
}

double minrad(const Polygon& poly, std::size_t i) { return minrad_pm(poly, i).min(); }

double min_minrad(const Polygon& poly) {
  double m = kInfinity;
  for (std::size_t i = 0; i < poly.num_vertices(); ++i) m = std::min(m, minrad(poly, i));
  return m;
}

double polygon_length(const Polygon& poly) {
  double len = 0.0;
  for (std::size_t i = 0; i < poly.num_edges(); ++i) len += poly.edge_length(i);
  return len;
}

double component_length(const Polygon& poly, std::size_t c) {
  double len = 0.0;
  const std::size_t b = poly.component_begin(c);
  for (std::size_t i = b; i < b + poly.component_size(c); ++i) len += poly.edge_length(i);
  return len;
}

double mean_edge_length(const Polygon& poly) {
  return polygon_length(poly) / static_cast<double>(poly.num_edges());
}

Variation grad_length(const Polygon& poly) {
  Variation g(poly.num_vertices());
  for (std::size_t i = 0; i < poly.num_edges(); ++i) {
    const Vec3 e = poly.edge(i);
    const double len = e.norm();
    if (len == 0.0) throw GeometryError(fmt::format("edge {} has zero length", i));
    const Vec3 t = e / len;
    g.add(i, t);
    g.add(poly.next(i), -t);
  }
  return g;
}

Vec3 point_on(const Polygon& poly, const EdgePoint& p) {
  return p.alpha * poly.vertex(p.edge) + (1.0 - p.alpha) * poly.vertex(poly.next(p.edge));
}

SparseVariation grad_chord(const Polygon& poly, const EdgePoint& p, const EdgePoint& q) {
  const Vec3 pp = point_on(poly, p);
  const Vec3 qq = point_on(poly, q);
  const Vec3 diff = pp - qq;
  const double d = diff.norm();
  if (d == 0.0) throw GeometryError("chord gradient undefined for coincident points");
  const double scale = 1.0 / (2.0 * d);
  SparseVariation g;
  g.add(p.edge, scale * p.alpha * diff);
  g.add(poly.next(p.edge), scale * (1.0 - p.alpha) * diff);
  g.add(q.edge, -scale * q.alpha * diff);
  g.add(poly.next(q.edge), -scale * (1.0 - q.alpha) * diff);
  return g;
}

namespace {

// Gradient of |B| / (2 tan(theta/2)) with A = before - at, B = after - at,
// returned as (w at `before`, x_plus_v at `after`).
std::pair<Vec3, Vec3> minrad_plus_terms(const Vec3& before, const Vec3& at, const Vec3& after) {
  const Vec3 a = before - at;
  const Vec3 b = after - at;
  const double la = a.norm();
  const double lb = b.norm();
  const Vec3 cross = b.cross(a);
  const double cn = cross.norm();
  const double theta = std::atan2(cn, -a.dot(b));
  if (cn == 0.0 || theta <= 0.0) throw GeometryError("MinRad undefined at a colinear vertex");
  if (theta >= std::numbers::pi) throw GeometryError("MinRad gradient undefined at a cusp");
  const Vec3 n = cross / cn;
  const double k = lb / (2.0 * std::cos(theta) - 2.0);
  const Vec3 v = b / (2.0 * std::tan(0.5 * theta) * lb);
  const Vec3 w = k * a.cross(n) / (la * la);
  const Vec3 x = k * n.cross(b) / (lb * lb);
  return {w, x + v};
}

}  // namespace

SparseVariation grad_minrad(const Polygon& poly, std::size_t i, Side side) {
  const std::size_t ip = poly.prev(i);
  const std::size_t in = poly.next(i);
  // MinRad^- is MinRad^+ of the reversed polygon.
  const std::size_t before = side == Side::Plus ? ip : in;
  const std::size_t after = side == Side::Plus ? in : ip;
  const auto [w, xv] = minrad_plus_terms(poly.vertex(before), poly.vertex(i), poly.vertex(after));
  SparseVariation g;
  g.add(before, w);
  g.add(i, -w - xv);
  g.add(after, xv);
  return g;
}

namespace {

struct ComponentStats {
  double mean = 0.0;
  double sq_dev = 0.0;  // sum (L_i - mean)^2
  std::size_t n = 0;
};

ComponentStats component_stats(const Polygon& poly, std::size_t c) {
  ComponentStats s;
  s.n = poly.component_size(c);
  const std::size_t b = poly.component_begin(c);
  for (std::size_t i = b; i < b + s.n; ++i) s.mean += poly.edge_length(i);
  s.mean /= static_cast<double>(s.n);
  for (std::size_t i = b; i < b + s.n; ++i) {
    const double dev = poly.edge_length(i) - s.mean;
    s.sq_dev += dev * dev;
  }
  return s;
}

}  // namespace

double eq_penalty(const Polygon& poly, double stiffness) {
  double total = 0.0;
  for (std::size_t c = 0; c < poly.num_components(); ++c) {
    const ComponentStats s = component_stats(poly, c);
    total += s.sq_dev / s.mean;
  }
  return stiffness * total;
}

Variation grad_eq_penalty(const Polygon& poly, double stiffness) {
  Variation g(poly.num_vertices());
  for (std::size_t c = 0; c < poly.num_components(); ++c) {
    const ComponentStats s = component_stats(poly, c);
    // dEq/dL_j = 2 (L_j - m) / m - (1/n) sum_i (L_i - m)^2 / m^2, using sum_i (L_i - m) = 0.
    const double shared = s.sq_dev / (s.mean * s.mean * static_cast<double>(s.n));
    const std::size_t b = poly.component_begin(c);
    for (std::size_t i = b; i < b + s.n; ++i) {
      const Vec3 e = poly.edge(i);
      const double len = e.norm();
      const double dl = stiffness * (2.0 * (len - s.mean) / s.mean - shared);
      const Vec3 t = (dl / len) * e;
      g.add(poly.next(i), t);
      g.add(i, -t);
    }
  }
  return g;
}

}  // namespace taut
