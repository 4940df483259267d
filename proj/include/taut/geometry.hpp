#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace taut {

using Vec3 = Eigen::Vector3d;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thrown for degenerate geometric input (coincident points, colinear
/// vertices where a curvature gradient was requested, and so on).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A closed, possibly multi-component polygon in R^3.
///
/// Vertices are stored flattened, component after component, so the whole
/// polygon is addressable as one vector in R^{3V}. Edge `i` runs from vertex
/// `i` to `next(i)`, where `next` wraps within the owning component.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(const std::vector<std::vector<Vec3>>& components);

  std::size_t num_vertices() const { return coords_.size() / 3; }
  std::size_t num_edges() const { return num_vertices(); }
  std::size_t num_components() const { return offsets_.size() - 1; }

  std::size_t component_begin(std::size_t c) const { return offsets_[c]; }
  std::size_t component_size(std::size_t c) const { return offsets_[c + 1] - offsets_[c]; }
  std::size_t component_of(std::size_t vertex) const;

  std::size_t next(std::size_t vertex) const;
  std::size_t prev(std::size_t vertex) const;
  /// Position of `vertex` within its component.
  std::size_t local_index(std::size_t vertex) const {
    return vertex - offsets_[component_of(vertex)];
  }

  Vec3 vertex(std::size_t i) const { return coords_.segment<3>(3 * i); }
  void set_vertex(std::size_t i, const Vec3& v) { coords_.segment<3>(3 * i) = v; }
  /// Edge vector v_{next(i)} - v_i.
  Vec3 edge(std::size_t i) const { return vertex(next(i)) - vertex(i); }
  double edge_length(std::size_t i) const { return edge(i).norm(); }

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::VectorXd& coords() { return coords_; }

  std::vector<std::vector<Vec3>> components() const;

  /// Same topology, new coordinates.
  Polygon with_coords(Eigen::VectorXd coords) const;

  /// Throws GeometryError when an invariant is broken (short component,
  /// zero-length edge, non-finite coordinate).
  void validate() const;

 private:
  Eigen::VectorXd coords_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> owner_;
};

/// One 3-vector per vertex, shape-compatible with a Polygon.
class Variation {
 public:
  Variation() = default;
  explicit Variation(std::size_t num_vertices) : data_(Eigen::VectorXd::Zero(3 * num_vertices)) {}
  explicit Variation(Eigen::VectorXd data) : data_(std::move(data)) {}

  std::size_t num_vertices() const { return data_.size() / 3; }
  Vec3 at(std::size_t i) const { return data_.segment<3>(3 * i); }
  void add(std::size_t i, const Vec3& v) { data_.segment<3>(3 * i) += v; }
  void set(std::size_t i, const Vec3& v) { data_.segment<3>(3 * i) = v; }

  double dot(const Variation& other) const { return data_.dot(other.data_); }
  double norm() const { return data_.norm(); }

  Variation& operator+=(const Variation& o) {
    data_ += o.data_;
    return *this;
  }
  Variation& operator-=(const Variation& o) {
    data_ -= o.data_;
    return *this;
  }
  Variation& operator*=(double s) {
    data_ *= s;
    return *this;
  }
  friend Variation operator+(Variation a, const Variation& b) { return a += b; }
  friend Variation operator-(Variation a, const Variation& b) { return a -= b; }
  friend Variation operator*(double s, Variation a) { return a *= s; }

  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

 private:
  Eigen::VectorXd data_;
};

/// A variation supported on a handful of vertices (at most 4 for chords,
/// 3 for curvature terms). Repeated vertex indices are accumulated.
struct SparseVariation {
  std::vector<std::pair<std::size_t, Vec3>> terms;

  void add(std::size_t vertex, const Vec3& v);
  Vec3 sum() const;
  Variation dense(std::size_t num_vertices) const;
};

/// Polygon displaced by `step * w`.
Polygon displaced(const Polygon& poly, const Variation& w, double step);

struct VertexAngle {
  std::size_t vertex = 0;
  double theta = 0.0;
  double prev_edge_length = 0.0;
  double next_edge_length = 0.0;
};

/// Turning angle between v - prev and next - v, in [0, pi].
double turning_angle(const Vec3& prev, const Vec3& v, const Vec3& next);
VertexAngle vertex_angle(const Polygon& poly, std::size_t i);

enum class Side { Minus, Plus };

struct MinRadPair {
  double minus = kInfinity;
  double plus = kInfinity;
  double min() const { return minus < plus ? minus : plus; }
  double get(Side s) const { return s == Side::Plus ? plus : minus; }
};

/// |e_{i-1}| / (2 tan(theta/2)) and |e_i| / (2 tan(theta/2)); both infinite at
/// a colinear vertex.
MinRadPair minrad_pm(const Polygon& poly, std::size_t i);
double minrad(const Polygon& poly, std::size_t i);
double min_minrad(const Polygon& poly);

double polygon_length(const Polygon& poly);
double component_length(const Polygon& poly, std::size_t c);
double mean_edge_length(const Polygon& poly);

/// Gradient of length in the sign used for descent: at vertex k the sum of
/// unit vectors toward both neighbours. This is -grad Len, the direction in
/// which length decreases fastest.
Variation grad_length(const Polygon& poly);

/// A point on edge `edge`: alpha * v_edge + (1 - alpha) * v_next(edge).
struct EdgePoint {
  std::size_t edge = 0;
  double alpha = 0.0;
};

Vec3 point_on(const Polygon& poly, const EdgePoint& p);

/// Gradient of d(p, q) / 2 with both points frozen at fixed barycentric
/// coordinates on their edges.
SparseVariation grad_chord(const Polygon& poly, const EdgePoint& p, const EdgePoint& q);

/// Gradient of MinRad^+ (Side::Plus) or MinRad^- (Side::Minus) at vertex i.
SparseVariation grad_minrad(const Polygon& poly, std::size_t i, Side side);

/// Equilateralization penalty stiffness * sum_i (|e_i| - mean_c)^2 / mean_c,
/// with mean_c the mean edge length of the component owning e_i.
double eq_penalty(const Polygon& poly, double stiffness);
/// Exact gradient (not negated) of eq_penalty.
Variation grad_eq_penalty(const Polygon& poly, double stiffness);

}  // namespace taut
