#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "taut/geometry.hpp"

namespace taut {

class RoundoutError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Straight segment or circular arc of a spliced curve, unit-speed in its
/// own arclength starting at `start`.
struct CurvePiece {
  bool is_arc = false;
  double start = 0.0;   ///< arclength offset within the component
  double length = 0.0;
  Vec3 origin;          ///< segment start, or arc center
  Vec3 dir;             ///< segment unit direction, or unit vector center -> arc start
  Vec3 tangent0;        ///< arc: unit tangent at the arc start
  double radius = 0.0;  ///< arc only
  double angle = 0.0;   ///< arc only; equals the vertex turning angle
  std::size_t vertex = 0;  ///< source vertex of an arc
  double curvature_before = 0.0;  ///< total curvature of earlier pieces
};

/// C^1 arc-and-segment curve obtained by rounding every polygon corner with
/// an arc of radius MinRad(v_i).
class SmoothCurve {
 public:
  std::size_t num_components() const { return pieces_.size(); }
  double component_length(std::size_t c) const { return lengths_[c]; }
  double length() const;
  /// Curvature bound 1 / (smallest arc radius); 0 for a curve with no arcs.
  double curvature_bound() const { return curvature_bound_; }
  double min_radius() const { return min_radius_; }
  /// Total curvature of component c (sum of arc angles).
  double total_curvature(std::size_t c) const { return total_curvature_[c]; }

  Vec3 point(std::size_t c, double s) const;
  Vec3 tangent(std::size_t c, double s) const;
  /// Total curvature accumulated from arclength 0 to s in [0, length] along component c.
  double curvature_prefix(std::size_t c, double s) const;

  const std::vector<CurvePiece>& pieces(std::size_t c) const { return pieces_[c]; }
  /// Largest tangent jump over all piece junctions.
  double max_tangent_mismatch() const;

  /// n points at equal arclength spacing along component c, starting at s = offset.
  std::vector<Vec3> sample(std::size_t c, std::size_t n, double offset = 0.0) const;

 private:
  friend SmoothCurve splice(const Polygon& poly);
  const CurvePiece& locate(std::size_t c, double& s) const;

  std::vector<std::vector<CurvePiece>> pieces_;
  std::vector<double> lengths_;
  std::vector<double> total_curvature_;
  double curvature_bound_ = 0.0;
  double min_radius_ = kInfinity;
};

/// Splices an arc of radius MinRad(v_i) into every non-straight corner. The
/// arc is tangent to both edges and touches the midpoint of the shorter one.
/// Throws RoundoutError if arcs from neighbouring corners overlap.
SmoothCurve splice(const Polygon& poly);

struct CertifiedDistance {
  /// Lower bound on every doubly-critical self-distance (infinite when the
  /// search proves there are none below the cap).
  double lower_bound = kInfinity;
  std::size_t comp_a = 0, comp_b = 0;
  double s = 0.0, t = 0.0;  ///< sample location realizing the bound
  std::size_t squares = 0;
  bool capped = false;  ///< search stopped because the bound reached `cap`
};

/// Lower bound on the distance of a doubly-critical pair lying within
/// arclength h (in both parameters) of a sample pair at distance x, for arcs
/// of curvature <= K. Comes from x^2 <= d^2 + 4 h^2 + 2 K h^2 d and is about
/// x - (1 + K) h^2 when x is near 2.
double critical_distance_lower_bound(double x, double h, double k);

/// Branch-and-bound over parameter squares, bounding doubly-critical
/// distances inside each square with critical_distance_lower_bound. Squares are discarded when neither first-order
/// condition can vanish inside them or when one of the two arcs joining any
/// of their pairs has total curvature below pi. Refinement stops at half-width
/// `eps`, or early once the smallest remaining bound is >= cap.
/// Throws RoundoutError if the bound drops to 1/2 or below.
CertifiedDistance certified_min_distance(const SmoothCurve& curve, double eps, double cap = kInfinity);

struct RopBound {
  double rop = kInfinity;
  double smooth_length = 0.0;
  double polygon_length = 0.0;
  double min_radius = kInfinity;
  double distance_bound = kInfinity;  ///< certified min doubly-critical distance (or >= cap)
  double thickness = 0.0;             ///< min(min_radius, distance_bound / 2)
  bool curvature_controls = true;
  std::string controlled_by() const { return curvature_controls ? "curvature" : "contact"; }
  CertifiedDistance search;
};

/// Certified upper bound on the smooth ropelength of the rounded-out curve.
/// `gap` is the certification slack relative to the thickness scale.
RopBound rop_upper_bound(const Polygon& poly, double gap = 1e-6);

}  // namespace taut
