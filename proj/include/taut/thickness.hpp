#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "taut/geometry.hpp"

namespace taut {

/// Raised when two non-adjacent parts of a polygon touch.
class SelfIntersectionError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

enum class StrutKind { VertexVertex, VertexEdge, EdgeEdge };

/// A chord (p, q) realizing a local minimum of self-distance. Endpoints use
/// the barycentric convention p = alpha * v_edge + (1 - alpha) * v_next; a
/// point sitting on a vertex is always stored as (that vertex's edge, 1).
struct Strut {
  EdgePoint p;
  EdgePoint q;
  double length = 0.0;
  StrutKind kind = StrutKind::EdgeEdge;
};

struct Kink {
  std::size_t vertex = 0;
  Side side = Side::Plus;
  double minrad = 0.0;
};

struct ActiveSets {
  std::vector<Strut> struts;
  std::vector<Kink> kinks;
  double pthi = kInfinity;
  double cthi = kInfinity;

  bool empty() const { return struts.empty() && kinks.empty(); }
  std::size_t size() const { return struts.size() + kinks.size(); }
};

inline constexpr std::size_t kVbInfinite = std::numeric_limits<std::size_t>::max();

/// Turning angle of two edges of length ell meeting with MinRad = tau.
double theta_of(double tau, double ell);

/// Smaller number of vertices between p and q along their component,
/// counting p or q when they sit on a vertex (parameters within 1e-9 of 0 or
/// 1 snap to the vertex). kVbInfinite for points on different components.
std::size_t vb_count(const Polygon& poly, const EdgePoint& p, const EdgePoint& q);

/// Minimum vb count a pair needs to belong to VB(tau, ell).
double vb_threshold(double tau, double ell);

struct ActiveSetOptions {
  double tau = 1.0;
  double ell = 0.0;  ///< 0 means "use the polygon's mean edge length"
  double strut_tol = 1e-4;
  double kink_tol = 1e-4;
  double target = 1.0;
};

/// Struts (local minima of self-distance on VB within the activation band)
/// and kinks (MinRad^+- at or under the band), plus PThi and CThi.
ActiveSets find_active_sets(const Polygon& poly, const ActiveSetOptions& opts);

/// (tau, ell)-constraint thickness.
double cthi(const Polygon& poly, double tau, double ell);
/// Polygonal thickness: min of MinRad and half the doubly-critical distances.
double pthi(const Polygon& poly);
/// Len / PThi.
double prop_len(const Polygon& poly);

struct PthiCthi {
  double pthi = kInfinity;
  double cthi = kInfinity;
};
/// Both thicknesses from a single candidate search.
PthiCthi thicknesses(const Polygon& poly, double tau, double ell);

struct CorollaryReport {
  bool holds = false;
  bool dcsd_in_vb = false;
  bool boundary_clear = false;
  double pthi = kInfinity;
  /// Smallest vertex-vertex distance on the VB boundary (infinite when empty).
  double min_boundary_distance = kInfinity;
  std::size_t dcsd_outside_vb = 0;
};

/// Checks dcsd(V) is inside VB(tau, ell) and every vertex pair on the
/// boundary of VB is farther apart than 2 PThi, which certifies CThi = PThi
/// for nearby polygons.
CorollaryReport check_cor_hypotheses(const Polygon& poly, double tau, double ell);

/// Lexicographic order on (p.edge, q.edge, p.alpha, q.alpha).
bool strut_less(const Strut& a, const Strut& b);

namespace detail {

/// Closest points between segments [a0, a1] and [b0, b1]; s and t are the
/// fractions along each segment measured from a0 and b0.
struct SegmentClosest {
  double s = 0.0;
  double t = 0.0;
  double distance = 0.0;
  bool parallel = false;
};
SegmentClosest closest_segment_segment(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                       const Vec3& b1);

/// Candidate edge pairs (i < j) whose segments may be within `cutoff`,
/// found with a uniform grid.
std::vector<std::pair<std::size_t, std::size_t>> candidate_edge_pairs(const Polygon& poly,
                                                                      double cutoff);

struct ChordDomain {
  bool restricted = false;  ///< true: VB(tau, ell); false: all distinct pairs
  double vb_min = 0.0;
};

/// All local minima of self-distance on `domain` with distance <= cutoff,
/// taken over the listed edge pairs, canonicalized, deduplicated and sorted.
std::vector<Strut> chord_minima(const Polygon& poly,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                const ChordDomain& domain, double cutoff);

}  // namespace detail

}  // namespace taut
