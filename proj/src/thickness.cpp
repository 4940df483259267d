#include "taut/thickness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>

namespace taut {

namespace {

constexpr double kSnap = 1e-9;
constexpr double kParallel = 1e-10;
constexpr double kFirstOrderTol = 1e-9;

// Endpoint of a chord with its vertex flag resolved.
struct Endpoint {
  EdgePoint ep;
  bool at_vertex = false;
};

Endpoint canonical(const Polygon& poly, std::size_t edge, double s) {
  if (s <= kSnap) return {{edge, 1.0}, true};
  if (s >= 1.0 - kSnap) return {{poly.next(edge), 1.0}, true};
  return {{edge, 1.0 - s}, false};
}

Endpoint classify(const EdgePoint& p) {
  if (p.alpha >= 1.0 - kSnap) return {{p.edge, 1.0}, true};
  return {p, false};
}

// Position of a point along its component, in vertex units.
double arc_position(const Polygon& poly, const Endpoint& e) {
  const double base = static_cast<double>(poly.local_index(e.ep.edge));
  return e.at_vertex ? base : base + (1.0 - e.ep.alpha);
}

std::size_t vb_endpoints(const Polygon& poly, const Endpoint& p, const Endpoint& q) {
  const std::size_t c = poly.component_of(p.ep.edge);
  if (c != poly.component_of(q.ep.edge)) return kVbInfinite;
  const double n = static_cast<double>(poly.component_size(c));
  const double tp = arc_position(poly, p);
  const double tq = arc_position(poly, q);
  const double fwd_end = tq >= tp ? tq : tq + n;
  const double bwd_end = tp >= tq ? tp : tp + n;
  const double fwd = std::floor(fwd_end) - std::ceil(tp) + 1.0;
  const double bwd = std::floor(bwd_end) - std::ceil(tq) + 1.0;
  return static_cast<std::size_t>(std::max(0.0, std::min(fwd, bwd)));
}

bool in_domain(const Polygon& poly, const detail::ChordDomain& dom, const Endpoint& p,
               const Endpoint& q) {
  if (!dom.restricted) return true;
  const std::size_t vb = vb_endpoints(poly, p, q);
  return vb == kVbInfinite || static_cast<double>(vb) >= dom.vb_min - 1e-12;
}

Endpoint interior_of(std::size_t edge) { return {{edge, 0.5}, false}; }

struct Move {
  Vec3 direction;
  Endpoint moved;  // representative of the moved point, for domain tests
};

// Directions a point can move along the curve, with a representative of
// where it lands.
int moves_from(const Polygon& poly, const Endpoint& e, std::array<Move, 2>& out) {
  if (e.at_vertex) {
    const std::size_t k = e.ep.edge;
    const std::size_t kp = poly.prev(k);
    out[0] = {poly.vertex(poly.next(k)) - poly.vertex(k), interior_of(k)};
    out[1] = {poly.vertex(kp) - poly.vertex(k), interior_of(kp)};
  } else {
    const Vec3 d = poly.edge(e.ep.edge);
    out[0] = {d, e};
    out[1] = {-d, e};
  }
  return 2;
}

bool is_local_min(const Polygon& poly, const detail::ChordDomain& dom, const Endpoint& p,
                  const Endpoint& q, const Vec3& pp, const Vec3& qq) {
  const Vec3 diff = pp - qq;
  const double d = diff.norm();
  std::array<Move, 2> moves;
  moves_from(poly, p, moves);
  for (const Move& m : moves) {
    if (!in_domain(poly, dom, m.moved, q)) continue;
    if (diff.dot(m.direction) < -kFirstOrderTol * d * m.direction.norm()) return false;
  }
  moves_from(poly, q, moves);
  for (const Move& m : moves) {
    if (!in_domain(poly, dom, p, m.moved)) continue;
    if (-diff.dot(m.direction) < -kFirstOrderTol * d * m.direction.norm()) return false;
  }
  return true;
}

StrutKind kind_of(const Endpoint& p, const Endpoint& q) {
  if (p.at_vertex && q.at_vertex) return StrutKind::VertexVertex;
  if (p.at_vertex || q.at_vertex) return StrutKind::VertexEdge;
  return StrutKind::EdgeEdge;
}

bool adjacent(const Polygon& poly, std::size_t i, std::size_t j) {
  return poly.next(i) == j || poly.next(j) == i;
}

// Fraction along segment [a, b] of the point closest to x.
double project_fraction(const Vec3& x, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double t = (x - a).dot(d) / d.squaredNorm();
  return std::clamp(t, 0.0, 1.0);
}

struct RawCandidate {
  std::size_t i, j;
  double s, t;
};

void rectangle_candidates(const Polygon& poly, const detail::ChordDomain& dom, std::size_t i,
                          std::size_t j, std::vector<RawCandidate>& out) {
  const Vec3 a0 = poly.vertex(i), a1 = poly.vertex(poly.next(i));
  const Vec3 b0 = poly.vertex(j), b1 = poly.vertex(poly.next(j));
  const bool interior = in_domain(poly, dom, interior_of(i), interior_of(j));
  if (interior) {
    const detail::SegmentClosest c = detail::closest_segment_segment(a0, a1, b0, b1);
    if (!c.parallel) {
      out.push_back({i, j, c.s, c.t});
      return;
    }
    // Parallel edges: a family of minima; only its endpoints are kept.
    std::array<RawCandidate, 4> ends = {{{i, j, 0.0, project_fraction(a0, b0, b1)},
                                         {i, j, 1.0, project_fraction(a1, b0, b1)},
                                         {i, j, project_fraction(b0, a0, a1), 0.0},
                                         {i, j, project_fraction(b1, a0, a1), 1.0}}};
    std::array<double, 4> dist{};
    double dmin = kInfinity;
    for (int k = 0; k < 4; ++k) {
      const Vec3 p = a0 + ends[k].s * (a1 - a0);
      const Vec3 q = b0 + ends[k].t * (b1 - b0);
      dist[k] = (p - q).norm();
      dmin = std::min(dmin, dist[k]);
    }
    const double slack = 1e-9 * std::max((a1 - a0).norm(), (b1 - b0).norm());
    int lo = -1, hi = -1;
    for (int k = 0; k < 4; ++k) {
      if (dist[k] > dmin + slack) continue;
      out.push_back(ends[k]);
      if (lo < 0 || ends[k].s < ends[lo].s) lo = k;
      if (hi < 0 || ends[k].s > ends[hi].s) hi = k;
    }
    // Without the vb restriction the family endpoints are often not minima
    // (sliding toward a shared vertex shortens the chord), but its interior
    // still realizes the distance.
    if (!dom.restricted && ends[hi].s - ends[lo].s > 2.0 * kSnap) {
      out.push_back({i, j, 0.5 * (ends[lo].s + ends[hi].s), 0.5 * (ends[lo].t + ends[hi].t)});
    }
    return;
  }
  // Only parts of the rectangle boundary may lie in the domain.
  const Endpoint vi{{i, 1.0}, true}, vi1{{poly.next(i), 1.0}, true};
  const Endpoint vj{{j, 1.0}, true}, vj1{{poly.next(j), 1.0}, true};
  if (in_domain(poly, dom, vi, interior_of(j))) out.push_back({i, j, 0.0, project_fraction(a0, b0, b1)});
  if (in_domain(poly, dom, vi1, interior_of(j))) out.push_back({i, j, 1.0, project_fraction(a1, b0, b1)});
  if (in_domain(poly, dom, interior_of(i), vj)) out.push_back({i, j, project_fraction(b0, a0, a1), 0.0});
  if (in_domain(poly, dom, interior_of(i), vj1)) out.push_back({i, j, project_fraction(b1, a0, a1), 1.0});
  for (const double s : {0.0, 1.0}) {
    for (const double t : {0.0, 1.0}) {
      const Endpoint& p = s == 0.0 ? vi : vi1;
      const Endpoint& q = t == 0.0 ? vj : vj1;
      if (in_domain(poly, dom, p, q)) out.push_back({i, j, s, t});
    }
  }
}

bool same_point(const Endpoint& a, const Endpoint& b) {
  return a.at_vertex && b.at_vertex && a.ep.edge == b.ep.edge;
}

bool near_duplicate(const Strut& a, const Strut& b) {
  return a.p.edge == b.p.edge && a.q.edge == b.q.edge && std::abs(a.p.alpha - b.p.alpha) <= kSnap &&
         std::abs(a.q.alpha - b.q.alpha) <= kSnap;
}

}  // namespace

bool strut_less(const Strut& a, const Strut& b) {
  if (a.p.edge != b.p.edge) return a.p.edge < b.p.edge;
  if (a.q.edge != b.q.edge) return a.q.edge < b.q.edge;
  if (a.p.alpha != b.p.alpha) return a.p.alpha < b.p.alpha;
  return a.q.alpha < b.q.alpha;
}

double theta_of(double tau, double ell) { return 2.0 * std::atan(ell / (2.0 * tau)); }

double vb_threshold(double tau, double ell) { return std::numbers::pi / theta_of(tau, ell); }

std::size_t vb_count(const Polygon& poly, const EdgePoint& p, const EdgePoint& q) {
  Endpoint a = classify(p);
  Endpoint b = classify(q);
  // A point within kSnap of the far end of its edge is the next vertex.
  if (!a.at_vertex && a.ep.alpha <= kSnap) a = {{poly.next(p.edge), 1.0}, true};
  if (!b.at_vertex && b.ep.alpha <= kSnap) b = {{poly.next(q.edge), 1.0}, true};
  return vb_endpoints(poly, a, b);
}

namespace detail {

SegmentClosest closest_segment_segment(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                       const Vec3& b1) {
  const Vec3 d1 = a1 - a0;
  const Vec3 d2 = b1 - b0;
  const Vec3 r = a0 - b0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  const double c = d1.dot(r);
  const double b = d1.dot(d2);
  SegmentClosest out;
  out.parallel = d1.cross(d2).norm() < kParallel * std::sqrt(a * e);
  double s = 0.0;
  if (!out.parallel) s = std::clamp((b * f - c * e) / (a * e - b * b), 0.0, 1.0);
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  out.s = s;
  out.t = t;
  out.distance = ((a0 + s * d1) - (b0 + t * d2)).norm();
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> candidate_edge_pairs(const Polygon& poly,
                                                                      double cutoff) {
  const std::size_t n = poly.num_edges();
  double max_edge = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_edge = std::max(max_edge, poly.edge_length(i));
  const double h = std::max(cutoff, max_edge);

  using Key = std::int64_t;
  auto key = [](std::int64_t x, std::int64_t y, std::int64_t z) -> Key {
    return ((x & 0x1FFFFF) << 42) | ((y & 0x1FFFFF) << 21) | (z & 0x1FFFFF);
  };
  auto cell = [h](double v) { return static_cast<std::int64_t>(std::floor(v / h)); };

  std::vector<Eigen::Vector3d> lo(n), hi(n);
  std::unordered_map<Key, std::vector<std::uint32_t>> grid;
  grid.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = poly.vertex(i), b = poly.vertex(poly.next(i));
    lo[i] = a.cwiseMin(b);
    hi[i] = a.cwiseMax(b);
    for (std::int64_t x = cell(lo[i].x()); x <= cell(hi[i].x()); ++x)
      for (std::int64_t y = cell(lo[i].y()); y <= cell(hi[i].y()); ++y)
        for (std::int64_t z = cell(lo[i].z()); z <= cell(hi[i].z()); ++z)
          grid[key(x, y, z)].push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::uint32_t> found;
  for (std::size_t i = 0; i < n; ++i) {
    found.clear();
    const Vec3 qlo = lo[i].array() - cutoff;
    const Vec3 qhi = hi[i].array() + cutoff;
    for (std::int64_t x = cell(qlo.x()); x <= cell(qhi.x()); ++x)
      for (std::int64_t y = cell(qlo.y()); y <= cell(qhi.y()); ++y)
        for (std::int64_t z = cell(qlo.z()); z <= cell(qhi.z()); ++z) {
          const auto it = grid.find(key(x, y, z));
          if (it == grid.end()) continue;
          for (const std::uint32_t j : it->second) {
            if (j <= i) continue;
            // Boxes farther apart than the cutoff cannot hold a close pair.
            const Vec3 gap = (lo[j] - qhi).cwiseMax(qlo - hi[j]);
            if (gap.maxCoeff() > 0.0) continue;
            found.push_back(j);
          }
        }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    for (const std::uint32_t j : found) pairs.emplace_back(i, j);
  }
  return pairs;
}

std::vector<Strut> chord_minima(const Polygon& poly,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                const ChordDomain& domain, double cutoff) {
  std::vector<Strut> out;
  std::vector<RawCandidate> raw;
  const double scale = mean_edge_length(poly);
  for (const auto& [i, j] : pairs) {
    if (i == j) continue;
    if (!domain.restricted && adjacent(poly, i, j)) continue;
    raw.clear();
    rectangle_candidates(poly, domain, i, j, raw);
    for (const RawCandidate& rc : raw) {
      Endpoint p = canonical(poly, rc.i, rc.s);
      Endpoint q = canonical(poly, rc.j, rc.t);
      if (same_point(p, q)) continue;
      if (!in_domain(poly, domain, p, q)) continue;
      const Vec3 pp = point_on(poly, p.ep);
      const Vec3 qq = point_on(poly, q.ep);
      const double d = (pp - qq).norm();
      if (d > cutoff) continue;
      if (d <= 1e-12 * scale) {
        throw SelfIntersectionError("polygon self-intersects: edges " + std::to_string(i) +
                                    " and " + std::to_string(j) + " touch");
      }
      if (!is_local_min(poly, domain, p, q, pp, qq)) continue;
      if (strut_less({q.ep, p.ep}, {p.ep, q.ep})) std::swap(p, q);
      out.push_back({p.ep, q.ep, d, kind_of(p, q)});
    }
  }
  std::sort(out.begin(), out.end(), strut_less);
  std::vector<Strut> unique;
  for (const Strut& s : out) {
    if (!unique.empty() && near_duplicate(unique.back(), s)) continue;
    unique.push_back(s);
  }
  return unique;
}

}  // namespace detail

namespace {

double effective_ell(const Polygon& poly, double ell) { return ell > 0.0 ? ell : mean_edge_length(poly); }

double finite_cutoff(const Polygon& poly, double want) {
  if (std::isfinite(want)) return want;
  Vec3 lo = poly.vertex(0), hi = poly.vertex(0);
  for (std::size_t i = 1; i < poly.num_vertices(); ++i) {
    lo = lo.cwiseMin(poly.vertex(i));
    hi = hi.cwiseMax(poly.vertex(i));
  }
  return 2.0 * (hi - lo).norm() + 1.0;
}

double min_half_length(const std::vector<Strut>& s) {
  double m = kInfinity;
  for (const Strut& x : s) m = std::min(m, 0.5 * x.length);
  return m;
}

}  // namespace

PthiCthi thicknesses(const Polygon& poly, double tau, double ell) {
  ell = effective_ell(poly, ell);
  const double mr = min_minrad(poly);
  PthiCthi out;
  const double cutoff = finite_cutoff(poly, 2.0 * std::max(mr, mr / tau));
  const auto pairs = detail::candidate_edge_pairs(poly, cutoff);
  const auto dcsd = detail::chord_minima(poly, pairs, {false, 0.0}, cutoff);
  const auto vb = detail::chord_minima(poly, pairs, {true, vb_threshold(tau, ell)}, cutoff);
  out.pthi = std::min(mr, min_half_length(dcsd));
  out.cthi = std::min(mr / tau, min_half_length(vb));
  return out;
}

double cthi(const Polygon& poly, double tau, double ell) {
  ell = effective_ell(poly, ell);
  const double mr = min_minrad(poly) / tau;
  const double cutoff = finite_cutoff(poly, 2.0 * mr);
  const auto pairs = detail::candidate_edge_pairs(poly, cutoff);
  const auto vb = detail::chord_minima(poly, pairs, {true, vb_threshold(tau, ell)}, cutoff);
  return std::min(mr, min_half_length(vb));
}

double pthi(const Polygon& poly) {
  const double mr = min_minrad(poly);
  const double cutoff = finite_cutoff(poly, 2.0 * mr);
  const auto pairs = detail::candidate_edge_pairs(poly, cutoff);
  const auto dcsd = detail::chord_minima(poly, pairs, {false, 0.0}, cutoff);
  return std::min(mr, min_half_length(dcsd));
}

double prop_len(const Polygon& poly) { return polygon_length(poly) / pthi(poly); }

ActiveSets find_active_sets(const Polygon& poly, const ActiveSetOptions& opts) {
  const double ell = effective_ell(poly, opts.ell);
  const double band = 2.0 * opts.target * (1.0 + opts.strut_tol);
  const double kink_band = opts.target * opts.tau * (1.0 + opts.kink_tol);

  ActiveSets out;
  double mr = kInfinity;
  for (std::size_t i = 0; i < poly.num_vertices(); ++i) {
    const MinRadPair m = minrad_pm(poly, i);
    mr = std::min(mr, m.min());
    if (std::isfinite(m.minus) && m.minus <= kink_band) out.kinks.push_back({i, Side::Minus, m.minus});
    if (std::isfinite(m.plus) && m.plus <= kink_band) out.kinks.push_back({i, Side::Plus, m.plus});
  }

  const double cutoff =
      finite_cutoff(poly, std::max(band, 2.0 * std::max(mr, mr / opts.tau)));
  const auto pairs = detail::candidate_edge_pairs(poly, cutoff);
  const auto vb = detail::chord_minima(poly, pairs, {true, vb_threshold(opts.tau, ell)}, cutoff);
  const auto dcsd = detail::chord_minima(poly, pairs, {false, 0.0}, cutoff);
  for (const Strut& s : vb) {
    if (0.5 * s.length <= opts.target * (1.0 + opts.strut_tol)) out.struts.push_back(s);
  }
  out.cthi = std::min(mr / opts.tau, min_half_length(vb));
  out.pthi = std::min(mr, min_half_length(dcsd));
  return out;
}

CorollaryReport check_cor_hypotheses(const Polygon& poly, double tau, double ell) {
  ell = effective_ell(poly, ell);
  CorollaryReport rep;
  const double vb_min = vb_threshold(tau, ell);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < poly.num_edges(); ++i)
    for (std::size_t j = i + 1; j < poly.num_edges(); ++j) all.emplace_back(i, j);
  const auto dcsd = detail::chord_minima(poly, all, {false, 0.0}, kInfinity);
  rep.pthi = std::min(min_minrad(poly), min_half_length(dcsd));
  for (const Strut& s : dcsd) {
    const std::size_t vb = vb_count(poly, s.p, s.q);
    if (vb != kVbInfinite && static_cast<double>(vb) < vb_min - 1e-12) ++rep.dcsd_outside_vb;
  }
  rep.dcsd_in_vb = rep.dcsd_outside_vb == 0;

  // Vertex pairs on the boundary of VB have vb exactly ceil(vb_min).
  const auto boundary_vb = static_cast<std::size_t>(std::ceil(vb_min - 1e-12));
  for (std::size_t c = 0; c < poly.num_components(); ++c) {
    const std::size_t n = poly.component_size(c);
    const std::size_t b = poly.component_begin(c);
    if (boundary_vb < 1) continue;
    const std::size_t offset = boundary_vb - 1;  // vb(v_a, v_{a+k}) = k + 1 for k <= n/2
    if (offset == 0 || 2 * offset > n) continue;
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t other = (a + offset) % n;
      rep.min_boundary_distance =
          std::min(rep.min_boundary_distance, (poly.vertex(b + a) - poly.vertex(b + other)).norm());
    }
  }
  rep.boundary_clear = rep.min_boundary_distance > 2.0 * rep.pthi;
  rep.holds = rep.dcsd_in_vb && rep.boundary_clear;
  return rep;
}

}  // namespace taut
