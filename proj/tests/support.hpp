#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "taut/geometry.hpp"
#include "taut/thickness.hpp"

namespace testing_support {

using taut::Polygon;
using taut::Vec3;

/// Random smooth closed curve (low-order trigonometric polynomial) sampled
/// at n jittered parameters. Generic enough that no two edges are parallel.
inline Polygon random_curve(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coef(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  double a[3][4][2];
  for (auto& axis : a)
    for (auto& k : axis)
      for (double& c : k) c = coef(rng);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * (static_cast<double>(i) + jitter(rng)) / static_cast<double>(n);
    Vec3 p = Vec3::Zero();
    for (int d = 0; d < 3; ++d)
      for (int k = 0; k < 4; ++k) p[d] += (a[d][k][0] * std::cos((k + 1) * t) + a[d][k][1] * std::sin((k + 1) * t)) / (k + 1);
    pts.push_back(scale * p);
  }
  return Polygon({pts});
}

/// Random multi-component link of smooth curves, offset so components overlap
/// in space.
inline Polygon random_link(std::size_t comps, std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<Vec3>> parts;
  for (std::size_t c = 0; c < comps; ++c) {
    auto pc = random_curve(n, seed * 31 + c).components()[0];
    for (Vec3& v : pc) v += Vec3(0.7 * static_cast<double>(c), 0.0, 0.0);
    parts.push_back(pc);
  }
  return Polygon(parts);
}

/// Central difference of a scalar function of the polygon along coordinate k.
inline double central_difference(const Polygon& poly, std::size_t k, double h,
                                 const std::function<double(const Polygon&)>& f) {
  Eigen::VectorXd plus = poly.coords(), minus = poly.coords();
  plus[k] += h;
  minus[k] -= h;
  return (f(poly.with_coords(plus)) - f(poly.with_coords(minus))) / (2.0 * h);
}

/// Point at global parameter t in [0, n) along component c.
inline Vec3 arc_point(const Polygon& poly, std::size_t c, double t) {
  const std::size_t n = poly.component_size(c);
  const std::size_t b = poly.component_begin(c);
  t = std::fmod(t, static_cast<double>(n));
  if (t < 0) t += static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::floor(t)) % n;
  const double f = t - std::floor(t);
  return (1.0 - f) * poly.vertex(b + k) + f * poly.vertex(b + (k + 1) % n);
}

/// Brute-force vb: walk every vertex of the component and test membership
/// in each closed arc.
inline double brute_vb(const Polygon& poly, std::size_t ca, double ta, std::size_t cb, double tb) {
  if (ca != cb) return std::numeric_limits<double>::infinity();
  const std::size_t n = poly.component_size(ca);
  const double N = static_cast<double>(n);
  auto in_arc = [&](double from, double to, double k) {
    double len = to - from;
    if (len < 0) len += N;
    double off = k - from;
    if (off < 0) off += N;
    return off <= len;
  };
  int fwd = 0, bwd = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    if (in_arc(ta, tb, kk) || kk == ta || kk == tb) ++fwd;
    if (in_arc(tb, ta, kk) || kk == ta || kk == tb) ++bwd;
  }
  return std::min(fwd, bwd);
}

struct OracleStrut {
  std::size_t pe, qe;
  double pa, qa, d;
};

/// Exhaustive reference search for local minima of self-distance. Every edge
/// pair contributes its interior critical point, its four edge-projection
/// points and its four corners; a candidate is a local minimum when no
/// parameter perturbation of size 1e-6 in any of the eight grid directions
/// that stays in the domain lowers the distance.
inline std::vector<OracleStrut> exhaustive_minima(const Polygon& poly, bool restricted, double vb_min,
                                                  double max_d) {
  const double snap = 1e-9;
  std::vector<OracleStrut> found;
  const std::size_t E = poly.num_edges();
  auto local = [&](std::size_t e) { return static_cast<double>(poly.local_index(e)); };
  for (std::size_t i = 0; i < E; ++i) {
    for (std::size_t j = i + 1; j < E; ++j) {
      const std::size_t ci = poly.component_of(i), cj = poly.component_of(j);
      const bool adj = poly.next(i) == j || poly.next(j) == i;
      if (!restricted && adj) continue;
      const Vec3 a0 = poly.vertex(i), a1 = poly.vertex(poly.next(i));
      const Vec3 b0 = poly.vertex(j), b1 = poly.vertex(poly.next(j));
      const Vec3 u = a1 - a0, v = b1 - b0, w = a0 - b0;
      std::vector<std::pair<double, double>> cand;
      const double A = u.dot(u), B = u.dot(v), C = v.dot(v), D = u.dot(w), F = v.dot(w);
      const double det = A * C - B * B;
      if (det > 1e-12 * A * C) {
        const double s = (B * F - C * D) / det, t = (A * F - B * D) / det;
        if (s > 0 && s < 1 && t > 0 && t < 1) cand.emplace_back(s, t);
      }
      for (double s : {0.0, 1.0}) {
        const Vec3 p = a0 + s * u;
        const double t = (p - b0).dot(v) / C;
        if (t > 0 && t < 1) cand.emplace_back(s, t);
      }
      for (double t : {0.0, 1.0}) {
        const Vec3 q = b0 + t * v;
        const double s = (q - a0).dot(u) / A;
        if (s > 0 && s < 1) cand.emplace_back(s, t);
      }
      for (double s : {0.0, 1.0})
        for (double t : {0.0, 1.0}) cand.emplace_back(s, t);

      for (auto [s, t] : cand) {
        if (s < snap) s = 0;
        if (s > 1 - snap) s = 1;
        if (t < snap) t = 0;
        if (t > 1 - snap) t = 1;
        const double ta = local(i) + s, tb = local(j) + t;
        const Vec3 p = arc_point(poly, ci, ta), q = arc_point(poly, cj, tb);
        const double d = (p - q).norm();
        if (d > max_d || d == 0.0) continue;
        const double n_a = static_cast<double>(poly.component_size(ci));
        const double n_b = static_cast<double>(poly.component_size(cj));
        auto wrap = [](double x, double n) { return x >= n ? x - n : x; };
        const double ga = wrap(ta, n_a), gb = wrap(tb, n_b);
        auto ok_domain = [&](double x, double y) {
          if (!restricted) return true;
          return brute_vb(poly, ci, x, cj, y) >= vb_min - 1e-12;
        };
        if (!ok_domain(ga, gb)) continue;
        if (ci == cj && ga == gb) continue;
        bool is_min = true;
        const double delta = 1e-6;
        for (int dx = -1; dx <= 1 && is_min; ++dx)
          for (int dy = -1; dy <= 1 && is_min; ++dy) {
            if (dx == 0 && dy == 0) continue;
            double xa = ga + dx * delta, xb = gb + dy * delta;
            if (xa < 0) xa += n_a;
            if (xb < 0) xb += n_b;
            xa = wrap(xa, n_a);
            xb = wrap(xb, n_b);
            // Only probe directions whose whole segment stays in the domain.
            if (!ok_domain(xa, xb)) continue;
            const double dd = (arc_point(poly, ci, xa) - arc_point(poly, cj, xb)).norm();
            if (dd < d * (1.0 - 1e-13)) is_min = false;
          }
        if (!is_min) continue;
        // Canonical endpoints: a vertex is (its edge, 1).
        auto canon = [&](std::size_t c, double g) -> std::pair<std::size_t, double> {
          const std::size_t b = poly.component_begin(c);
          const double fl = std::floor(g);
          const double f = g - fl;
          auto k = static_cast<std::size_t>(fl);
          if (f == 0.0) return {b + k, 1.0};
          return {b + k, 1.0 - f};
        };
        auto P = canon(ci, ga), Q = canon(cj, gb);
        if (std::tie(Q.first, Q.second) < std::tie(P.first, P.second)) std::swap(P, Q);
        found.push_back({P.first, Q.first, P.second, Q.second, d});
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const OracleStrut& x, const OracleStrut& y) {
    return std::tie(x.pe, x.qe, x.pa, x.qa) < std::tie(y.pe, y.qe, y.pa, y.qa);
  });
  std::vector<OracleStrut> uniq;
  for (const auto& s : found) {
    if (!uniq.empty() && uniq.back().pe == s.pe && uniq.back().qe == s.qe &&
        std::abs(uniq.back().pa - s.pa) < 1e-9 && std::abs(uniq.back().qa - s.qa) < 1e-9)
      continue;
    uniq.push_back(s);
  }
  return uniq;
}

/// Relative-or-absolute closeness.
inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing_support
