#include "taut/knots.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace taut {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<Vec3> sample(std::size_t n, const std::function<Vec3(double)>& curve) {
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(curve(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
  }
  return out;
}

}  // namespace

Polygon regular_polygon(std::size_t n, double radius) {
  return Polygon({sample(n, [&](double t) { return Vec3(radius * std::cos(t), radius * std::sin(t), 0.0); })});
}

Polygon hopf_link(std::size_t n, double radius) {
  auto a = sample(n, [&](double t) { return Vec3(radius * std::cos(t), radius * std::sin(t), 0.0); });
  auto b = sample(n, [&](double t) {
    return Vec3(radius + radius * std::cos(t), 0.0, radius * std::sin(t));
  });
  return Polygon({a, b});
}

Polygon simple_chain(std::size_t n, double radius) {
  // The middle stadium has half-length `radius` straight runs along x.
  auto stadium = [&](double t) {
    const double straight = radius;
    const double perimeter = 2.0 * std::numbers::pi * radius + 2.0 * straight;
    double s = t / kTwoPi * perimeter;
    const double half_arc = std::numbers::pi * radius;
    if (s < straight) return Vec3(-0.5 * straight + s, -radius, 0.0);
    s -= straight;
    if (s < half_arc) {
      const double a = -0.5 * std::numbers::pi + s / radius;
      return Vec3(0.5 * straight + radius * std::cos(a), radius * std::sin(a), 0.0);
    }
    s -= half_arc;
    if (s < straight) return Vec3(0.5 * straight - s, radius, 0.0);
    s -= straight;
    const double a = 0.5 * std::numbers::pi + s / radius;
    return Vec3(-0.5 * straight + radius * std::cos(a), radius * std::sin(a), 0.0);
  };
  const double reach = 0.5 * radius + radius;
  auto left = sample(n, [&](double t) {
    return Vec3(-reach + radius * std::cos(t), 0.0, radius * std::sin(t));
  });
  auto right = sample(n, [&](double t) {
    return Vec3(reach + radius * std::cos(t), 0.0, radius * std::sin(t));
  });
  return Polygon({left, sample(n, stadium), right});
}

Polygon torus_knot(int p, int q, std::size_t n, double big_r, double small_r) {
  return Polygon({sample(n, [&](double t) {
    const double r = big_r + small_r * std::cos(q * t);
    return Vec3(r * std::cos(p * t), r * std::sin(p * t), small_r * std::sin(q * t));
  })});
}

Polygon figure_eight(std::size_t n, double scale) {
  return Polygon({sample(n, [&](double t) {
    const double r = 2.0 + std::cos(2.0 * t);
    return Vec3(scale * r * std::cos(3.0 * t), scale * r * std::sin(3.0 * t), scale * std::sin(4.0 * t));
  })});
}

Polygon borromean_rings(std::size_t n, double scale) {
  const double a = 2.0 * scale;
  const double b = scale;
  auto r1 = sample(n, [&](double t) { return Vec3(a * std::cos(t), b * std::sin(t), 0.0); });
  auto r2 = sample(n, [&](double t) { return Vec3(0.0, a * std::cos(t), b * std::sin(t)); });
  auto r3 = sample(n, [&](double t) { return Vec3(b * std::sin(t), 0.0, a * std::cos(t)); });
  return Polygon({r1, r2, r3});
}

}  // namespace taut
