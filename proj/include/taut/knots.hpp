#pragma once

#include <cstddef>

#include "taut/geometry.hpp"

namespace taut {

/// Planar regular n-gon inscribed in a circle of `radius` around the origin.
Polygon regular_polygon(std::size_t n, double radius);

/// Two round components of `n` vertices each, linked once. The circles have
/// radius `radius` and each passes near the other's center.
Polygon hopf_link(std::size_t n, double radius);

/// Three-component chain: two round rings linked through a middle stadium.
/// `n` is the vertex count of each component.
Polygon simple_chain(std::size_t n, double radius);

/// (p, q) torus knot on a torus with radii R > r.
Polygon torus_knot(int p, int q, std::size_t n, double big_r, double small_r);

/// Figure-eight knot from a Lissajous-style parametrization, scaled by `scale`.
Polygon figure_eight(std::size_t n, double scale);

/// Borromean rings as three mutually orthogonal ellipses.
Polygon borromean_rings(std::size_t n, double scale);

}  // namespace taut
