#pragma once

// Independent cross-checks used by the test suites.  Everything here is
// deliberately dumb and slow: plain finite differences and quadratic-time
// polyline scans, so library results are confirmed by a separate route.

#include <cstddef>
#include <span>
#include <vector>

#include "isoflow/curve.hpp"
#include "isoflow/geometry.hpp"

namespace oracles {

using isoflow::Vec2;

struct BruteCrossing {
    std::size_t i, j; // segment indices, i < j
    Vec2 where;
};

// all-pairs proper-intersection scan over a closed polyline
std::vector<BruteCrossing> brute_self_intersections(std::span<const Vec2> poly);

// same result through a segment grid; bearable on 10^5+ segments
std::vector<BruteCrossing> grid_self_intersections(std::span<const Vec2> poly);

// shoelace signed area of a closed polygon
double shoelace(std::span<const Vec2> poly);

// curvature at every sample of a uniformly spaced closed polyline,
// Richardson-extrapolated central differences (O(h^4))
std::vector<double> fd_curvature(std::span<const Vec2> samples, double h);

// uniform arclength polyline of a curve
std::vector<Vec2> sample_polyline(const isoflow::ImmersedCurve& c, std::size_t n);

// central-difference derivative of a scalar callable, Richardson O(h^4)
double fd_derivative(const std::function<double(double)>& f, double x, double h);

// 2-D central-difference gradient of a scalar field
Vec2 fd_gradient(const std::function<double(Vec2)>& f, Vec2 p, double h);

} // namespace oracles
