#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "isoflow/geometry.hpp"

namespace isoflow::detail {

// State layout: y[0..1] = position; dim 6 appends the variational matrix
// row-major.  rhs writes dy for the full state.
struct OdeSystem {
    int dim = 2;
    std::function<void(double u, const double* y, double* dy)> rhs;
    // divergence of the field along the trajectory; bounds the determinant
    // drift |div|*h per step when set (Hamiltonian monitoring)
    std::function<double(double u, const double* y)> div_rate;
};

struct OdeControls {
    double tol = 1e-10;
    const Box2* domain = nullptr;
    std::vector<std::pair<double, Vec2>>* trajectory = nullptr;
    // reported time = t_base + u * t_scale
    double t_base = 0;
    double t_scale = 1;
};

// integrates y from u0 to u1 in place (u1 < u0 allowed)
void dopri5(const OdeSystem& sys, double u0, double u1, double* y, const OdeControls& ctl);

} // namespace isoflow::detail
