#pragma once

#include <utility>
#include <vector>

#include "isoflow/field.hpp"
#include "isoflow/geometry.hpp"

namespace isoflow {

struct IntegrateOptions {
    double tol = 1e-10;    // local error tolerance per step
    Box2 domain;           // invalid (default) box means the whole plane
    // accepted steps as (time, position), including both endpoints
    std::vector<std::pair<double, Vec2>>* trajectory = nullptr;
};

// adaptive order-5(4) Runge-Kutta flow of a time-dependent field.
// A start point outside the support disc never moves and returns at once.
Vec2 integrate(const VectorFieldT& v, Vec2 x0, double t0, double t1,
               const IntegrateOptions& opt = {});

// flow map and its spatial derivative, the variational equation integrated
// jointly with the position
std::pair<Vec2, Mat2> integrate_with_jacobian(const VectorFieldT& v, Vec2 x0, double t0,
                                              double t1, const IntegrateOptions& opt = {});

} // namespace isoflow
