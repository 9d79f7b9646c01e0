#pragma once

#include <functional>

#include "isoflow/geometry.hpp"

namespace isoflow {

// Closed disc outside which a function or field is identically zero.
// A negative radius means "no bound" (whole plane).
struct SupportDisc {
    Vec2 center{0, 0};
    double radius = -1;

    bool bounded() const { return radius >= 0; }
    bool contains(Vec2 p, double pad = 0) const {
        return !bounded() || dist(p, center) <= radius + pad;
    }
};

// smallest disc containing both (an unbounded input wins)
SupportDisc support_hull(const SupportDisc& a, const SupportDisc& b);

Vec2 fd_gradient(const std::function<double(Vec2, double)>& f, Vec2 x, double t);
Mat2 fd_jacobian(const std::function<Vec2(Vec2, double)>& f, Vec2 x, double t);

// time-dependent scalar function with compact support
class ScalarField {
public:
    using Value = std::function<double(Vec2, double)>;
    using Gradient = std::function<Vec2(Vec2, double)>;

    ScalarField() = default; // identically zero
    ScalarField(Value v, Gradient g, SupportDisc s)
        : value_(std::move(v)), gradient_(std::move(g)), support_(s) {}
    // gradient by finite differences of the evaluator
    ScalarField(Value v, SupportDisc s) : value_(std::move(v)), support_(s) {}

    double operator()(Vec2 x, double t) const {
        if (!value_ || !support_.contains(x)) return 0;
        return value_(x, t);
    }
    Vec2 gradient(Vec2 x, double t) const;
    const SupportDisc& support() const { return support_; }
    bool zero() const { return !value_; }

private:
    Value value_;
    Gradient gradient_;
    SupportDisc support_;
};

// time-dependent plane vector field; evaluation outside the support disc
// returns zero without touching the evaluator
class VectorFieldT {
public:
    using Eval = std::function<Vec2(Vec2, double)>;
    using Jac = std::function<Mat2(Vec2, double)>;

    VectorFieldT() = default; // identically zero
    VectorFieldT(Eval f, SupportDisc s, bool hamiltonian = false)
        : eval_(std::move(f)), support_(s), hamiltonian_(hamiltonian) {}
    VectorFieldT(Eval f, Jac j, SupportDisc s, bool hamiltonian = false)
        : eval_(std::move(f)), jac_(std::move(j)), support_(s), hamiltonian_(hamiltonian) {}

    Vec2 operator()(Vec2 x, double t) const {
        if (!eval_ || !support_.contains(x)) return {0, 0};
        return eval_(x, t);
    }
    Mat2 jacobian(Vec2 x, double t) const;
    bool hamiltonian() const { return hamiltonian_; }
    const SupportDisc& support() const { return support_; }
    bool zero() const { return !eval_; }

    // max Frobenius norm of the Jacobian over deterministic probe points
    double lipschitz_estimate() const;

private:
    Eval eval_;
    Jac jac_;
    SupportDisc support_;
    bool hamiltonian_ = false;
};

// X_H = (-dH/dy, dH/dx); divergence-free, tangent to level sets of H.
// With this sign the time-1 flow of the tube-coordinate Hamiltonian built
// from -G(s) rho(t) carries the graph of g = G' to the zero section.
VectorFieldT hamiltonian_field(const ScalarField& H);

} // namespace isoflow
