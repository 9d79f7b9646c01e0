#include "isoflow/field.hpp"

#include <algorithm>
#include <cmath>

#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

// five-point central stencil, O(h^4); h balances truncation and rounding
double fd_step(Vec2 x) { return 1e-3 * std::max(1.0, std::max(std::abs(x.x), std::abs(x.y))); }

double stencil(const std::function<double(double)>& f, double h) {
    return (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h);
}

} // namespace

SupportDisc support_hull(const SupportDisc& a, const SupportDisc& b) {
    if (!a.bounded() || !b.bounded()) return {};
    Vec2 d = b.center - a.center;
    double sep = d.norm();
    if (sep + b.radius <= a.radius) return a;
    if (sep + a.radius <= b.radius) return b;
    double r = (sep + a.radius + b.radius) / 2;
    Vec2 c = a.center + d * ((r - a.radius) / sep);
    return {c, r};
}

Vec2 fd_gradient(const std::function<double(Vec2, double)>& f, Vec2 x, double t) {
    double h = fd_step(x);
    return {stencil([&](double e) { return f({x.x + e, x.y}, t); }, h),
            stencil([&](double e) { return f({x.x, x.y + e}, t); }, h)};
}

Mat2 fd_jacobian(const std::function<Vec2(Vec2, double)>& f, Vec2 x, double t) {
    double h = fd_step(x);
    Vec2 dx = {stencil([&](double e) { return f({x.x + e, x.y}, t).x; }, h),
               stencil([&](double e) { return f({x.x + e, x.y}, t).y; }, h)};
    Vec2 dy = {stencil([&](double e) { return f({x.x, x.y + e}, t).x; }, h),
               stencil([&](double e) { return f({x.x, x.y + e}, t).y; }, h)};
    return {dx.x, dy.x, dx.y, dy.y};
}

Vec2 ScalarField::gradient(Vec2 x, double t) const {
    if (!value_ || !support_.contains(x)) return {0, 0};
    if (gradient_) return gradient_(x, t);
    return fd_gradient([this](Vec2 p, double u) { return (*this)(p, u); }, x, t);
}

Mat2 VectorFieldT::jacobian(Vec2 x, double t) const {
    if (!eval_) return {0, 0, 0, 0};
    if (jac_) return support_.contains(x) ? jac_(x, t) : Mat2{0, 0, 0, 0};
    if (!support_.contains(x, 4 * fd_step(x))) return {0, 0, 0, 0}; // stencil sees only zeros
    return fd_jacobian([this](Vec2 p, double u) { return (*this)(p, u); }, x, t);
}

double VectorFieldT::lipschitz_estimate() const {
    if (!eval_) return 0;
    Box2 box;
    if (support_.bounded()) {
        box.expand(support_.center - Vec2{support_.radius, support_.radius});
        box.expand(support_.center + Vec2{support_.radius, support_.radius});
    } else {
        box.expand({-1, -1});
        box.expand({1, 1});
    }
    double worst = 0;
    for (const Vec2& p : halton_points(25, box, 0))
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            Mat2 j = jacobian(p, t);
            worst = std::max(worst, std::sqrt(j.a * j.a + j.b * j.b + j.c * j.c + j.d * j.d));
        }
    return worst;
}

VectorFieldT hamiltonian_field(const ScalarField& H) {
    if (H.zero()) return {};
    ScalarField h = H;
    auto eval = [h](Vec2 x, double t) { return h.gradient(x, t).perp(); };
    // The integrator audits the numerical divergence of Hamiltonian fields
    // and shrinks its steps when drift shows up, so the stencil here must be
    // much finer than the field's own feature scale or audit noise throttles
    // the flow.  Gradients on this path are analytic, which leaves plenty of
    // room above rounding.
    auto jac = [h](Vec2 x, double t) {
        double e = 1e-5 * std::max(1.0, std::max(std::abs(x.x), std::abs(x.y)));
        auto g = [&](double px, double py) { return h.gradient({px, py}, t).perp(); };
        Vec2 dx = (8 * (g(x.x + e, x.y) - g(x.x - e, x.y)) -
                   (g(x.x + 2 * e, x.y) - g(x.x - 2 * e, x.y))) * (1.0 / (12 * e));
        Vec2 dy = (8 * (g(x.x, x.y + e) - g(x.x, x.y - e)) -
                   (g(x.x, x.y + 2 * e) - g(x.x, x.y - 2 * e))) * (1.0 / (12 * e));
        return Mat2{dx.x, dy.x, dx.y, dy.y};
    };
    return {std::move(eval), std::move(jac), H.support(), true};
}

} // namespace isoflow
