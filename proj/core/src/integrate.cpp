#include "isoflow/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "isoflow/errors.hpp"
#include "ode_impl.hpp"

namespace isoflow {
namespace detail {

namespace {

// Dormand-Prince 5(4) coefficients
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

constexpr double drift_budget = 1e-9; // |div| * h cap on Hamiltonian segments
constexpr int max_dim = 6;

} // namespace

void dopri5(const OdeSystem& sys, double u0, double u1, double* y, const OdeControls& ctl) {
    const int n = sys.dim;
    require(n >= 2 && n <= max_dim, Errc::internal_error, "unsupported ode dimension");
    const double span = u1 - u0;
    if (span == 0) return;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double h_min = std::abs(span) * 1e-14;

    double k1[max_dim], k2[max_dim], k3[max_dim], k4[max_dim], k5[max_dim], k6[max_dim],
        k7[max_dim], ytmp[max_dim], ynew[max_dim];

    double u = u0;
    double h = dir * std::abs(span) / 50;
    sys.rhs(u, y, k1);
    if (ctl.trajectory)
        ctl.trajectory->push_back({ctl.t_base + u * ctl.t_scale, Vec2{y[0], y[1]}});

    long steps = 0;
    int rejects_in_a_row = 0;
    while (dir * (u1 - u) > h_min) {
        require(++steps < 20'000'000, Errc::step_failure, "step budget exhausted");
        if (dir * (u + h - u1) > 0) h = u1 - u;

        if (sys.div_rate) {
            double div = std::abs(sys.div_rate(u, y));
            if (div * std::abs(h) > drift_budget) h = dir * drift_budget / div;
        }
        require(std::abs(h) >= h_min, Errc::step_failure, "step size underflow");

        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        sys.rhs(u + c2 * h, ytmp, k2);
        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        sys.rhs(u + c3 * h, ytmp, k3);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        sys.rhs(u + c4 * h, ytmp, k4);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        sys.rhs(u + c5 * h, ytmp, k5);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        sys.rhs(u + h, ytmp, k6);
        for (int i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        sys.rhs(u + h, ynew, k7);

        double err = 0;
        for (int i = 0; i < n; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
            double scale = ctl.tol + ctl.tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / scale);
        }

        if (err <= 1.0) {
            u += h;
            for (int i = 0; i < n; ++i) y[i] = ynew[i];
            for (int i = 0; i < n; ++i) k1[i] = k7[i]; // first-same-as-last
            rejects_in_a_row = 0;
            if (ctl.domain)
                require(ctl.domain->contains({y[0], y[1]}), Errc::left_domain,
                        "trajectory left the configured box");
            if (ctl.trajectory)
                ctl.trajectory->push_back({ctl.t_base + u * ctl.t_scale, Vec2{y[0], y[1]}});
        } else {
            require(++rejects_in_a_row < 80, Errc::step_failure,
                    "local tolerance unreachable");
        }
        double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
    }
}

} // namespace detail

namespace {

detail::OdeSystem position_system(const VectorFieldT& v) {
    detail::OdeSystem sys;
    sys.dim = 2;
    sys.rhs = [&v](double t, const double* y, double* dy) {
        Vec2 f = v({y[0], y[1]}, t);
        dy[0] = f.x;
        dy[1] = f.y;
    };
    if (v.hamiltonian())
        sys.div_rate = [&v](double t, const double* y) {
            return v.jacobian({y[0], y[1]}, t).trace();
        };
    return sys;
}

detail::OdeSystem variational_system(const VectorFieldT& v) {
    detail::OdeSystem sys = position_system(v);
    sys.dim = 6;
    sys.rhs = [&v](double t, const double* y, double* dy) {
        Vec2 x{y[0], y[1]};
        Vec2 f = v(x, t);
        Mat2 a = v.jacobian(x, t);
        dy[0] = f.x;
        dy[1] = f.y;
        // dJ/dt = A J, J stored row-major in y[2..5]
        dy[2] = a.a * y[2] + a.b * y[4];
        dy[3] = a.a * y[3] + a.b * y[5];
        dy[4] = a.c * y[2] + a.d * y[4];
        dy[5] = a.c * y[3] + a.d * y[5];
    };
    return sys;
}

detail::OdeControls controls_for(const IntegrateOptions& opt) {
    detail::OdeControls ctl;
    ctl.tol = opt.tol;
    ctl.domain = opt.domain.valid() ? &opt.domain : nullptr;
    ctl.trajectory = opt.trajectory;
    return ctl;
}

} // namespace

Vec2 integrate(const VectorFieldT& v, Vec2 x0, double t0, double t1,
               const IntegrateOptions& opt) {
    if (t0 == t1 || v.zero()) return x0;
    if (v.support().bounded() && !v.support().contains(x0)) return x0; // never moves
    detail::OdeSystem sys = position_system(v);
    detail::OdeControls ctl = controls_for(opt);
    double y[2] = {x0.x, x0.y};
    detail::dopri5(sys, t0, t1, y, ctl);
    return {y[0], y[1]};
}

std::pair<Vec2, Mat2> integrate_with_jacobian(const VectorFieldT& v, Vec2 x0, double t0,
                                              double t1, const IntegrateOptions& opt) {
    if (t0 == t1 || v.zero()) return {x0, Mat2::identity()};
    if (v.support().bounded() && !v.support().contains(x0)) return {x0, Mat2::identity()};
    detail::OdeSystem sys = variational_system(v);
    detail::OdeControls ctl = controls_for(opt);
    double y[6] = {x0.x, x0.y, 1, 0, 0, 1};
    detail::dopri5(sys, t0, t1, y, ctl);
    return {Vec2{y[0], y[1]}, Mat2{y[2], y[3], y[4], y[5]}};
}

} // namespace isoflow
