#include "isoflow/spline.hpp"

#include <algorithm>
#include <cmath>

#include "isoflow/errors.hpp"

namespace isoflow {

// tridiagonal solve, diagonals (a: sub, b: main, c: super), in-place on d
static std::vector<double> solve_tridiag(std::vector<double> a, std::vector<double> b,
                                         std::vector<double> c, std::vector<double> d) {
    const int n = int(b.size());
    for (int i = 1; i < n; ++i) {
        double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y, BC bc,
                         double d_left, double d_right)
    : x_(std::move(x)), y_(std::move(y)), bc_(bc), dl_(d_left), dr_(d_right) {
    const int n = int(x_.size());
    require(n >= 2 && y_.size() == x_.size(), Errc::internal_error, "spline: bad sizes");
    for (int i = 1; i < n; ++i)
        require(x_[i] > x_[i - 1], Errc::internal_error, "spline: knots not increasing");

    m_.assign(n, 0.0);
    if (n == 2) {
        if (bc_ == BC::periodic)
            require(std::abs(y_.front() - y_.back()) < 1e-12, Errc::internal_error,
                    "periodic spline endpoint mismatch");
        return; // linear
    }

    auto h = [&](int i) { return x_[i + 1] - x_[i]; };
    auto slope = [&](int i) { return (y_[i + 1] - y_[i]) / h(i); };

    if (bc_ == BC::periodic) {
        require(std::abs(y_.front() - y_.back()) < 1e-9 * (1 + std::abs(y_.front())),
                Errc::internal_error, "periodic spline endpoint mismatch");
        // unknowns m_0..m_{n-2} cyclic; Sherman-Morrison on the cyclic system
        const int m = n - 1;
        if (m == 1) return;
        std::vector<double> a(m), b(m), c(m), d(m);
        for (int i = 0; i < m; ++i) {
            int im = (i - 1 + m) % m;
            double hi = h(i);
            double him = h(im);
            a[i] = him;
            b[i] = 2 * (him + hi);
            c[i] = hi;
            double sl = slope(i);
            double slm = (y_[(im + 1) % (n)] - y_[im]) / him;
            d[i] = 6 * (sl - slm);
        }
        // cyclic correction
        double alpha = a[0], beta = c[m - 1];
        std::vector<double> b2 = b;
        double gamma = -b[0];
        b2[0] -= gamma;
        b2[m - 1] -= alpha * beta / gamma;
        std::vector<double> a2 = a, c2 = c;
        a2[0] = 0;
        c2[m - 1] = 0;
        std::vector<double> u(m, 0.0);
        u[0] = gamma;
        u[m - 1] = beta;
        std::vector<double> sol1 = solve_tridiag(a2, b2, c2, d);
        std::vector<double> sol2 = solve_tridiag(a2, b2, c2, u);
        double fact = (sol1[0] + alpha * sol1[m - 1] / gamma) /
                      (1.0 + sol2[0] + alpha * sol2[m - 1] / gamma);
        for (int i = 0; i < m; ++i) m_[i] = sol1[i] - fact * sol2[i];
        m_[n - 1] = m_[0];
        return;
    }

    std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
    if (bc_ == BC::natural) {
        b[0] = 1;
        d[0] = 0;
        b[n - 1] = 1;
        d[n - 1] = 0;
    } else { // clamped
        b[0] = 2 * h(0);
        c[0] = h(0);
        d[0] = 6 * (slope(0) - dl_);
        a[n - 1] = h(n - 2);
        b[n - 1] = 2 * h(n - 2);
        d[n - 1] = 6 * (dr_ - slope(n - 2));
    }
    for (int i = 1; i < n - 1; ++i) {
        a[i] = h(i - 1);
        b[i] = 2 * (h(i - 1) + h(i));
        c[i] = h(i);
        d[i] = 6 * (slope(i) - slope(i - 1));
    }
    m_ = solve_tridiag(a, b, c, d);
}

int CubicSpline::find_interval(double t) const {
    int n = int(x_.size());
    if (t <= x_[0]) return 0;
    if (t >= x_[n - 1]) return n - 2;
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (x_[mid] <= t) lo = mid; else hi = mid;
    }
    return lo;
}

double CubicSpline::eval(double t) const {
    int i = find_interval(t);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::deriv(double t) const {
    int i = find_interval(t);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3 * B * B - 1) * m_[i + 1] - (3 * A * A - 1) * m_[i]) * h / 6.0;
}

double CubicSpline::deriv2(double t) const {
    int i = find_interval(t);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return A * m_[i] + B * m_[i + 1];
}

// ---- quintic -------------------------------------------------------------

QuinticSpline::QuinticSpline(double t0, double t1, std::vector<double> y,
                             std::vector<double> dy, std::vector<double> ddy)
    : t0_(t0), t1_(t1), y_(std::move(y)), dy_(std::move(dy)), ddy_(std::move(ddy)) {
    require(y_.size() >= 2 && dy_.size() == y_.size() && ddy_.size() == y_.size(),
            Errc::internal_error, "quintic spline: bad sizes");
}

QuinticSpline QuinticSpline::fit(double t0, double t1, const std::vector<double>& values,
                                 bool clamp_ends_to_zero) {
    const int n = int(values.size());
    require(n >= 2, Errc::internal_error, "quintic fit needs >= 2 samples");
    double h = (t1 - t0) / (n - 1);
    std::vector<double> dy(n), ddy(n);
    auto v = [&](int i) { return values[std::clamp(i, 0, n - 1)]; };
    for (int i = 0; i < n; ++i) {
        if (i >= 2 && i <= n - 3) {
            dy[i] = (-v(i + 2) + 8 * v(i + 1) - 8 * v(i - 1) + v(i - 2)) / (12 * h);
            ddy[i] = (-v(i + 2) + 16 * v(i + 1) - 30 * v(i) + 16 * v(i - 1) - v(i - 2)) /
                     (12 * h * h);
        } else if (i >= 1 && i <= n - 2) {
            dy[i] = (v(i + 1) - v(i - 1)) / (2 * h);
            ddy[i] = (v(i + 1) - 2 * v(i) + v(i - 1)) / (h * h);
        } else {
            dy[i] = i == 0 ? (v(1) - v(0)) / h : (v(n - 1) - v(n - 2)) / h;
            ddy[i] = 0;
        }
    }
    if (clamp_ends_to_zero) {
        dy.front() = dy.back() = 0;
        ddy.front() = ddy.back() = 0;
    }
    return QuinticSpline(t0, t1, values, std::move(dy), std::move(ddy));
}

// quintic Hermite basis on [0,1]
static void quintic_basis(double u, double B[6]) {
    double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    B[0] = 1 - 10 * u3 + 15 * u4 - 6 * u5;            // value left
    B[1] = u - 6 * u3 + 8 * u4 - 3 * u5;              // d1 left
    B[2] = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5; // d2 left
    B[3] = 10 * u3 - 15 * u4 + 6 * u5;                // value right
    B[4] = -4 * u3 + 7 * u4 - 3 * u5;                 // d1 right
    B[5] = 0.5 * u3 - u4 + 0.5 * u5;                  // d2 right
}

static void quintic_basis_d(double u, double B[6]) {
    double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
    B[0] = -30 * u2 + 60 * u3 - 30 * u4;
    B[1] = 1 - 18 * u2 + 32 * u3 - 15 * u4;
    B[2] = u - 4.5 * u2 + 6 * u3 - 2.5 * u4;
    B[3] = 30 * u2 - 60 * u3 + 30 * u4;
    B[4] = -12 * u2 + 28 * u3 - 15 * u4;
    B[5] = 1.5 * u2 - 4 * u3 + 2.5 * u4;
}

double QuinticSpline::eval(double t) const {
    const int n = int(y_.size());
    double h = (t1_ - t0_) / (n - 1);
    double s = std::clamp((t - t0_) / h, 0.0, double(n - 1) - 1e-12);
    int i = std::min(int(s), n - 2);
    double u = s - i;
    double B[6];
    quintic_basis(u, B);
    return B[0] * y_[i] + B[1] * h * dy_[i] + B[2] * h * h * ddy_[i] +
           B[3] * y_[i + 1] + B[4] * h * dy_[i + 1] + B[5] * h * h * ddy_[i + 1];
}

double QuinticSpline::deriv(double t) const {
    const int n = int(y_.size());
    double h = (t1_ - t0_) / (n - 1);
    double s = std::clamp((t - t0_) / h, 0.0, double(n - 1) - 1e-12);
    int i = std::min(int(s), n - 2);
    double u = s - i;
    double B[6];
    quintic_basis_d(u, B);
    return (B[0] * y_[i] + B[1] * h * dy_[i] + B[2] * h * h * ddy_[i] +
            B[3] * y_[i + 1] + B[4] * h * dy_[i + 1] + B[5] * h * h * ddy_[i + 1]) / h;
}

} // namespace isoflow
