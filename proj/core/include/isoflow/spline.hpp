#pragma once

#include <vector>

namespace isoflow {

// Cubic spline interpolation over strictly increasing knots.
// Boundary handling: natural (zero second derivative), clamped (given first
// derivatives) or periodic (value/slope/curvature wrap; last value must
// repeat the first).
class CubicSpline {
public:
    enum class BC { natural, clamped, periodic };

    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y, BC bc = BC::natural,
                double d_left = 0, double d_right = 0);

    double operator()(double t) const { return eval(t); }
    double eval(double t) const;
    double deriv(double t) const;
    double deriv2(double t) const;

    bool empty() const { return x_.empty(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    BC bc() const { return bc_; }
    double clamp_left() const { return dl_; }
    double clamp_right() const { return dr_; }

private:
    int find_interval(double t) const;

    std::vector<double> x_, y_, m_; // m_: second derivatives at knots
    BC bc_ = BC::natural;
    double dl_ = 0, dr_ = 0;
};

// Piecewise-quintic Hermite interpolation on a uniform grid: values plus
// first/second derivatives at the knots (estimated by finite differences
// when not supplied) give a C^2 curve whose pieces are degree-5 polynomials.
class QuinticSpline {
public:
    QuinticSpline() = default;

    // derivatives estimated from the samples; ends clamped to the supplied
    // first/second derivatives (default zero, the natural choice for
    // time-profiles that must splice smoothly into neighbouring stages).
    static QuinticSpline fit(double t0, double t1, const std::vector<double>& values,
                             bool clamp_ends_to_zero = true);

    // explicit nodal data
    QuinticSpline(double t0, double t1, std::vector<double> y, std::vector<double> dy,
                  std::vector<double> ddy);

    double eval(double t) const;
    double deriv(double t) const;

    double t0() const { return t0_; }
    double t1() const { return t1_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& derivs() const { return dy_; }
    const std::vector<double>& derivs2() const { return ddy_; }
    bool empty() const { return y_.empty(); }

private:
    double t0_ = 0, t1_ = 1;
    std::vector<double> y_, dy_, ddy_;
};

} // namespace isoflow
