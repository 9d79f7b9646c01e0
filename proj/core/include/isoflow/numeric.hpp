#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "isoflow/geometry.hpp"

namespace isoflow {

constexpr double pi = 3.14159265358979323846;
constexpr double two_pi = 2.0 * pi;

// wrap x into [0, period)
inline double wrap(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0) r += period;
    return r;
}

// signed wrap into [-period/2, period/2)
inline double wrap_signed(double x, double period) {
    return wrap(x + period / 2, period) - period / 2;
}

// ---- smooth step / bump machinery ------------------------------------

// quintic smoothstep: 0 -> 1 on [0,1], first and second derivative vanish
// at both ends (C^2 when used piecewise).
double smoothstep(double u);
double smoothstep_d(double u);   // derivative
double smoothstep_dd(double u);

// plateau bump: 1 for |y| <= p, 0 for |y| >= q, smoothstep ramp between.
double plateau(double y, double p, double q);
double plateau_d(double y, double p, double q);

// unit-mass bump supported on (a, b): integral over [a,b] equals 1.
double unit_bump(double y, double a, double b);

// ---- quadrature -------------------------------------------------------

// Gauss-Legendre nodes/weights on [-1,1]; cached per n.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_rule(int n);

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n);

// integral of f over [a,b] split into m panels of n-point Gauss
double gauss_integrate_panels(const std::function<double(double)>& f, double a, double b,
                              int n, int m);

// ---- FFT ---------------------------------------------------------------

// in-place radix-2 complex FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse);

// discrete Fourier transform of arbitrary length (direct evaluation);
// used only for modest input sizes.
std::vector<std::complex<double>> dft(std::span<const std::complex<double>> a);

inline bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }
std::size_t next_pow2(std::size_t n);

// ---- scalar root finding ----------------------------------------------

// bisection on [lo, hi]; f(lo), f(hi) must bracket a sign change.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              int max_iter, double tol);

// safeguarded Newton on a scalar function with derivative
double newton_1d(const std::function<std::pair<double, double>(double)>& f_df,
                 double x0, double lo, double hi, int max_iter, double tol);

// ---- low-discrepancy sequence ------------------------------------------

double halton(std::uint64_t index, std::uint32_t base);

// Halton (2,3) points inside a box, starting at a deterministic offset
// derived from the seed.
std::vector<Vec2> halton_points(std::size_t count, const Box2& box, std::uint64_t seed);

// ---- misc ---------------------------------------------------------------

// Hausdorff distance between two point clouds (symmetric, brute force with
// polyline-segment distance on the second argument).
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
double distance_to_polyline(Vec2 p, std::span<const Vec2> poly, bool closed);
double hausdorff_distance(std::span<const Vec2> a, std::span<const Vec2> b, bool closed);

// shoelace signed area of a closed polygon
double polygon_signed_area(std::span<const Vec2> poly);

} // namespace isoflow
