#pragma once

#include <span>
#include <vector>

#include "isoflow/geometry.hpp"

namespace isoflow {

// Plane-valued trigonometric polynomial over a period L:
//   p(s) = c0 + sum_k [ a_k cos(k w s) + b_k sin(k w s) ],  w = 2 pi / L.
// Evaluation uses angle-addition recurrences, no per-harmonic trig calls.
class TrigCurve {
public:
    TrigCurve() = default;
    TrigCurve(Vec2 c0, std::vector<Vec2> a, std::vector<Vec2> b, double period);

    // trigonometric interpolation through uniformly spaced samples
    // (sample j at parameter j * period / N)
    static TrigCurve interpolate(std::span<const Vec2> samples, double period);

    Vec2 eval(double s) const;
    // derivatives up to order 3 in one pass; null pointers allowed
    void eval_all(double s, Vec2* p0, Vec2* p1 = nullptr, Vec2* p2 = nullptr,
                  Vec2* p3 = nullptr) const;

    double period() const { return period_; }
    int harmonics() const { return int(a_.size()); }
    Vec2 constant() const { return c0_; }
    const std::vector<Vec2>& cos_coeffs() const { return a_; }
    const std::vector<Vec2>& sin_coeffs() const { return b_; }

    // drop trailing harmonics below eps * (largest coefficient magnitude)
    void truncate(double eps_rel);

    double max_coeff() const;

private:
    Vec2 c0_{};
    std::vector<Vec2> a_, b_;
    double period_ = two_pi_();

    static constexpr double two_pi_() { return 6.283185307179586476925286766559; }
};

// Spectral antiderivative of a smooth periodic scalar sampled uniformly:
//   F(u) with F' = f, F(0) = 0, F(u) = mean * u + periodic part.
class PeriodicAntiderivative {
public:
    PeriodicAntiderivative() = default;
    // samples of f at u_j = j * period / N, N a power of two
    PeriodicAntiderivative(std::span<const double> samples, double period);

    double eval(double u) const;
    double mean() const { return mean_; }
    double total() const { return mean_ * period_; }

private:
    double mean_ = 0, period_ = 1;
    std::vector<double> ac_, as_; // antiderivative cos/sin coefficients
};

} // namespace isoflow
