#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "isoflow/geometry.hpp"
#include "isoflow/trig_series.hpp"

namespace isoflow {

// Orthonormal frame along the curve.  The normal is the left normal of the
// unit tangent, so (tangent, normal) is positively oriented and the normal
// points into the enclosed region for a counterclockwise embedded curve.
struct TubularFrame {
    Vec2 point;
    Vec2 tangent;  // unit
    Vec2 normal;   // unit, left of tangent
    double curvature = 0;  // signed: +1 for the unit circle traversed CCW
    double curvature_ds = 0; // derivative of curvature along arclength
};

// Closed self-transverse plane curve, arclength parametrized.
// Dual representation: trigonometric coefficients plus a dense sample table.
// Parameters live on the circle of circumference length().
class ImmersedCurve {
public:
    ImmersedCurve() = default;

    double length() const { return series_.period(); }
    int harmonics() const { return series_.harmonics(); }
    const TrigCurve& series() const { return series_; }
    const std::vector<Vec2>& samples() const { return samples_; }
    std::size_t sample_count() const { return samples_.size(); }

    Vec2 point(double s) const { return series_.eval(s); }
    Vec2 velocity(double s) const;
    void eval_all(double s, Vec2* p, Vec2* d1, Vec2* d2 = nullptr, Vec2* d3 = nullptr) const
        { series_.eval_all(s, p, d1, d2, d3); }

    TubularFrame frame(double s) const;

    // normal offset map Phi(s, t) = point(s) + t * normal(s);
    // throws OffsetTooLarge when |t| >= 1 / max |curvature|
    Vec2 tubular_point(double s, double t) const;

    double max_curvature() const { return max_curvature_; }
    double min_speed_residual() const { return speed_residual_; }
    Box2 bounding_box() const;
    double diameter() const;

    // wrap an arbitrary parameter into [0, length)
    double wrap_param(double s) const;

    friend ImmersedCurve detail_finish_load(TrigCurve raw);

private:
    TrigCurve series_;
    std::vector<Vec2> samples_;
    double max_curvature_ = 0;
    double speed_residual_ = 0; // max | |phi'| - 1 | on the probe grid
};

// internal: normalization + validation tail shared by the load entry points
ImmersedCurve detail_finish_load(TrigCurve raw);

// Build a curve from raw closed-polyline points (treated as uniformly spaced
// in parameter, closed implicitly) and reparametrize by arclength.
// Errors: NotClosed, NotRegular, NotTransverse, PreconditionFailure.
ImmersedCurve load_and_normalize(std::span<const Vec2> points);

// Same entry for a raw coefficient list (any smooth parametrization).
ImmersedCurve load_from_series(const TrigCurve& raw);

// Convenience constructors for common inputs.
ImmersedCurve make_circle(double radius, Vec2 center = {0, 0}, int samples = 512);
ImmersedCurve make_ellipse(double rx, double ry, Vec2 center = {0, 0});
// figure-eight with one transverse double point at the origin
ImmersedCurve make_figure_eight(double scale = 1.0);

// arclength of a sub-interval [s0, s1] (wrapping allowed, s1 > s0 traversal)
double arclength(const ImmersedCurve& c, double s0, double s1);

// Curve traced by s -> chart(s, g(s)) for a chart over this curve's
// parameter circle.  |g| must stay below width (GraphExitsTube otherwise).
using ChartFn = std::function<Vec2(double, double)>;
ImmersedCurve graph_curve(const ImmersedCurve& base, const ChartFn& chart, double width,
                          const std::function<double(double)>& g);

namespace detail {
// raw pairwise crossing candidates of the dense polyline, Newton-refined on
// the smooth representation; pairs are (s1, s2) with s1 < s2.
struct CrossingPair {
    double s1, s2;
    Vec2 location;
    double sin_angle; // |sin| of tangent crossing angle
};
std::vector<CrossingPair> refined_crossings(const ImmersedCurve& c);
// throws NotTransverse when any crossing angle falls below the floor
void check_transversality(const ImmersedCurve& c, double tau_min);
} // namespace detail

// transversality floor: minimal |sin| of a crossing angle
inline constexpr double tau_min = 1e-3;

} // namespace isoflow
