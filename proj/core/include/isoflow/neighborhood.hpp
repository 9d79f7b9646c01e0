#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "isoflow/arrangement.hpp"
#include "isoflow/curve.hpp"
#include "isoflow/field.hpp"
#include "isoflow/isotopy.hpp"
#include "isoflow/projector.hpp"
#include "isoflow/spline.hpp"

namespace isoflow {

// Area-true collar coordinates around an immersed curve.  The normal-ray map
// phi(s) + T n(s) scales area by (1 - T kappa); walking each fiber with the
// reparametrized offset T(s, t) solving t = T - T^2 kappa(s) / 2 cancels the
// distortion, so a parameter strip of height t maps to area t per unit of
// arclength.  T is the quadratic root continuous at zero, defined while
// 2 kappa t < 1.
class TubularChart {
public:
    TubularChart() = default;

    const ImmersedCurve& base() const { return *base_; }
    double width() const { return eps_; }  // admissible |t|

    // fiber normalization; raw_offset(s, 0) == 0 exactly
    double raw_offset(double s, double t) const;
    double true_offset(double s, double T) const;

    Vec2 map(double s, double t) const;
    Mat2 jacobian(double s, double t) const;  // d(map), unit determinant

    struct Sheet {
        double s, t;
    };
    // every preimage of p with |t| <= band (default: the chart width)
    std::vector<Sheet> preimages(Vec2 p, double band = -1) const;
    // the preimage whose foot parameter is nearest to s_near, if any
    std::optional<Sheet> sheet_near(Vec2 p, double s_near, double band = -1) const;

    const CurveProjector& projector() const { return *proj_; }
    bool empty() const { return !base_; }

private:
    friend TubularChart tubular_normalize(const ImmersedCurve& curve, double eps);
    std::shared_ptr<const ImmersedCurve> base_;
    std::shared_ptr<const CurveProjector> proj_;
    double eps_ = 0;
};

// Errors: WidthTooLarge unless eps * max|kappa| < 0.5 (that bound keeps the
// raw offsets short of the focal distance on the whole band).
TubularChart tubular_normalize(const ImmersedCurve& curve, double eps);

// Shear-normalized square around one double point.  In collar coordinates
// centered on the first branch the second branch is a graph s = b(t) over
// the t-axis; the shear (s, t) -> (mu, eta) = (s - b(t), t) preserves area
// and puts both branches on the coordinate axes.
class DoublePointChart {
public:
    int dp_index() const { return index_; }
    Vec2 location() const { return loc_; }
    double branch_a() const { return sa_; }  // foot parameter of the axis branch
    double branch_b() const { return sb_; }
    double crossing_angle() const { return angle_; }

    double s_half() const { return s1_; }  // collar rectangle half-sizes
    double t_half() const { return t1_; }
    double mu_half() const { return ms_; }  // sheared inner rectangle
    double eta_half() const { return mt_; }
    // square centered at the double point on which local Hamiltonians live
    double sigma() const { return 0.9 * std::min(ms_, mt_); }
    // arclength extent of the second branch inside the rectangle
    double branch_window() const { return wb_; }

    double branch_graph(double t) const;
    double branch_graph_d(double t) const;
    const CubicSpline& branch_graph_spline() const { return b_; }

    // plane -> (mu, eta); empty when p has no collar sheet near branch_a()
    // or falls outside the rectangle
    std::optional<Vec2> to_chart(Vec2 p) const;
    Vec2 from_chart(Vec2 me) const;
    Mat2 jacobian(Vec2 me) const;  // d(plane)/d(mu, eta), unit determinant
    // disc around the mapped sigma-square; fields built on this chart
    // vanish outside it
    SupportDisc bounding_disc() const { return disc_; }
    const TubularChart& collar() const { return chart_; }

private:
    friend struct ChartBuilder;
    TubularChart chart_;
    CubicSpline b_;
    int index_ = -1;
    Vec2 loc_{};
    double sa_ = 0, sb_ = 0;
    double s1_ = 0, t1_ = 0, ms_ = 0, mt_ = 0;
    double angle_ = 0, wb_ = 0, sup_b_ = 0;
    SupportDisc disc_{};
};

// Collar plus one shear chart per double point.  The chart squares sit in
// pairwise disjoint balls of radius nu around the double points, and the
// collar is injective outside the crossing zones.
struct RegularNeighborhood {
    Arrangement arrangement;
    TubularChart chart;
    std::vector<DoublePointChart> charts;  // aligned with arrangement.double_points
    double nu = 0;                         // double-point separation radius
};

// Errors: TubeDegenerate when no admissible width survives above the floor
// 1e-4; everything from build_arrangement.
RegularNeighborhood build_regular_neighborhood(const ImmersedCurve& curve);

// How a nearby curve sits over one double-point chart: both of its branches
// as graphs over the chart axes.
struct BranchCloseness {
    CubicSpline over_mu;   // eta as a function of mu (first branch)
    CubicSpline over_eta;  // mu as a function of eta (second branch)
    double mu_range = 0, eta_range = 0;  // traced half-ranges
    double sup_mu = 0, slope_mu = 0;
    double sup_eta = 0, slope_eta = 0;
    Vec2 dp_chart{};  // the nearby curve's double point in (mu, eta)
};

// Proof that a curve is delta-close to the base of a regular neighborhood:
// a graph over the whole parameter circle, branch graphs over both chart
// axes at every double point, all values and slopes below delta, and every
// double point trapped in the delta-square of its chart.
struct ClosenessCertificate {
    double delta = 0;
    CubicSpline graph;  // periodic, uniform knots on [0, length]
    double sup_value = 0, sup_slope = 0;
    std::vector<BranchCloseness> branches;
};

// Check order: collar trace (NotAGraph when the curve leaves the band or
// folds over the base), then per double point: the companion double point
// inside the delta-square (DoublePointEscaped), branch graphs spanning the
// chart with values below delta (NotAGraph), branch slopes (SlopeTooLarge);
// finally the global value and slope bounds.
ClosenessCertificate is_delta_close(const ImmersedCurve& other, const RegularNeighborhood& rn,
                                    double delta);

// Two Hamiltonian stages supported in the chart's sigma-square that align
// both branches of `other` with the chart axes near the double point.  The
// first stage drops the first branch onto the mu-axis wherever the traced
// graph is covered by the stage plateau; the second straightens the pushed
// image of the other branch onto the eta-axis the same way.  Numerical post
// checks replace the closed-form derivative estimates: axis coincidence
// near the origin, support confinement, and graph-ness of the image
// (GraphnessLost on failure -- retry with a smaller delta upstream).
Isotopy straighten_double_point(const ImmersedCurve& other, const DoublePointChart& chart,
                                const ClosenessCertificate& cert);

// Flatten a curve that is a collar graph and already coincides with the
// base near every double point.  One Hamiltonian flow in collar coordinates
// carries the graph to the base; at each double point the accumulated fiber
// areas reaching the two visits must agree (NotWellDefined otherwise, the
// equal-disk-area hypothesis in quantitative form).
Isotopy graph_flatten(const ImmersedCurve& other, const RegularNeighborhood& rn,
                      const ClosenessCertificate& cert);

// The full local move: straighten every double point, then flatten the
// remaining graph.  Takes `from` to `to` (the base of rn); the composed
// isotopy is area-preserving and its time-1 image of `from` must land on
// `to` within 1e-6 of the diameter.
Isotopy local_step(const ImmersedCurve& from, const ImmersedCurve& to,
                   const RegularNeighborhood& rn, double delta);

namespace detail {
// flatten driver shared by graph_flatten and local_step: g is periodic with
// uniform knots on [0, L]
Isotopy flatten_graph(const RegularNeighborhood& rn, const CubicSpline& g, double sup_g);
} // namespace detail

} // namespace isoflow
