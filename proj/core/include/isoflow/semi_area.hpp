#pragma once

#include <vector>

#include "isoflow/arrangement.hpp"
#include "isoflow/isotopy.hpp"
#include "isoflow/spline.hpp"

namespace isoflow {

// Schedule of the area-shrinking carrier: radial shrink of B_r, the input
// replayed at scale eps, radial enlarge back.  Everything stays inside
// B_{r+1} and every bounded-face area is strictly below its start value for
// all interior times.
struct ShrinkPlan {
    double r = 0;        // working radius; the carrier is radial outside B_r
    double r_prime = 0;  // outer normalization radius, r + 1
    double eps = 0;      // shrink factor in (0,1)
    double t_shrink = 0.25;
    double t_enlarge = 0.75;
    int knots = 0;       // time knots of the strict-decrease certificate
};

struct GammaResult {
    Isotopy gamma;
    ShrinkPlan plan;
};

// gamma_0 = id, gamma_1 agrees with the input time-one map on the curve, and
// area(gamma_t(D)) < area(D) for every bounded face D and every interior
// knot.  The input must preserve every face area at time one (1e-6
// relative).  Errors: PreconditionFailure, ShrinkFactorNotFound.
GammaResult build_gamma(const Isotopy& input, const Arrangement& arr);

// Time-dependent area form sum_i d(sigma_i(rho_i^2)/2 dtheta_i), one radial
// profile per bounded face in polar coordinates around the face's carried
// seed point.  Built so the weighted area of every pushed face equals the
// face's start area at every knot, the density is 1 on the slope annulus and
// far field, and the family is the standard form at both time endpoints.
class DensityFamily {
public:
    int n() const { return int(amp_.size()); }
    double r() const { return r_; }
    double r_prime() const { return rp_; }
    Vec2 seed(int i) const { return seeds_[std::size_t(i)]; }
    double face_area(int i) const { return area0_[std::size_t(i)]; }

    Vec2 center(int i, double t) const;
    Vec2 center_velocity(int i, double t) const;
    double inner_radius(int i, double t) const;
    double amplitude(int i, double t) const;

    // density f with omega_t = f dx ^ dy
    double density(Vec2 p, double t) const;
    // coefficients (M, N) of sum_i mu_t^i = M dx + N dy
    Vec2 mu_sum(Vec2 p, double t) const;
    // pointwise solution of iota_v(omega_t) + sum_i mu_t^i = 0
    Vec2 correction(Vec2 p, double t) const;

private:
    friend DensityFamily build_density_family(const Isotopy&, const Arrangement&,
                                              const ShrinkPlan&);
    double r_ = 0, rp_ = 0;
    std::vector<Vec2> seeds_;
    std::vector<double> area0_;
    std::vector<QuinticSpline> cx_, cy_, rad_, amp_;
};

// Amplitudes solved per face and knot so the weighted area matches; the
// slope taper lives on [r^2, r_prime^2] and bounds the feasible amplitude.
// Errors: BumpInfeasible.
DensityFamily build_density_family(const Isotopy& gamma, const Arrangement& arr,
                                   const ShrinkPlan& plan);

// psi_t with psi_t^*(dx ^ dy) = omega_t, the inverse of the flow of the
// correction field; psi_t . gamma_t then keeps every face area constant.
// psi_1 preserves the standard area form (checked at probe points).
Isotopy moser_correct(const DensityFamily& df);

// Full composite: the corrected carrier, a translation killing the time-one
// drift of the origin, the cone path from the corrected time-one map to its
// linearization at the origin, and a determinant-one linear path back to the
// identity.  Every bounded-face area of c_from is constant along the whole
// result and the final curve is c_to.
// Errors: LinearPartNotRotation plus everything from the stages.
Isotopy semi_area_isotopy(const ImmersedCurve& c_from, const ImmersedCurve& c_to,
                          const Isotopy& input);

} // namespace isoflow
