#include "isoflow/semi_area.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/integrate.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

// quintic smoothstep; C2 and flat at both ends, which is what lets the
// density family's time splines clamp to zero end derivatives
double q5(double v) {
    if (v <= 0) return 0;
    if (v >= 1) return 1;
    return v * v * v * (10 + v * (-15 + 6 * v));
}
double q5d(double v) {
    if (v <= 0 || v >= 1) return 0;
    double w = v * (1 - v);
    return 30 * w * w;
}

// face boundary resampled straight off the spectral curve, dense enough for
// shoelace work at the tolerances of this module
std::vector<Vec2> dense_face_polyline(const Arrangement& arr, const Face& face, int density) {
    const ImmersedCurve& c = arr.curve;
    double L = c.length();
    std::vector<Vec2> out;
    for (auto [k, dir] : face.boundary) {
        const Arc& a = arr.arcs[std::size_t(k)];
        double len = a.t1 - a.t0;
        int m = std::max(16, int(std::ceil(len / L * density)));
        for (int j = 0; j < m; ++j) {
            double f = double(j) / m;
            if (dir < 0) f = 1.0 - f;
            out.push_back(c.point(std::fmod(a.t0 + f * len, L)));
        }
    }
    return out;
}

std::vector<Vec2> push_polyline(const Isotopy& iso, const std::vector<Vec2>& poly, double t) {
    std::vector<Vec2> out(poly.size());
    for (std::size_t k = 0; k < poly.size(); ++k) out[k] = iso.apply(poly[k], 0, t);
    return out;
}

double loop_area(const std::vector<Vec2>& poly) {
    return std::abs(polygon_signed_area(poly));
}

// radial profile of the carrier: scale by s inside B_r, identity outside
// B_{r+1}, monotone bridge in between
double bridge(double rho, double s, double r) {
    return rho * (s + (1 - s) * q5(rho - r));
}
double bridge_drho(double rho, double s, double r) {
    double v = rho - r;
    return s + (1 - s) * (q5(v) + rho * q5d(v));
}

Vec2 radial_scale(Vec2 x, double s, double r) {
    double rho = x.norm();
    if (rho <= r) return x * s;
    if (rho >= r + 1) return x;
    return x * (bridge(rho, s, r) / rho);
}

Vec2 radial_scale_inv(Vec2 y, double s, double r) {
    double m = y.norm();
    if (m <= s * r) return y / s;
    if (m >= r + 1) return y;
    double lo = r, hi = r + 1;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (bridge(mid, s, r) < m ? lo : hi) = mid;
    }
    double rho = 0.5 * (lo + hi);
    return y * (rho / m);
}

Mat2 radial_scale_jac(Vec2 x, double s, double r) {
    double rho = x.norm();
    if (rho <= r) return {s, 0, 0, s};
    if (rho >= r + 1) return Mat2::identity();
    double b = bridge(rho, s, r), bd = bridge_drho(rho, s, r);
    Vec2 u = x / rho;
    double tang = b / rho;
    return Mat2{tang + (bd - tang) * u.x * u.x, (bd - tang) * u.x * u.y,
                (bd - tang) * u.x * u.y, tang + (bd - tang) * u.y * u.y};
}

// scale profile s0 -> s1 over local time, composed against the s0 state so
// the piece starts at the identity
class RadialScalePiece final : public FlowPiece {
public:
    RadialScalePiece(double r, double s0, double s1) : r_(r), s0_(s0), s1_(s1) {}

    std::string kind() const override { return "gamma"; }
    bool is_map() const override { return true; }
    SupportDisc support() const override { return {{0, 0}, r_ + 1}; }

    double scale_at(double u) const { return s0_ + (s1_ - s0_) * q5(u); }

    Vec2 map(Vec2 x, double u) const override {
        Vec2 z = s0_ == 1.0 ? x : radial_scale_inv(x, s0_, r_);
        return radial_scale(z, scale_at(u), r_);
    }
    Vec2 map_inverse(Vec2 y, double u) const override {
        Vec2 z = radial_scale_inv(y, scale_at(u), r_);
        return s0_ == 1.0 ? z : radial_scale(z, s0_, r_);
    }
    Mat2 map_jacobian(Vec2 x, double u) const override {
        Vec2 z = s0_ == 1.0 ? x : radial_scale_inv(x, s0_, r_);
        Mat2 j = radial_scale_jac(z, scale_at(u), r_);
        if (s0_ != 1.0) j = j * radial_scale_jac(z, s0_, r_).inverse();
        return j;
    }
    std::vector<std::pair<std::string, double>> params() const override {
        return {{"radius", r_}, {"scale_from", s0_}, {"scale_to", s1_}};
    }

private:
    double r_, s0_, s1_;
};

// the input replayed at scale eps: x -> eps * psi_{w(u)}(x / eps)
class ConjugatePiece final : public FlowPiece {
public:
    ConjugatePiece(Isotopy input, double eps) : input_(std::move(input)), eps_(eps) {}

    std::string kind() const override { return "gamma"; }
    bool is_map() const override { return true; }

    Vec2 map(Vec2 x, double u) const override {
        return input_.apply(x / eps_, 0, q5(u)) * eps_;
    }
    Vec2 map_inverse(Vec2 y, double u) const override {
        return input_.apply(y / eps_, q5(u), 0) * eps_;
    }
    Mat2 map_jacobian(Vec2 x, double u) const override {
        return input_.apply_with_jacobian(x / eps_, 0, q5(u)).second;
    }
    std::vector<std::pair<std::string, double>> params() const override {
        return {{"eps", eps_}};
    }

private:
    Isotopy input_;
    double eps_;
};

Isotopy assemble_gamma(const Isotopy& input, const ShrinkPlan& plan) {
    std::vector<Segment> segs;
    segs.push_back({0, plan.t_shrink, false,
                    std::make_shared<RadialScalePiece>(plan.r, 1.0, plan.eps)});
    segs.push_back({plan.t_shrink, plan.t_enlarge, false,
                    std::make_shared<ConjugatePiece>(input, plan.eps)});
    segs.push_back({plan.t_enlarge, 1, false,
                    std::make_shared<RadialScalePiece>(plan.r, plan.eps, 1.0)});
    return Isotopy(std::move(segs));
}

// ---- density family profile -------------------------------------------
//
// sigma(u) = u/n + a (S(u; R) - Q(u)) with S a smoothstep rising 0 -> 1 on
// [0, R] and Q the fixed taper rising 0 -> 1 on [rA, rB].  Between R and rA
// the slope is exactly 1/n and the offset is the constant a, so the form is
// the scaled standard one on the whole slope annulus; past rB it is the
// standard form with no offset.

struct ProfileTerms {
    double S, Sd;        // bump and its u-derivative
    double W, Wu, WR;    // S/u and its u- and R-derivatives
    double Q, Qd;
};

ProfileTerms profile_terms(double u, double R, double rA, double rB) {
    ProfileTerms p{};
    if (u < R) {
        double v = u / R;
        p.S = q5(v);
        p.Sd = q5d(v) / R;
        p.W = v * v * (10 + v * (-15 + 6 * v)) / R;
        p.Wu = v * (20 + v * (-45 + 24 * v)) / (R * R);
        p.WR = -q5d(v) / (R * R);
    } else {
        p.S = 1;
        p.Sd = 0;
        p.W = 1 / u;
        p.Wu = -1 / (u * u);
        p.WR = 0;
    }
    if (u > rA) {
        double w = (u - rA) / (rB - rA);
        p.Q = q5(w);
        p.Qd = q5d(w) / (rB - rA);
    }
    return p;
}

} // namespace

Vec2 DensityFamily::center(int i, double t) const {
    return {cx_[std::size_t(i)].eval(t), cy_[std::size_t(i)].eval(t)};
}
Vec2 DensityFamily::center_velocity(int i, double t) const {
    return {cx_[std::size_t(i)].deriv(t), cy_[std::size_t(i)].deriv(t)};
}
double DensityFamily::inner_radius(int i, double t) const {
    return rad_[std::size_t(i)].eval(t);
}
double DensityFamily::amplitude(int i, double t) const {
    return amp_[std::size_t(i)].eval(t);
}

double DensityFamily::density(Vec2 p, double t) const {
    double rA = r_ * r_, rB = rp_ * rp_;
    double f = 1;
    for (int i = 0; i < n(); ++i) {
        Vec2 xt = p - center(i, t);
        double ri = inner_radius(i, t);
        ProfileTerms pt = profile_terms(xt.norm2(), ri * ri, rA, rB);
        f += amplitude(i, t) * (pt.Sd - pt.Qd);
    }
    return f;
}

Vec2 DensityFamily::mu_sum(Vec2 p, double t) const {
    double rA = r_ * r_, rB = rp_ * rp_;
    double nn = double(n());
    double M = 0, N = 0;
    for (int i = 0; i < n(); ++i) {
        std::size_t k = std::size_t(i);
        Vec2 c{cx_[k].eval(t), cy_[k].eval(t)};
        Vec2 cdot{cx_[k].deriv(t), cy_[k].deriv(t)};
        double a = amp_[k].eval(t), adot = amp_[k].deriv(t);
        double ri = rad_[k].eval(t), ridot = rad_[k].deriv(t);
        double R = ri * ri, Rdot = 2 * ri * ridot;

        Vec2 xt = p - c;
        double u = xt.norm2();
        ProfileTerms pt = profile_terms(u, R, rA, rB);
        double Qfrac = u > 0 ? pt.Q / u : 0;
        double Qcurl = u > 0 ? (pt.Qd * u - pt.Q) / (u * u) : 0;

        double G = 1 / nn + a * (pt.W - Qfrac);
        double dtG = adot * (pt.W - Qfrac) + a * pt.WR * Rdot;
        double Gu = a * (pt.Wu - Qcurl);
        double udot = -2 * dot(xt, cdot);
        double E = dtG + Gu * udot;

        M += 0.5 * (-xt.y * E + G * cdot.y);
        N += 0.5 * (xt.x * E - G * cdot.x);
    }
    return {M, N};
}

Vec2 DensityFamily::correction(Vec2 p, double t) const {
    double f = density(p, t);
    Vec2 mn = mu_sum(p, t);
    return {-mn.y / f, mn.x / f};
}

GammaResult build_gamma(const Isotopy& input, const Arrangement& arr) {
    require(!arr.faces.empty(), Errc::precondition_failure, "curve bounds no face");
    const int density = 4096;
    std::vector<std::vector<Vec2>> polys;
    std::vector<double> area0;
    for (const Face& f : arr.faces) {
        polys.push_back(dense_face_polyline(arr, f, density));
        area0.push_back(loop_area(polys.back()));
    }

    // the construction only makes sense for inputs that restore every face
    // area at time one
    for (std::size_t i = 0; i < polys.size(); ++i) {
        double a1 = loop_area(push_polyline(input, polys[i], 1));
        require(std::abs(a1 - area0[i]) <= 1e-6 * area0[i], Errc::precondition_failure,
                "input does not preserve face areas at time one");
    }

    // reach of the curve under the input, over a knot grid; the working
    // radius keeps every pushed face point strictly inside the slope annulus
    // of every density summand
    const int in_knots = 21;
    double reach = 0;
    std::vector<double> area_max = area0;
    for (int k = 0; k < in_knots; ++k) {
        double u = double(k) / (in_knots - 1);
        for (std::size_t i = 0; i < polys.size(); ++i) {
            double a = 0;
            std::vector<Vec2> img = push_polyline(input, polys[i], u);
            a = loop_area(img);
            area_max[i] = std::max(area_max[i], a);
            for (Vec2 p : img) reach = std::max(reach, p.norm());
        }
    }
    double r_support = 0;
    if (input.support().bounded())
        r_support = input.support().center.norm() + input.support().radius;

    ShrinkPlan plan;
    plan.r = std::max(r_support, 2 * reach + 0.5);
    plan.r_prime = plan.r + 1;
    plan.knots = 41;

    double ratio = 1;
    for (std::size_t i = 0; i < polys.size(); ++i)
        ratio = std::min(ratio, area0[i] / area_max[i]);
    plan.eps = std::min(0.9, std::sqrt(0.8 * ratio));

    for (int tries = 0;; ++tries) {
        require(tries < 10, Errc::shrink_factor_not_found,
                "no shrink factor produced a strict area decrease");
        Isotopy gamma = assemble_gamma(input, plan);
        bool ok = true;
        for (int k = 1; k + 1 < plan.knots && ok; ++k) {
            double t = double(k) / (plan.knots - 1);
            for (std::size_t i = 0; i < polys.size() && ok; ++i) {
                double a = loop_area(push_polyline(gamma, polys[i], t));
                if (a >= area0[i] * (1 - 1e-9)) ok = false;
            }
        }
        if (ok) {
            // endpoint: the carrier hands the curve to the input's time-one
            // image exactly; anything else is a wiring bug
            double L = arr.curve.length();
            for (int k = 0; k < 256; ++k) {
                Vec2 p = arr.curve.point(L * k / 256);
                Vec2 g1 = gamma.apply(p, 0, 1);
                Vec2 f1 = input.apply(p, 0, 1);
                require(dist(g1, f1) <= 1e-7, Errc::internal_error,
                        "carrier endpoint differs from the input map");
            }
            return {std::move(gamma), plan};
        }
        plan.eps *= 0.5;
    }
}

DensityFamily build_density_family(const Isotopy& gamma, const Arrangement& arr,
                                   const ShrinkPlan& plan) {
    const int n = int(arr.faces.size());
    require(n >= 1, Errc::precondition_failure, "curve bounds no face");
    const int K = 64;

    DensityFamily df;
    df.r_ = plan.r;
    df.rp_ = plan.r_prime;

    const double rA = plan.r * plan.r;
    const double rB = plan.r_prime * plan.r_prime;
    // the taper costs slope a * maxQ' against the base 1/n; amplitudes past
    // that would push the density through zero
    const double max_qd = 1.875 / (rB - rA);
    const double a_hi = 0.999 / (double(n) * max_qd);

    std::vector<std::vector<Vec2>> polys;
    for (const Face& f : arr.faces) polys.push_back(dense_face_polyline(arr, f, 4096));

    // seed each face at its deepest interior point so the inner disk has
    // room; compass search from the arrangement's witness
    for (int i = 0; i < n; ++i) {
        const auto& poly = polys[std::size_t(i)];
        Vec2 best = arr.faces[std::size_t(i)].sample;
        double bestd = distance_to_polyline(best, poly, true);
        double step = 0.25 * std::sqrt(arr.faces[std::size_t(i)].area);
        while (step > 1e-9) {
            bool moved = false;
            for (Vec2 d : {Vec2{step, 0}, Vec2{-step, 0}, Vec2{0, step}, Vec2{0, -step}}) {
                Vec2 q = best + d;
                if (winding_number(poly, q) == 0) continue;
                double dd = distance_to_polyline(q, poly, true);
                if (dd > bestd) {
                    best = q;
                    bestd = dd;
                    moved = true;
                }
            }
            if (!moved) step *= 0.5;
        }
        df.seeds_.push_back(best);
        df.area0_.push_back(loop_area(poly));
    }

    std::vector<std::vector<double>> cxv(n), cyv(n), radv(n), ampv(n);
    for (int k = 0; k <= K; ++k) {
        double t = double(k) / K;
        for (int i = 0; i < n; ++i) {
            std::size_t ii = std::size_t(i);
            std::vector<Vec2> img = push_polyline(gamma, polys[ii], t);
            double area = loop_area(img);
            Vec2 c = gamma.apply(df.seeds_[ii], 0, t);
            require(winding_number(img, c) != 0, Errc::internal_error,
                    "carried seed left its face");
            double ri = 0.8 * distance_to_polyline(c, img, true);
            require(ri > 0, Errc::bump_infeasible, "face image leaves no inner disk");

            // weighted area of the pushed face as a boundary integral of
            // sigma(rho^2)/2 dtheta; the bump term is what the amplitude
            // scales, the 1/n term integrates to area/n
            double R = ri * ri;
            double J = 0;
            for (std::size_t s = 0; s < img.size(); ++s) {
                Vec2 p0 = img[s] - c, p1 = img[(s + 1) % img.size()] - c;
                Vec2 mid = (img[s] + img[(s + 1) % img.size()]) * 0.5 - c;
                ProfileTerms pt = profile_terms(mid.norm2(), R, rA, rB);
                double dth = wrap_signed(std::atan2(p1.y, p1.x) - std::atan2(p0.y, p0.x),
                                         2 * M_PI);
                J += 0.5 * (pt.S - pt.Q) * dth;
            }
            require(J > 0.1, Errc::internal_error, "bump integral degenerate");

            double target = df.area0_[ii] - (double(n) - 1) / double(n) * area;
            double base = area / double(n);
            require(base + a_hi * J >= target, Errc::bump_infeasible,
                    "inner disk too small for the required weighted area");
            double lo = 0, hi = a_hi;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                (base + mid * J < target ? lo : hi) = mid;
            }
            double a = 0.5 * (lo + hi);
            require(std::abs(base + a * J - target) <= 1e-9 * std::max(1.0, df.area0_[ii]),
                    Errc::bump_infeasible, "weighted-area solve did not converge");

            cxv[ii].push_back(c.x);
            cyv[ii].push_back(c.y);
            radv[ii].push_back(ri);
            ampv[ii].push_back(a);
        }
    }

    for (int i = 0; i < n; ++i) {
        std::size_t ii = std::size_t(i);
        df.cx_.push_back(QuinticSpline::fit(0, 1, cxv[ii]));
        df.cy_.push_back(QuinticSpline::fit(0, 1, cyv[ii]));
        df.rad_.push_back(QuinticSpline::fit(0, 1, radv[ii]));
        df.amp_.push_back(QuinticSpline::fit(0, 1, ampv[ii]));
    }

    // the family must stay an area form, and must be the standard one both
    // far out and at the time endpoints
    for (double t : {0.0, 0.17, 0.5, 0.83, 1.0}) {
        for (int i = 0; i < n; ++i) {
            Vec2 c = df.center(i, t);
            double ri = df.inner_radius(i, t);
            for (double fr : {0.0, 0.3, 0.7, 0.95, 1.3, 2.0}) {
                for (int k = 0; k < 8; ++k) {
                    double th = 2 * M_PI * k / 8 + 0.05;
                    Vec2 p = c + Vec2{std::cos(th), std::sin(th)} * (fr * ri);
                    require(df.density(p, t) > 0, Errc::bump_infeasible,
                            "density lost positivity");
                }
            }
        }
        Vec2 far{plan.r_prime + plan.r + 1, 0.3};
        require(std::abs(df.density(far, t) - 1) <= 1e-12, Errc::internal_error,
                "density not standard outside the taper");
    }
    for (int i = 0; i < n; ++i) {
        require(std::abs(df.amplitude(i, 0)) <= 1e-9, Errc::internal_error,
                "family not standard at time zero");
        require(std::abs(df.amplitude(i, 1)) <= 1e-5, Errc::internal_error,
                "family not standard at time one");
    }
    return df;
}

namespace {

VectorFieldT correction_field(const DensityFamily& df) {
    // the drift survives arbitrarily far out (it is the centers' mean
    // velocity over 2n), so the support is genuinely unbounded
    return VectorFieldT([df](Vec2 p, double t) { return df.correction(p, t); },
                        SupportDisc{{0, 0}, -1});
}

// inverse of the correction flow, evaluated by integrating backward in time
class MoserPiece final : public FlowPiece {
public:
    explicit MoserPiece(VectorFieldT v) : v_(std::move(v)) {}

    std::string kind() const override { return "moser"; }
    bool is_map() const override { return true; }

    Vec2 map(Vec2 y, double u) const override { return integrate(v_, y, u, 0); }
    Vec2 map_inverse(Vec2 z, double u) const override { return integrate(v_, z, 0, u); }
    Mat2 map_jacobian(Vec2 y, double u) const override {
        return integrate_with_jacobian(v_, y, u, 0).second;
    }

private:
    VectorFieldT v_;
};

// psi_u . gamma_u: the carrier with the correction applied on top, a single
// family so face areas are constant at every time of this piece
class CorrectedCarrierPiece final : public FlowPiece {
public:
    CorrectedCarrierPiece(Isotopy gamma, VectorFieldT v)
        : gamma_(std::move(gamma)), v_(std::move(v)) {}

    std::string kind() const override { return "moser"; }
    bool is_map() const override { return true; }

    Vec2 map(Vec2 x, double u) const override {
        return integrate(v_, gamma_.apply(x, 0, u), u, 0);
    }
    Vec2 map_inverse(Vec2 z, double u) const override {
        return gamma_.apply(integrate(v_, z, 0, u), u, 0);
    }
    Mat2 map_jacobian(Vec2 x, double u) const override {
        auto [p, j1] = gamma_.apply_with_jacobian(x, 0, u);
        Mat2 j2 = integrate_with_jacobian(v_, p, u, 0).second;
        return j2 * j1;
    }

private:
    Isotopy gamma_;
    VectorFieldT v_;
};

// path from the corrected time-one map (normalized to fix the origin) to its
// linearization: x -> psi~(s chi~(x)) / s, s running 1 -> 0.  Below s_switch
// the linear limit takes over; the crossover is placed where its truncation
// error meets the integration noise that 1/s amplifies.
class ConePiece final : public FlowPiece {
public:
    ConePiece(VectorFieldT v, Vec2 b, Mat2 a0) : v_(std::move(v)), b_(b), a0_(a0) {}

    std::string kind() const override { return "cone"; }
    bool is_map() const override { return true; }

    Vec2 map(Vec2 x, double u) const override {
        double s = 1 - u;
        Vec2 z = integrate(v_, x + b_, 0, 1); // chi~ undoes psi~ from the previous stage
        if (s <= s_switch) return a0_ * z;
        return (integrate(v_, z * s, 1, 0) - b_) / s;
    }
    Vec2 map_inverse(Vec2 y, double u) const override {
        double s = 1 - u;
        Vec2 z = s <= s_switch ? a0_.inverse() * y : integrate(v_, y * s + b_, 0, 1) / s;
        return integrate(v_, z, 1, 0) - b_;
    }
    Mat2 map_jacobian(Vec2 x, double u) const override {
        double s = 1 - u;
        auto [z, jchi] = integrate_with_jacobian(v_, x + b_, 0, 1);
        if (s <= s_switch) return a0_ * jchi;
        return integrate_with_jacobian(v_, z * s, 1, 0).second * jchi;
    }
    std::vector<std::pair<std::string, double>> params() const override {
        return {{"bx", b_.x}, {"by", b_.y}, {"s_switch", s_switch}};
    }

private:
    static constexpr double s_switch = 3e-5;
    VectorFieldT v_;
    Vec2 b_;
    Mat2 a0_;
};

// determinant-one linear path: rotation angle unwinds linearly while the
// symmetric factor follows its power path, so every intermediate map still
// has determinant one
class LinearPathPiece final : public FlowPiece {
public:
    LinearPathPiece(Mat2 a0, double phi, Mat2 p) : a0_inv_(a0.inverse()), phi_(phi) {
        // eigendecomposition of the symmetric positive factor
        if (std::abs(p.b) < 1e-15 && std::abs(p.a - p.d) < 1e-15) {
            ang_ = 0;
            l1_ = p.a;
            l2_ = p.d;
        } else {
            ang_ = 0.5 * std::atan2(2 * p.b, p.a - p.d);
            double cs = std::cos(ang_), sn = std::sin(ang_);
            l1_ = p.a * cs * cs + 2 * p.b * cs * sn + p.d * sn * sn;
            l2_ = p.a * sn * sn - 2 * p.b * cs * sn + p.d * cs * cs;
        }
    }

    std::string kind() const override { return "rotation"; }
    bool is_map() const override { return true; }

    Mat2 at(double u) const {
        double w = 1 - u;
        double cs = std::cos(ang_), sn = std::sin(ang_);
        double e1 = std::pow(l1_, w), e2 = std::pow(l2_, w);
        Mat2 pw{e1 * cs * cs + e2 * sn * sn, (e1 - e2) * cs * sn,
                (e1 - e2) * cs * sn, e1 * sn * sn + e2 * cs * cs};
        return Mat2::rotation(w * phi_) * pw;
    }

    Vec2 map(Vec2 x, double u) const override { return at(u) * (a0_inv_ * x); }
    Vec2 map_inverse(Vec2 y, double u) const override {
        return at(u).inverse() * y * 1.0, (at(u) * a0_inv_).inverse() * y;
    }
    Mat2 map_jacobian(Vec2, double u) const override { return at(u) * a0_inv_; }
    std::vector<std::pair<std::string, double>> params() const override {
        return {{"phi", phi_}, {"axis_angle", ang_}, {"l1", l1_}, {"l2", l2_}};
    }

private:
    Mat2 a0_inv_;
    double phi_;
    double ang_ = 0, l1_ = 1, l2_ = 1;
};

} // namespace

Isotopy moser_correct(const DensityFamily& df) {
    VectorFieldT v = correction_field(df);
    Isotopy psi = Isotopy::single(std::make_shared<MoserPiece>(v));

    // the family is standard at time one, so the time-one map must preserve
    // the standard form
    std::vector<Vec2> probes{{0, 0}, {df.r() * 0.4, 0.1}, {-0.2, df.r() * 0.4}};
    for (int i = 0; i < df.n(); ++i) probes.push_back(df.center(i, 0.5));
    for (Vec2 p : probes) {
        double det = jacobian_det(psi, p, 1.0);
        require(std::abs(det - 1) <= 1e-6, Errc::internal_error,
                "corrected time-one map does not preserve area");
    }
    return psi;
}

Isotopy semi_area_isotopy(const ImmersedCurve& c_from, const ImmersedCurve& c_to,
                          const Isotopy& input) {
    const double L = c_from.length();
    if (input.is_identity()) {
        // nothing to carry; insist the endpoints agree and hand back the
        // identity, whose checks all hold trivially
        std::vector<Vec2> a(512), b(512);
        for (int k = 0; k < 512; ++k) {
            a[k] = c_from.point(L * k / 512);
            b[k] = c_to.point(c_to.length() * k / 512);
        }
        require(hausdorff_distance(a, b, true) <= 1e-7 * std::max(1.0, c_from.diameter()),
                Errc::precondition_failure, "identity input but distinct endpoint curves");
        return {};
    }

    Arrangement arr = build_arrangement(c_from);
    GammaResult g = build_gamma(input, arr);
    DensityFamily df = build_density_family(g.gamma, arr, g.plan);
    VectorFieldT v = correction_field(df);

    // normalization of the cone: the corrected time-one map must fix the
    // origin, so its drift there is split off as a translation stage
    auto [b, a0] = integrate_with_jacobian(v, {0, 0}, 1, 0);
    require(std::abs(a0.det() - 1) <= 1e-6, Errc::linear_part_not_rotation,
            "linearization at the origin is not area-preserving");

    Mat2 s2 = a0.transpose() * a0;
    Mat2 p{(s2.a + 1) / std::sqrt(s2.trace() + 2), s2.b / std::sqrt(s2.trace() + 2),
           s2.c / std::sqrt(s2.trace() + 2), (s2.d + 1) / std::sqrt(s2.trace() + 2)};
    Mat2 rot = a0 * p.inverse();
    double phi = std::atan2(rot.c, rot.a);

    std::vector<Segment> segs;
    segs.push_back({0, 0.25, false, std::make_shared<CorrectedCarrierPiece>(g.gamma, v)});
    segs.push_back({0.25, 0.5, false, make_translation_piece(-b)});
    segs.push_back({0.5, 0.75, false, std::make_shared<ConePiece>(v, b, a0)});
    segs.push_back({0.75, 1, false, std::make_shared<LinearPathPiece>(a0, phi, p)});
    Isotopy iso(std::move(segs));

    // face areas must hold along the whole composite, not only inside the
    // corrected stage
    std::vector<std::vector<Vec2>> polys;
    std::vector<double> area0;
    for (const Face& f : arr.faces) {
        polys.push_back(dense_face_polyline(arr, f, 1024));
        area0.push_back(loop_area(polys.back()));
    }
    for (int k = 1; k <= 8; ++k) {
        double t = double(k) / 8;
        for (std::size_t i = 0; i < polys.size(); ++i) {
            double a = loop_area(push_polyline(iso, polys[i], t));
            require(std::abs(a - area0[i]) <= 1e-5 * area0[i], Errc::internal_error,
                    "face area drifted along the composite");
        }
    }

    std::vector<Vec2> pushed(512), target(512);
    for (int k = 0; k < 512; ++k) {
        pushed[k] = iso.apply(c_from.point(L * k / 512), 0, 1);
        target[k] = c_to.point(c_to.length() * k / 512);
    }
    require(hausdorff_distance(pushed, target, true) <= 1e-5, Errc::internal_error,
            "composite endpoint missed the target curve");
    return iso;
}

} // namespace isoflow
