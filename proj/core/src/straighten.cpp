#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/neighborhood.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

// Compactly supported antiderivative: integrate raw * cutoff, minus a
// symmetric bump pair that restores zero total mass.  Sharing one trapezoid
// grid between the two cumulatives makes the corrected total vanish exactly
// in floating arithmetic, so the antiderivative is identically zero outside
// (-q1, q1) and fields built from it are honestly compactly supported.
struct ExactProfile {
    CubicSpline F;
    double q1 = 0;
    double sup_d = 0; // sup |F'| on the grid

    double value(double x) const { return std::abs(x) >= q1 ? 0.0 : F(x); }
    double deriv(double x) const { return std::abs(x) >= q1 ? 0.0 : F.deriv(x); }
};

ExactProfile exact_antiderivative(const std::function<double(double)>& raw, double q0,
                                  double q1) {
    const int M = 1600;
    double b0 = q0 + 0.5 * (q1 - q0);
    std::vector<double> xs(M + 1), f(M + 1), b(M + 1);
    for (int i = 0; i <= M; ++i) {
        double x = -q1 + 2 * q1 * i / M;
        xs[i] = x;
        f[i] = raw(x) * plateau(x, q0, q1);
        b[i] = unit_bump(x, b0, q1) + unit_bump(-x, b0, q1);
    }
    double h = 2 * q1 / M;
    double mass_f = 0, mass_b = 0;
    for (int i = 0; i < M; ++i) {
        mass_f += 0.5 * h * (f[i] + f[i + 1]);
        mass_b += 0.5 * h * (b[i] + b[i + 1]);
    }
    double c = mass_f / mass_b; // mass_b is 2 up to quadrature error
    std::vector<double> G(M + 1, 0.0);
    for (int i = 0; i < M; ++i)
        G[i + 1] = G[i] + 0.5 * h * ((f[i] - c * b[i]) + (f[i + 1] - c * b[i + 1]));
    ExactProfile out;
    out.q1 = q1;
    out.F = CubicSpline(xs, G, CubicSpline::BC::clamped, 0.0, 0.0);
    for (int i = 0; i <= M; ++i) out.sup_d = std::max(out.sup_d, std::abs(f[i] - c * b[i]));
    return out;
}

// Hamiltonian of one straightening stage, pushed to the plane through the
// chart.  first: H = -F(mu) psi(eta) drops the mu-branch onto its axis;
// second: H = +psi(mu) F(eta) slides the eta-branch onto its axis while the
// mu-axis glides along itself on the plateau.
ScalarField stage_field(const DoublePointChart& ch, const ExactProfile& F, double pl, double sg,
                        bool first) {
    auto value = [ch, F, pl, sg, first](Vec2 p, double) -> double {
        auto me = ch.to_chart(p);
        if (!me) return 0;
        if (first) return -F.value(me->x) * plateau(me->y, pl, sg);
        return plateau(me->x, pl, sg) * F.value(me->y);
    };
    auto grad = [ch, F, pl, sg, first](Vec2 p, double) -> Vec2 {
        auto me = ch.to_chart(p);
        if (!me) return {0, 0};
        double dmu, deta;
        if (first) {
            dmu = -F.deriv(me->x) * plateau(me->y, pl, sg);
            deta = -F.value(me->x) * plateau_d(me->y, pl, sg);
        } else {
            dmu = plateau_d(me->x, pl, sg) * F.value(me->y);
            deta = plateau(me->x, pl, sg) * F.deriv(me->y);
        }
        Mat2 J = ch.jacobian(*me);
        // inverse transpose of the unit-determinant chart differential
        return Vec2{J.d * dmu - J.c * deta, -J.b * dmu + J.a * deta};
    };
    return ScalarField(value, grad, ch.bounding_disc());
}

} // namespace

Isotopy straighten_double_point(const ImmersedCurve& other, const DoublePointChart& ch,
                                const ClosenessCertificate& cert) {
    int idx = ch.dp_index();
    require(idx >= 0 && idx < (int)cert.branches.size(), Errc::precondition_failure,
            "certificate does not cover the chart");
    const BranchCloseness& br = cert.branches[idx];
    double delta = cert.delta;
    double sg = ch.sigma();
    require(std::sqrt(delta) < sg, Errc::precondition_failure,
            "delta must stay below the squared chart size");

    if (br.sup_mu < 1e-13 && br.sup_eta < 1e-13) return Isotopy{}; // already on the axes

    double w = std::sqrt(delta);
    double q1 = 0.95 * w;
    double q0 = std::min(std::max(delta, 0.45 * w), 0.8 * q1);

    auto raw1 = [br](double mu) {
        return br.over_mu(std::clamp(mu, -br.mu_range, br.mu_range));
    };
    ExactProfile F1 = exact_antiderivative(raw1, q0, q1);
    double p1 = std::max(1.2 * delta, 1.3 * (br.sup_mu + F1.sup_d));
    require(p1 <= 0.45 * sg, Errc::precondition_failure,
            "stage plateau does not fit the chart square; shrink delta");
    auto piece1 =
        std::make_shared<FieldFlowPiece>(hamiltonian_field(stage_field(ch, F1, p1, sg, true)),
                                         "straighten");
    Isotopy stage1 = Isotopy::single(piece1);

    // trace the once-moved second branch and straighten wherever the trace
    // is a verified graph over the eta-axis
    const int n_trace = 481;
    double r = 0.98 * std::min(br.eta_range, sg / 0.9);
    std::vector<double> te, tm;
    te.reserve(n_trace);
    tm.reserve(n_trace);
    for (int i = 0; i < n_trace; ++i) {
        double eta = -r + 2 * r * i / (n_trace - 1);
        Vec2 p0 = ch.from_chart({br.over_eta(std::clamp(eta, -br.eta_range, br.eta_range)), eta});
        Vec2 p1p = stage1.apply(p0, 0, 1);
        auto me = ch.to_chart(p1p);
        require(bool(me), Errc::graphness_lost, "stage one pushed the branch out of the chart");
        if (!te.empty() && me->y - te.back() < 1e-13) {
            require(me->y - te.back() > -1e-11, Errc::graphness_lost,
                    "once-moved branch is not a graph over the eta-axis");
            continue;
        }
        te.push_back(me->y);
        tm.push_back(me->x);
    }
    require(te.size() >= 8, Errc::graphness_lost, "once-moved branch trace too short");
    CubicSpline pushed(te, tm);
    double eta_f = std::min(-te.front(), te.back());
    require(eta_f > delta, Errc::graphness_lost, "once-moved branch graph range collapsed");

    double q1b = std::min(q1, 0.9 * eta_f);
    double q0b = std::min(std::max(delta, 0.45 * w), 0.8 * q1b);
    // rectangle height on which the formal axis claim is made
    double delta_p = 0.8 * std::min(delta, q0b);

    auto raw2 = [pushed](double eta) {
        return pushed(std::clamp(eta, pushed.x_min(), pushed.x_max()));
    };
    ExactProfile F2 = exact_antiderivative(raw2, q0b, q1b);
    // the wide plateau keeps the already-straightened mu-axis gliding along
    // itself well beyond the drop zone
    double p2 = std::max({1.2 * delta, 1.3 * F2.sup_d, std::min(1.1 * q0, 0.45 * sg)});
    require(p2 <= 0.45 * sg, Errc::precondition_failure,
            "stage plateau does not fit the chart square; shrink delta");
    auto piece2 =
        std::make_shared<FieldFlowPiece>(hamiltonian_field(stage_field(ch, F2, p2, sg, false)),
                                         "straighten");

    Isotopy iso(std::vector<Segment>{Segment{0, 0.5, false, piece1},
                                     Segment{0.5, 1, false, piece2}});

    // numerical post checks in place of the closed-form derivative bounds
    const double axis_tol = 1e-7;
    for (int i = 0; i <= 40; ++i) {
        double u = -delta_p + 2 * delta_p * i / 40;
        Vec2 pa = ch.from_chart({u, br.over_mu(std::clamp(u, -br.mu_range, br.mu_range))});
        auto ma = ch.to_chart(iso.apply(pa, 0, 1));
        require(bool(ma) && std::abs(ma->y) <= axis_tol, Errc::graphness_lost,
                "first branch missed its axis");
        // second branch, parametrized by its height after stage one
        Vec2 pb = ch.from_chart({pushed(u), u});
        auto mb = ch.to_chart(iso.apply(pb, 0.5, 1));
        require(bool(mb) && std::abs(mb->x) <= axis_tol, Errc::graphness_lost,
                "second branch missed its axis");
    }

    // support confinement: the sigma-square boundary must not move
    for (int i = 0; i <= 32; ++i) {
        double a = -sg + 2 * sg * i / 32;
        for (Vec2 me : {Vec2{a, sg}, Vec2{a, -sg}, Vec2{sg, a}, Vec2{-sg, a}}) {
            Vec2 p = ch.from_chart(me);
            require(dist(iso.apply(p, 0, 1), p) <= 1e-12 * (1 + p.norm()), Errc::graphness_lost,
                    "flow leaked outside its support square");
        }
    }

    // the image must stay a graph over the base: push every nearby curve
    // sample through and re-check foot monotonicity along the curve order,
    // keeping the foot continuous from an unambiguous start far away
    {
        const TubularChart& tc = ch.collar();
        double L = tc.base().length();
        double Lo = other.length();
        SupportDisc disc = ch.bounding_disc();
        int N = std::max<int>(2048, (int)other.sample_count() / 2);
        std::vector<Vec2> smp(N);
        int j_start = 0;
        double best = -1;
        for (int j = 0; j < N; ++j) {
            smp[j] = other.point(Lo * j / N);
            double d = dist(smp[j], ch.location());
            if (d > best) {
                best = d;
                j_start = j;
            }
        }
        double prev = 0;
        bool have_prev = false;
        for (int k = 0; k <= N; ++k) {
            Vec2 p = smp[(j_start + k) % N];
            Vec2 q = disc.contains(p, 0.02 * disc.radius) ? iso.apply(p, 0, 1) : p;
            std::optional<TubularChart::Sheet> sh;
            if (have_prev) {
                sh = tc.sheet_near(q, prev, tc.width());
            } else {
                double bt = 0;
                for (const auto& cand : tc.preimages(q, tc.width()))
                    if (!sh || std::abs(cand.t) < bt) {
                        sh = cand;
                        bt = std::abs(cand.t);
                    }
            }
            require(bool(sh), Errc::graphness_lost, "image left the collar band");
            if (have_prev)
                require(wrap_signed(sh->s - prev, L) > -1e-9 * L, Errc::graphness_lost,
                        "image folds over the base");
            prev = sh->s;
            have_prev = true;
        }
    }
    return iso;
}

} // namespace isoflow
