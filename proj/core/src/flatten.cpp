#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/neighborhood.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

double wrap_dist(double a, double b, double L) { return std::abs(wrap_signed(a - b, L)); }

// C4 plateau for every shape in this file.  The stepper audits Hamiltonian
// segments with a finite-difference divergence; across a C2 ramp edge that
// estimate reads curvature jump as divergence and throttles the step size,
// so the flattening field needs two more continuous derivatives than the
// shared plateau carries.
double step4(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    double u2 = u * u;
    return u2 * u2 * u * (126 + u * (-420 + u * (540 + u * (-315 + u * 70))));
}
double step4_d(double u) {
    if (u <= 0 || u >= 1) return 0;
    double a = u * (1 - u), a2 = a * a;
    return 630 * a2 * a2;
}
double plat4(double y, double p, double q) { return step4((q - std::abs(y)) / (q - p)); }
double plat4_d(double y, double p, double q) {
    double s = y < 0 ? -1.0 : 1.0;
    return -s * step4_d((q - std::abs(y)) / (q - p)) / (q - p);
}

// Accumulated fiber area reaching parameter s, with exact plateaus at the
// double-point visits.  Near each visit the raw antiderivative is replaced
// by the shared constant of its double point, so the flattening Hamiltonian
// is exactly well defined where the collar overlaps itself.
struct AreaProfile {
    CubicSpline G;               // raw antiderivative of the centered graph
    double L = 0;
    struct Window {
        double v;       // visit parameter
        double e, E;    // plateau and ramp half-extents
        double h;       // frozen level shared by the double point's visits
    };
    std::vector<Window> windows;

    double value(double s) const {
        double g = G(s);
        for (const auto& w : windows) {
            double d = wrap_dist(s, w.v, L);
            if (d >= w.E) continue;
            double lam = plat4(d, w.e, w.E);
            return g * (1 - lam) + w.h * lam;
        }
        return g;
    }
    double deriv(double s) const {
        double gp = G.deriv(s);
        for (const auto& w : windows) {
            double dsn = wrap_signed(s - w.v, L);
            double d = std::abs(dsn);
            if (d >= w.E) continue;
            double lam = plat4(d, w.e, w.E);
            double lamp = plat4_d(d, w.e, w.E) * (dsn >= 0 ? 1.0 : -1.0);
            return gp * (1 - lam) + (w.h - G(s)) * lamp;
        }
        return gp;
    }
};

} // namespace

namespace detail {

Isotopy flatten_graph(const RegularNeighborhood& rn, const CubicSpline& g, double sup_g) {
    const TubularChart& tc = rn.chart;
    const ImmersedCurve& base = tc.base();
    double L = base.length();
    double eps = tc.width();

    if (sup_g < 1e-13) return Isotopy{};

    // total collar area must close up; recenter the remainder. The drop rate
    // is the spline derivative of this antiderivative, so quadrature error
    // shows up directly as landing error where g bends hard; Simpson on a
    // fine grid keeps that far below the landing gates downstream.
    const int K = 16384;
    double h = L / K;
    std::vector<double> gv(K + 1), seg(K);
    for (int k = 0; k <= K; ++k) gv[k] = g(L * k / K);
    double total = 0;
    for (int k = 0; k < K; ++k) {
        seg[k] = h / 6.0 * (gv[k] + 4.0 * g(L * (k + 0.5) / K) + gv[k + 1]);
        total += seg[k];
    }
    require(std::abs(total) <= 1e-7 * std::max(1.0, L), Errc::not_well_defined,
            "graph bounds a different total collar area");
    double c = total / L;

    std::vector<double> xs(K + 1), Gv(K + 1);
    for (int k = 0; k <= K; ++k) xs[k] = L * k / K;
    for (int k = 0; k < K; ++k) Gv[k + 1] = Gv[k] + seg[k] - c * h;
    Gv[K] = 0; // exact up to rounding already; the periodic spline needs it closed
    AreaProfile prof;
    prof.G = CubicSpline(xs, Gv, CubicSpline::BC::periodic);
    prof.L = L;

    double sup_eff = 0;
    for (int k = 0; k <= K; ++k) sup_eff = std::max(sup_eff, std::abs(gv[k] - c));

    // per double point: the two accumulated areas must agree, the graph must
    // vanish near both visits, and the freeze geometry must fit
    double delta2_cap = 0.85 * eps;
    std::vector<double> R1(rn.charts.size()), R2(rn.charts.size()), GX(rn.charts.size());
    const double thr = std::max(1e-7, 2 * std::abs(c));
    for (std::size_t i = 0; i < rn.charts.size(); ++i) {
        const auto& ch = rn.charts[i];
        double ga = prof.G(wrap(ch.branch_a(), L));
        double gb = prof.G(wrap(ch.branch_b(), L));
        require(std::abs(ga - gb) <= 1e-7, Errc::not_well_defined,
                "loop areas disagree at a double point");
        GX[i] = 0.5 * (ga + gb);

        auto zero_window = [&](double v) {
            double cap = std::min(2 * rn.nu, 0.45 * L);
            double w = 0;
            for (double d = h; d <= cap; d += h) {
                if (std::abs(g(wrap(v + d, L)) - c) > thr ||
                    std::abs(g(wrap(v - d, L)) - c) > thr)
                    break;
                w = d;
            }
            return w;
        };
        double wa = zero_window(ch.branch_a());
        double wb = zero_window(ch.branch_b());
        double w = std::min(wa, wb);
        require(w >= 4 * h, Errc::precondition_failure,
                "graph must coincide with the base near each double point");

        R2[i] = 0.6 * std::min(w, rn.nu);
        R1[i] = 0.5 * R2[i];
        delta2_cap = std::min(delta2_cap, 0.85 * R1[i] * std::sin(ch.crossing_angle()));

        for (auto [v, wv] : {std::pair{ch.branch_a(), wa}, std::pair{ch.branch_b(), wb}}) {
            AreaProfile::Window win;
            win.v = wrap(v, L);
            win.e = 1.3 * R2[i];
            // the ramp back to the raw antiderivative must finish inside the
            // zero window (the drop is exact only where the graph vanishes)
            // and before the neighboring visits
            double room = std::min(0.95 * wv, 0.45 * L);
            for (std::size_t j = 0; j < rn.charts.size(); ++j)
                for (double u : {rn.charts[j].branch_a(), rn.charts[j].branch_b()})
                    if (wrap_dist(u, v, L) > 1e-12 * L)
                        room = std::min(room, 0.45 * wrap_dist(u, v, L));
            win.E = std::min(2.2 * win.e, room);
            require(win.E > 1.05 * win.e, Errc::precondition_failure,
                    "double-point visits too crowded to balance collar areas");
            win.h = GX[i];
            prof.windows.push_back(win);
        }
    }

    double delta1 = 1.25 * std::max(sup_eff, 1e-14);
    double delta2 = delta2_cap;
    require(delta2 >= 1.6 * delta1, Errc::precondition_failure,
            "graph amplitude too large for the flattening band");

    // Hamiltonian of the drop: minus the accumulated area, faded across the
    // band; near each double point the level is frozen so both sheets see
    // one constant and the field vanishes on the curve itself
    Box2 bb = base.bounding_box();
    SupportDisc disc{bb.center(), 0.5 * bb.diameter() + 2 * eps};
    auto dp_locs = std::make_shared<std::vector<Vec2>>();
    for (const auto& ch : rn.charts) dp_locs->push_back(ch.location());
    auto profile = std::make_shared<AreaProfile>(std::move(prof));
    auto r1v = std::make_shared<std::vector<double>>(R1);
    auto r2v = std::make_shared<std::vector<double>>(R2);
    auto gxv = std::make_shared<std::vector<double>>(GX);

    auto sheets_of = [tc, delta2](Vec2 p) { return tc.preimages(p, delta2); };
    auto ball_of = [dp_locs, r2v](Vec2 p) -> int {
        for (std::size_t i = 0; i < dp_locs->size(); ++i)
            if (dist(p, (*dp_locs)[i]) < (*r2v)[i]) return (int)i;
        return -1;
    };

    auto value = [sheets_of, ball_of, profile, dp_locs, r1v, r2v, gxv, delta1, delta2,
                  L = L](Vec2 p, double) -> double {
        auto sheets = sheets_of(p);
        if (sheets.empty()) return 0;
        double ht = 0;
        for (const auto& sh : sheets)
            ht -= profile->value(wrap(sh.s, L)) * plat4(sh.t, delta1, delta2);
        int b = ball_of(p);
        if (b < 0) return ht;
        double prod = 1;
        for (const auto& sh : sheets) prod *= 1 - plat4(sh.t, delta1, delta2);
        double hf = -(*gxv)[b] * (1 - prod);
        double chi = plat4(dist(p, (*dp_locs)[b]), (*r1v)[b], (*r2v)[b]);
        return chi * hf + (1 - chi) * ht;
    };
    auto grad = [sheets_of, ball_of, profile, dp_locs, r1v, r2v, gxv, delta1, delta2, tc,
                 L = L](Vec2 p, double) -> Vec2 {
        auto sheets = sheets_of(p);
        if (sheets.empty()) return {0, 0};
        Vec2 gt{0, 0};
        std::vector<double> rho(sheets.size()), rhod(sheets.size());
        std::vector<Vec2> gs(sheets.size()), gtv(sheets.size());
        for (std::size_t i = 0; i < sheets.size(); ++i) {
            const auto& sh = sheets[i];
            Mat2 J = tc.jacobian(sh.s, sh.t);
            gs[i] = Vec2{J.d, -J.b};  // gradient of the foot parameter
            gtv[i] = Vec2{-J.c, J.a}; // gradient of the fiber offset
            rho[i] = plat4(sh.t, delta1, delta2);
            rhod[i] = plat4_d(sh.t, delta1, delta2);
            double s = wrap(sh.s, L);
            gt -= gs[i] * (profile->deriv(s) * rho[i]);
            gt -= gtv[i] * (profile->value(s) * rhod[i]);
        }
        int b = ball_of(p);
        if (b < 0) return gt;
        double prod = 1;
        for (std::size_t i = 0; i < sheets.size(); ++i) prod *= 1 - rho[i];
        Vec2 gf{0, 0};
        for (std::size_t i = 0; i < sheets.size(); ++i) {
            double rest = 1;
            for (std::size_t j = 0; j < sheets.size(); ++j)
                if (j != i) rest *= 1 - rho[j];
            gf -= gtv[i] * ((*gxv)[b] * rhod[i] * rest);
        }
        double ht = 0, hf = -(*gxv)[b] * (1 - prod);
        for (std::size_t i = 0; i < sheets.size(); ++i)
            ht -= profile->value(wrap(sheets[i].s, L)) * rho[i];
        double rr = dist(p, (*dp_locs)[b]);
        double chi = plat4(rr, (*r1v)[b], (*r2v)[b]);
        Vec2 dchi{0, 0};
        if (rr > (*r1v)[b] && rr > 1e-300)
            dchi = (p - (*dp_locs)[b]) * (plat4_d(rr, (*r1v)[b], (*r2v)[b]) / rr);
        return gf * chi + gt * (1 - chi) + dchi * (hf - ht);
    };

    ScalarField H(value, grad, disc);
    auto piece = std::make_shared<FieldFlowPiece>(hamiltonian_field(H), "flatten");
    return Isotopy::single(piece);
}

} // namespace detail

Isotopy graph_flatten(const ImmersedCurve& other, const RegularNeighborhood& rn,
                      const ClosenessCertificate& cert) {
    require(!cert.graph.empty() && cert.delta > 0, Errc::precondition_failure,
            "certificate is empty");
    // the certificate must describe this curve
    const TubularChart& tc = rn.chart;
    double L = tc.base().length();
    double Lo = other.length();
    for (int j = 0; j < 16; ++j) {
        Vec2 p = other.point(Lo * j / 16);
        bool on_graph = false;
        for (const auto& sh : tc.preimages(p, tc.width()))
            if (std::abs(sh.t - cert.graph(wrap(sh.s, L))) <= 1e-6 * std::max(1.0, L))
                on_graph = true;
        require(on_graph, Errc::precondition_failure, "certificate does not describe the curve");
    }
    return detail::flatten_graph(rn, cert.graph, cert.sup_value);
}

Isotopy local_step(const ImmersedCurve& from, const ImmersedCurve& to,
                   const RegularNeighborhood& rn, double delta) {
    const ImmersedCurve& base = rn.chart.base();
    require(std::abs(base.length() - to.length()) <= 1e-9 * base.length() &&
                dist(base.point(0), to.point(0)) <= 1e-9 * base.diameter(),
            Errc::precondition_failure, "neighborhood must be built on the target curve");

    ClosenessCertificate cert = is_delta_close(from, rn, delta);

    // equal enclosed areas, disk by disk
    Arrangement arr_from = build_arrangement(from);
    DiskCorrespondence corr = match_disks(arr_from, rn.arrangement);
    AreaCheckReport rep = check_disk_areas(corr, 1e-6);
    require(rep.ok, Errc::precondition_failure, "disk areas do not match the target");

    std::vector<Isotopy> parts;
    for (const auto& ch : rn.charts) parts.push_back(straighten_double_point(from, ch, cert));

    // the straightened image is still a collar graph; trace it.  Supports
    // are pairwise disjoint, so at most one part moves any given point.
    // The straightening bends the graph hardest near each visit, so the
    // trace is refined there; a uniform grid leaves interpolation residue
    // the flattening then reproduces as a landing miss.
    double L = base.length();
    const int M = 4096;
    double zone = std::min(1.5 * std::sqrt(delta), 0.1 * L);
    std::vector<double> svals;
    svals.reserve(M + 8 * M / 32);
    for (int k = 0; k < M; ++k) svals.push_back(L * k / M);
    for (const auto& ch : rn.charts) {
        for (double v : {ch.branch_a(), ch.branch_b()}) {
            for (double u = -zone; u <= zone; u += L / (4.0 * M))
                svals.push_back(wrap(v + u, L));
        }
    }
    std::sort(svals.begin(), svals.end());
    svals.erase(std::unique(svals.begin(), svals.end(),
                            [&](double a, double b) { return b - a < 1e-13 * L; }),
                svals.end());
    std::vector<double> fs, ft;
    fs.reserve(svals.size() + 1);
    ft.reserve(svals.size() + 1);
    for (double s : svals) {
        Vec2 p = rn.chart.map(s, cert.graph(s));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (!parts[i].is_identity() && rn.charts[i].bounding_disc().contains(p, 0)) {
                p = parts[i].apply(p, 0, 1);
                break;
            }
        }
        auto sh = rn.chart.sheet_near(p, s, rn.chart.width());
        require(bool(sh), Errc::graphness_lost, "straightened image left the collar");
        double sp = s + wrap_signed(sh->s - s, L);
        if (!fs.empty()) {
            require(sp - fs.back() > -1e-9 * L, Errc::graphness_lost,
                    "straightened image folds over the base");
            if (sp - fs.back() < 1e-13 * L) continue;
        }
        fs.push_back(sp);
        ft.push_back(sh->t);
    }
    require(fs.size() >= 16, Errc::graphness_lost, "straightened trace collapsed");
    fs.push_back(fs.front() + L);
    ft.push_back(ft.front());
    CubicSpline tracep(fs, ft, CubicSpline::BC::periodic);
    const int Mr = 4 * M;
    std::vector<double> gx(Mr + 1), gy(Mr + 1);
    double s0 = fs.front();
    for (int k = 0; k <= Mr; ++k) {
        gx[k] = L * k / Mr;
        gy[k] = tracep(s0 + wrap(gx[k] - s0, L));
    }
    gy[Mr] = gy[0];
    CubicSpline g_post(gx, gy, CubicSpline::BC::periodic);
    double sup_gp = 0;
    for (int k = 0; k <= 2 * Mr; ++k)
        sup_gp = std::max(sup_gp, std::abs(g_post(L * k / (2.0 * Mr))));

    parts.push_back(detail::flatten_graph(rn, g_post, sup_gp));
    std::vector<Direction> dirs(parts.size(), Direction::forward);
    Isotopy iso = compose_invert(parts, dirs);

    // the composite must land on the target: every pushed point against a
    // polyline dense enough that chord error is negligible
    const int Kf = 1024;
    std::vector<Vec2> img(Kf);
    for (int k = 0; k < Kf; ++k) img[k] = iso.apply(from.point(from.length() * k / Kf), 0, 1);
    const int Mt = 16384;
    std::vector<Vec2> tgt(Mt);
    for (int k = 0; k < Mt; ++k) tgt[k] = to.point(to.length() * k / Mt);
    double land = 0;
    for (const Vec2& p : img) land = std::max(land, distance_to_polyline(p, tgt, true));
    require(land <= 1e-6 * to.diameter(), Errc::graphness_lost, "local step missed the target");
    // and cover it, up to the sagitta of the pushed chords
    double hc = from.length() / Kf;
    double sag = 1e-6 * to.diameter() + 0.5 * hc * hc * std::max(1.0, to.max_curvature());
    double cover = 0;
    for (const Vec2& p : tgt) cover = std::max(cover, distance_to_polyline(p, img, true));
    require(cover <= sag, Errc::graphness_lost, "local step left part of the target bare");
    return iso;
}

} // namespace isoflow
