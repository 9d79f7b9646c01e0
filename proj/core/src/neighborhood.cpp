#include "isoflow/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "isoflow/errors.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

double wrap_dist(double a, double b, double L) { return std::abs(wrap_signed(a - b, L)); }

} // namespace

double TubularChart::raw_offset(double s, double t) const {
    double k = base_->frame(s).curvature;
    double disc = 1 - 2 * k * t;
    require(disc > 0, Errc::offset_too_large, "offset beyond the focal distance of the collar");
    return 2 * t / (1 + std::sqrt(disc));
}

double TubularChart::true_offset(double s, double T) const {
    double k = base_->frame(s).curvature;
    return T - 0.5 * T * T * k;
}

Vec2 TubularChart::map(double s, double t) const {
    TubularFrame f = base_->frame(s);
    double disc = 1 - 2 * f.curvature * t;
    require(disc > 0, Errc::offset_too_large, "offset beyond the focal distance of the collar");
    double T = 2 * t / (1 + std::sqrt(disc));
    return f.point + f.normal * T;
}

Mat2 TubularChart::jacobian(double s, double t) const {
    TubularFrame f = base_->frame(s);
    double disc = 1 - 2 * f.curvature * t;
    require(disc > 0, Errc::offset_too_large, "offset beyond the focal distance of the collar");
    double sq = std::sqrt(disc); // equals 1 - kappa T along the fiber walk
    double T = 2 * t / (1 + sq);
    Vec2 col_s = f.tangent * sq + f.normal * (0.5 * T * T * f.curvature_ds / sq);
    Vec2 col_t = f.normal * (1 / sq);
    return Mat2::from_columns(col_s, col_t);
}

std::vector<TubularChart::Sheet> TubularChart::preimages(Vec2 p, double band) const {
    if (band < 0) band = eps_;
    double raw = 2 * band; // the raw offset of an in-band sheet never exceeds twice the area-true one
    double mk = base_->max_curvature();
    if (mk > 0) raw = std::min(raw, 0.98 / mk);
    std::vector<Sheet> out;
    for (const auto& sh : proj_->project_all(p, raw)) {
        double t = true_offset(sh.s, sh.t);
        if (std::abs(t) <= band * (1 + 1e-12)) out.push_back({sh.s, t});
    }
    return out;
}

std::optional<TubularChart::Sheet> TubularChart::sheet_near(Vec2 p, double s_near,
                                                            double band) const {
    double L = base_->length();
    std::optional<Sheet> best;
    double best_d = 0;
    for (const auto& sh : preimages(p, band)) {
        double d = wrap_dist(sh.s, s_near, L);
        if (!best || d < best_d) {
            best = sh;
            best_d = d;
        }
    }
    return best;
}

TubularChart tubular_normalize(const ImmersedCurve& curve, double eps) {
    require(eps > 0, Errc::precondition_failure, "collar width must be positive");
    require(eps * curve.max_curvature() < 0.5, Errc::width_too_large,
            "collar width times the curvature bound must stay below 1/2");
    TubularChart tc;
    tc.base_ = std::make_shared<ImmersedCurve>(curve);
    tc.proj_ = std::make_shared<CurveProjector>(*tc.base_, 2 * eps);
    tc.eps_ = eps;
    return tc;
}

double DoublePointChart::branch_graph(double t) const {
    double r = std::clamp(t, b_.x_min(), b_.x_max());
    return b_(r);
}

double DoublePointChart::branch_graph_d(double t) const {
    double r = std::clamp(t, b_.x_min(), b_.x_max());
    return b_.deriv(r);
}

std::optional<Vec2> DoublePointChart::to_chart(Vec2 p) const {
    auto sh = chart_.sheet_near(p, sa_, std::min(chart_.width(), t1_ * 1.05));
    if (!sh) return std::nullopt;
    if (std::abs(sh->t) > t1_) return std::nullopt;
    double L = chart_.base().length();
    double s_loc = wrap_signed(sh->s - sa_, L);
    if (std::abs(s_loc) > s1_ * 1.02) return std::nullopt;
    return Vec2{s_loc - b_(sh->t), sh->t};
}

Vec2 DoublePointChart::from_chart(Vec2 me) const {
    double L = chart_.base().length();
    return chart_.map(wrap(sa_ + me.x + branch_graph(me.y), L), me.y);
}

Mat2 DoublePointChart::jacobian(Vec2 me) const {
    double L = chart_.base().length();
    double s = wrap(sa_ + me.x + branch_graph(me.y), L);
    Mat2 shear{1, branch_graph_d(me.y), 0, 1};
    return chart_.jacobian(s, me.y) * shear;
}

// ---------------------------------------------------------------------------
// regular neighborhood construction

struct ChartBuilder {
    // nullopt asks the caller to retry with a thinner collar
    static std::optional<DoublePointChart> build(const TubularChart& tc, const Arrangement& arr,
                                                 int index, double nu) {
        const ImmersedCurve& c = tc.base();
        double L = c.length();
        double eps = tc.width();
        const DoublePoint& dp = arr.double_points[index];
        double sa = dp.s1, sb = dp.s2;
        Vec2 x = dp.location;

        double arc1 = wrap(sb - sa, L);
        double min_arc = std::min(arc1, L - arc1);

        // half-size along the first branch: stay inside the nu-ball and keep
        // the two branch parameter windows disjoint on the circle
        double s1_cap = std::min(1.2 * nu, 0.4 * min_arc);
        const int n_scan = 240;
        double s1 = 0;
        for (int i = 1; i <= n_scan; ++i) {
            double w = s1_cap * i / n_scan;
            if (dist(c.point(wrap(sa + w, L)), x) > 0.9 * nu ||
                dist(c.point(wrap(sa - w, L)), x) > 0.9 * nu)
                break;
            s1 = w;
        }
        s1 *= 0.95;
        if (s1 < 1e-5 * L) return std::nullopt;

        // walk the second branch through the collar band of the first and
        // record its (s, t) trace; a valid crossing pierces the band once,
        // with t strictly monotone
        double wb_cap = 0.9 * min_arc - 1.02 * s1;
        if (wb_cap <= 0) return std::nullopt;
        struct BPt {
            double u, s_loc, t;
        };
        double du = std::min({eps, s1, wb_cap}) / 60;
        auto probe = [&](double u, BPt& out) -> bool {
            Vec2 q = c.point(wrap(sb + u, L));
            if (dist(q, x) > 0.95 * nu) return false;
            auto sh = tc.sheet_near(q, sa, 0.98 * eps);
            if (!sh) return false;
            double s_loc = wrap_signed(sh->s - sa, L);
            if (std::abs(s_loc) > s1) return false;
            out = {u, s_loc, sh->t};
            return true;
        };
        std::vector<BPt> run; // ordered by u
        for (double u = -du;; u -= du) {
            BPt b;
            if (std::abs(u) > wb_cap || !probe(u, b)) break;
            run.push_back(b);
        }
        std::reverse(run.begin(), run.end());
        run.push_back({0, 0, 0});
        for (double u = du;; u += du) {
            BPt b;
            if (u > wb_cap || !probe(u, b)) break;
            run.push_back(b);
        }
        if (run.size() < 12) return std::nullopt;

        double t_lo = 0, t_hi = 0;
        for (const auto& b : run) {
            t_lo = std::min(t_lo, b.t);
            t_hi = std::max(t_hi, b.t);
        }
        double t1 = 0.9 * std::min(-t_lo, t_hi);
        if (t1 < 1e-3 * eps) return std::nullopt;

        // keep only the central band and demand one monotone pass
        std::vector<BPt> band;
        for (const auto& b : run)
            if (std::abs(b.t) <= t1 * 1.02) band.push_back(b);
        if (band.size() < 8) return std::nullopt;
        double dir = band.back().t - band.front().t;
        if (dir == 0) return std::nullopt;
        for (std::size_t i = 1; i < band.size(); ++i) {
            double step = (band[i].t - band[i - 1].t) * (dir > 0 ? 1 : -1);
            if (step <= 0) return std::nullopt;
        }
        if (dir < 0) std::reverse(band.begin(), band.end());

        std::vector<double> bx, by;
        bx.reserve(band.size());
        by.reserve(band.size());
        for (const auto& b : band) {
            if (!bx.empty() && b.t - bx.back() < 1e-14) continue;
            bx.push_back(b.t);
            by.push_back(b.s_loc);
        }
        if (bx.size() < 6) return std::nullopt;
        CubicSpline graph(bx, by);

        auto sup_on = [&](double band_t) {
            double sup = 0;
            for (int i = 0; i <= 400; ++i) {
                double t = -band_t + 2 * band_t * i / 400;
                t = std::clamp(t, bx.front(), bx.back());
                sup = std::max(sup, std::abs(graph(t)));
            }
            return sup;
        };

        double mt = 0.85 * t1;
        int guard = 0;
        while (sup_on(mt) > 0.5 * s1 && guard++ < 80) mt *= 0.8;
        if (guard >= 80 || mt < 1e-4 * t1) return std::nullopt;
        double sup_b = sup_on(mt);
        double ms = 0.85 * (s1 - sup_b);
        if (ms <= 0) return std::nullopt;

        double wb = 0;
        for (const auto& b : band) wb = std::max(wb, std::abs(b.u));
        wb = std::min(wb * 1.05 + du, wb_cap);

        DoublePointChart ch;
        ch.chart_ = tc;
        ch.b_ = std::move(graph);
        ch.index_ = index;
        ch.loc_ = x;
        ch.sa_ = sa;
        ch.sb_ = sb;
        ch.s1_ = s1;
        ch.t1_ = t1;
        ch.ms_ = ms;
        ch.mt_ = mt;
        ch.angle_ = dp.angle;
        ch.wb_ = wb;
        ch.sup_b_ = sup_b;

        // support disc over the mapped sigma-square
        double sg = ch.sigma();
        double rad = 0;
        for (int i = 0; i <= 160; ++i) {
            double a = -sg + 2 * sg * i / 160;
            for (Vec2 me : {Vec2{a, sg}, Vec2{a, -sg}, Vec2{sg, a}, Vec2{-sg, a}})
                rad = std::max(rad, dist(ch.from_chart(me), x));
        }
        ch.disc_ = SupportDisc{x, rad * 1.05};
        if (ch.disc_.radius > 1.15 * nu) return std::nullopt;
        return ch;
    }
};

namespace {

struct BuiltCharts {
    TubularChart chart;
    std::vector<DoublePointChart> charts;
};

std::optional<BuiltCharts> try_build_neighborhood(const ImmersedCurve& curve,
                                                  const Arrangement& arr, double nu, double eps) {
    if (eps * curve.max_curvature() >= 0.5) return std::nullopt;
    TubularChart tc = tubular_normalize(curve, eps);
    double L = curve.length();
    const auto& dps = arr.double_points;

    // collar injectivity discipline: every sheet under a curve point is
    // either the point's own or belongs to a crossing zone, and crossing
    // zones stay inside their nu-balls
    int n_probe = std::max<int>((int)curve.sample_count(), (int)std::ceil(4 * L / eps));
    for (int j = 0; j < n_probe; ++j) {
        double s = L * j / n_probe;
        Vec2 p = curve.point(s);
        for (const auto& sh : tc.preimages(p, 0.999 * eps)) {
            double own = wrap_dist(sh.s, s, L);
            if (own <= 1e-6 * L) continue;
            bool matched = false;
            for (const auto& dp : dps) {
                bool ab = wrap_dist(s, dp.s1, L) <= 3 * nu && wrap_dist(sh.s, dp.s2, L) <= 3 * nu;
                bool ba = wrap_dist(s, dp.s2, L) <= 3 * nu && wrap_dist(sh.s, dp.s1, L) <= 3 * nu;
                if ((ab || ba) && dist(p, dp.location) <= 1.05 * nu) {
                    matched = true;
                    break;
                }
            }
            if (!matched) return std::nullopt;
        }
    }

    BuiltCharts out;
    out.chart = tc;
    for (int i = 0; i < (int)dps.size(); ++i) {
        auto ch = ChartBuilder::build(tc, arr, i, nu);
        if (!ch) return std::nullopt;
        out.charts.push_back(std::move(*ch));
    }
    return out;
}

} // namespace

RegularNeighborhood build_regular_neighborhood(const ImmersedCurve& curve) {
    RegularNeighborhood rn;
    rn.arrangement = build_arrangement(curve);
    const auto& dps = rn.arrangement.double_points;
    std::size_t n = dps.size();

    double nu = 0;
    if (n == 1) {
        nu = 0.25 * curve.diameter();
    } else if (n >= 2) {
        nu = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                nu = std::min(nu, dist(dps[i].location, dps[j].location));
        nu *= 0.4;
    }
    rn.nu = nu;

    double eps = 0.08 * curve.diameter();
    double mk = curve.max_curvature();
    if (mk > 0) eps = std::min(eps, 0.45 / mk);
    if (n > 0) eps = std::min(eps, 0.25 * nu);

    for (; eps >= 1e-4; eps *= 0.5) {
        auto built = try_build_neighborhood(curve, rn.arrangement, nu, eps);
        if (built) {
            rn.chart = std::move(built->chart);
            rn.charts = std::move(built->charts);
            return rn;
        }
    }
    fail(Errc::tube_degenerate, "no admissible collar width above the floor");
}

// ---------------------------------------------------------------------------
// delta-closeness

ClosenessCertificate is_delta_close(const ImmersedCurve& other, const RegularNeighborhood& rn,
                                    double delta) {
    require(delta > 0, Errc::precondition_failure, "delta must be positive");
    const TubularChart& tc = rn.chart;
    const ImmersedCurve& base = tc.base();
    double L = base.length();
    double Lo = other.length();
    double eps = tc.width();
    for (const auto& ch : rn.charts)
        require(delta < 0.98 * std::min(ch.mu_half(), ch.eta_half()), Errc::precondition_failure,
                "delta-square does not fit inside a crossing chart");

    // trace the curve through the collar, keeping the foot continuous
    int N = std::max<int>(4096, (int)other.sample_count());
    std::vector<Vec2> pts(N);
    for (int j = 0; j < N; ++j) pts[j] = other.point(Lo * j / N);

    // start the walk where the collar is unambiguous
    int j0 = 0;
    if (!rn.charts.empty()) {
        double best = -1;
        for (int j = 0; j < N; ++j) {
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& ch : rn.charts) dmin = std::min(dmin, dist(pts[j], ch.location()));
            if (dmin > best) {
                best = dmin;
                j0 = j;
            }
        }
    }

    std::vector<Vec2> walk(N); // plane points in walk order
    std::vector<double> su(N), tu(N);
    {
        double prev = 0;
        bool have_prev = false;
        for (const auto& sh : tc.preimages(pts[j0], eps))
            if (!have_prev || std::abs(sh.t) < std::abs(tu[0])) {
                su[0] = sh.s;
                tu[0] = sh.t;
                prev = sh.s;
                have_prev = true;
            }
        require(have_prev, Errc::not_a_graph, "curve leaves the collar band");
        walk[0] = pts[j0];
        for (int k = 1; k < N; ++k) {
            Vec2 p = pts[(j0 + k) % N];
            auto sh = tc.sheet_near(p, prev, eps);
            require(bool(sh), Errc::not_a_graph, "curve leaves the collar band");
            require(wrap_dist(sh->s, prev, L) <= L / 16, Errc::not_a_graph,
                    "collar trace jumped between sheets");
            walk[k] = p;
            su[k] = sh->s;
            tu[k] = sh->t;
            prev = sh->s;
        }
    }
    double total = wrap_signed(su[1] - su[0], L);
    {
        double acc = total;
        for (int k = 2; k < N; ++k) acc += wrap_signed(su[k] - su[k - 1], L);
        acc += wrap_signed(su[0] - su[N - 1], L);
        require(std::abs(std::abs(acc) - L) < 0.25 * L, Errc::not_a_graph,
                "collar trace does not wind once around the base");
        if (acc < 0) {
            std::reverse(walk.begin(), walk.end());
            std::reverse(su.begin(), su.end());
            std::reverse(tu.begin(), tu.end());
        }
    }

    // unwrap to an increasing parameter and interpolate
    std::vector<double> sx, ty;
    sx.reserve(N + 1);
    ty.reserve(N + 1);
    double acc = su[0];
    sx.push_back(acc);
    ty.push_back(tu[0]);
    for (int k = 1; k < N; ++k) {
        double ds = wrap_signed(su[k] - su[k - 1], L);
        require(ds >= -1e-9 * L, Errc::not_a_graph, "curve folds over the base");
        acc += std::max(ds, 0.0);
        if (acc - sx.back() < 1e-13 * L) continue;
        sx.push_back(acc);
        ty.push_back(tu[k]);
    }
    sx.push_back(sx.front() + L);
    ty.push_back(ty.front());
    CubicSpline trace(sx, ty, CubicSpline::BC::periodic);

    const int M = 4096;
    std::vector<double> gx(M + 1), gy(M + 1);
    double s_origin = sx.front();
    for (int k = 0; k <= M; ++k) {
        gx[k] = L * k / M;
        gy[k] = trace(s_origin + wrap(gx[k] - s_origin, L));
    }
    gy[M] = gy[0];
    ClosenessCertificate cert;
    cert.delta = delta;
    cert.graph = CubicSpline(gx, gy, CubicSpline::BC::periodic);
    for (int k = 0; k < 4 * M; ++k) {
        double s = L * k / (4.0 * M);
        cert.sup_value = std::max(cert.sup_value, std::abs(cert.graph(s)));
        cert.sup_slope = std::max(cert.sup_slope, std::abs(cert.graph.deriv(s)));
    }

    // companion double points must sit inside the delta-squares
    std::vector<DoublePoint> odps;
    if (!rn.charts.empty()) odps = find_double_points(other);
    cert.branches.resize(rn.charts.size());
    for (std::size_t i = 0; i < rn.charts.size(); ++i) {
        const auto& ch = rn.charts[i];
        const DoublePoint* nearest = nullptr;
        double nd = 0;
        for (const auto& odp : odps) {
            double d = dist(odp.location, ch.location());
            if (!nearest || d < nd) {
                nearest = &odp;
                nd = d;
            }
        }
        require(nearest && nd <= 0.5 * rn.nu, Errc::double_point_escaped,
                "no companion double point near the chart center");
        auto me = ch.to_chart(nearest->location);
        require(bool(me) && std::abs(me->x) < delta && std::abs(me->y) < delta,
                Errc::double_point_escaped, "companion double point left the delta-square");
        cert.branches[i].dp_chart = *me;
    }

    // branch graphs over the chart axes; window runs come from the trace
    std::vector<std::vector<char>> claimed(rn.charts.size(), std::vector<char>(N, 0));
    for (std::size_t i = 0; i < rn.charts.size(); ++i) {
        const auto& ch = rn.charts[i];
        double sg = ch.sigma();
        auto& br = cert.branches[i];

        auto collect = [&](double center, double window, std::vector<Vec2>& mes) {
            // locate the walk index whose foot is nearest to the center
            int jc = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int k = 0; k < N; ++k) {
                double d = wrap_dist(su[k], center, L);
                if (d < bd) {
                    bd = d;
                    jc = k;
                }
            }
            for (int off = -N / 2; off <= N / 2; ++off) {
                int k = ((jc + off) % N + N) % N;
                if (wrap_dist(su[k], center, L) > window) continue;
                auto me = ch.to_chart(walk[k]);
                if (!me) continue;
                mes.push_back(*me);
                claimed[i][k] = 1;
            }
        };

        std::vector<Vec2> mes_a, mes_b;
        collect(ch.branch_a(), ch.s_half() * 1.02, mes_a);
        collect(ch.branch_b(), ch.branch_window() * 1.1 + ch.s_half() * 0.1, mes_b);
        require(mes_a.size() >= 8 && mes_b.size() >= 8, Errc::not_a_graph,
                "branch does not span the crossing chart");

        auto build_branch = [&](std::vector<Vec2>& mes, bool over_mu, CubicSpline& sp,
                                double& range, double& sup, double& slope) {
            auto key = [&](const Vec2& v) { return over_mu ? v.x : v.y; };
            auto val = [&](const Vec2& v) { return over_mu ? v.y : v.x; };
            if (key(mes.back()) < key(mes.front())) std::reverse(mes.begin(), mes.end());
            std::vector<double> xs, ys;
            xs.reserve(mes.size());
            ys.reserve(mes.size());
            for (const auto& v : mes) {
                if (!xs.empty() && key(v) - xs.back() < 1e-13) {
                    require(key(v) - xs.back() > -1e-10, Errc::not_a_graph,
                            "branch is not a graph over the chart axis");
                    continue;
                }
                xs.push_back(key(v));
                ys.push_back(val(v));
            }
            require(xs.size() >= 6, Errc::not_a_graph, "branch does not span the crossing chart");
            sp = CubicSpline(xs, ys);
            range = std::min(-xs.front(), xs.back());
            require(range >= sg, Errc::not_a_graph, "branch does not span the crossing chart");
            sup = 0;
            slope = 0;
            for (int k = 0; k <= 800; ++k) {
                double u = -sg + 2 * sg * k / 800;
                sup = std::max(sup, std::abs(sp(u)));
                slope = std::max(slope, std::abs(sp.deriv(u)));
            }
        };
        build_branch(mes_a, true, br.over_mu, br.mu_range, br.sup_mu, br.slope_mu);
        build_branch(mes_b, false, br.over_eta, br.eta_range, br.sup_eta, br.slope_eta);
    }

    // nothing else may enter a crossing chart
    for (std::size_t i = 0; i < rn.charts.size(); ++i) {
        const auto& ch = rn.charts[i];
        double sg = ch.sigma();
        for (int k = 0; k < N; ++k) {
            if (claimed[i][k]) continue;
            auto me = ch.to_chart(walk[k]);
            if (me && std::abs(me->x) < sg && std::abs(me->y) < sg)
                fail(Errc::not_a_graph, "extra strand inside a crossing chart");
        }
    }

    // value bounds before slope bounds; branches before the global graph
    for (const auto& br : cert.branches) {
        require(br.sup_mu < delta, Errc::not_a_graph, "branch values reach delta");
        require(br.sup_eta < delta, Errc::not_a_graph, "branch values reach delta");
    }
    for (const auto& br : cert.branches) {
        require(br.slope_mu < delta, Errc::slope_too_large, "branch slope reaches delta");
        require(br.slope_eta < delta, Errc::slope_too_large, "branch slope reaches delta");
    }
    require(cert.sup_value < delta, Errc::not_a_graph, "graph values reach delta");
    require(cert.sup_slope < delta, Errc::slope_too_large, "graph slope reaches delta");
    return cert;
}

} // namespace isoflow
