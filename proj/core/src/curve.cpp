#include "isoflow/curve.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "isoflow/errors.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

constexpr double norm_tol = 1e-9;      // |phi'| - 1 tolerance after normalization
constexpr int max_norm_passes = 10;
constexpr std::size_t min_samples = 512;
constexpr std::size_t max_samples = 32768;

std::size_t sample_count_for(int harmonics) {
    std::size_t m = next_pow2(std::max<std::size_t>(min_samples, 16u * std::size_t(std::max(harmonics, 1))));
    return std::min(m, max_samples);
}

// max | |phi'| - 1 | over nodes and midpoints of an m-grid
double speed_residual_of(const TrigCurve& s, std::size_t m) {
    const double p = s.period();
    double worst = 0;
    for (std::size_t j = 0; j < 2 * m; ++j) {
        Vec2 d1;
        s.eval_all(double(j) * p / double(2 * m), nullptr, &d1);
        worst = std::max(worst, std::abs(d1.norm() - 1.0));
    }
    return worst;
}

// Reparametrize by arclength.  Each pass samples the speed, builds its
// spectral antiderivative, Newton-inverts it at uniform arclength targets and
// refits the series through the resampled points.  Spectral throughout, so a
// couple of passes reach 1e-9.
TrigCurve normalize_series(TrigCurve s) {
    s.truncate(1e-13);
    std::vector<double> speed;
    std::vector<Vec2> pts;
    double prev_worst = 1e300;
    for (int pass = 0; pass < max_norm_passes; ++pass) {
        const std::size_t m = sample_count_for(s.harmonics());
        const double p = s.period();
        speed.assign(m, 0.0);
        double vmin = 1e300, vmax = 0, worst = 0;
        for (std::size_t j = 0; j < m; ++j) {
            Vec2 d1;
            s.eval_all(double(j) * p / double(m), nullptr, &d1);
            speed[j] = d1.norm();
            vmin = std::min(vmin, speed[j]);
            vmax = std::max(vmax, speed[j]);
            worst = std::max(worst, std::abs(speed[j] - 1.0));
        }
        require(vmax > 0 && vmin > 1e-6 * vmax, Errc::not_regular,
                "speed vanishes along the curve");
        if (worst <= 0.25 * norm_tol && speed_residual_of(s, m) <= norm_tol) return s;
        // a pass that converges at all contracts the residual far faster
        // than this; a stalled pass means a near-cusp and cannot recover
        require(pass < 2 || worst < 0.7 * prev_worst, Errc::not_regular,
                "arclength normalization stalled");
        prev_worst = worst;

        PeriodicAntiderivative arc(speed, p);
        const double len = arc.total();
        pts.assign(m, Vec2{});
        double u_prev = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const double target = double(j) * len / double(m);
            double guess = (j == 0) ? 0.0 : u_prev;
            double u = newton_1d(
                [&](double x) {
                    Vec2 d1;
                    s.eval_all(x, nullptr, &d1);
                    return std::pair<double, double>(arc.eval(x) - target, d1.norm());
                },
                guess, u_prev - 1e-12 * p, p, 80, 1e-15 * p);
            u_prev = u;
            pts[j] = s.eval(u);
        }
        s = TrigCurve::interpolate(pts, len);
        s.truncate(1e-13);
    }
    fail(Errc::not_regular, "arclength normalization did not converge");
}

// total turning angle = integral of curvature (2 pi x turning number)
double total_turning(const TrigCurve& s, std::size_t m) {
    const double p = s.period();
    double acc = 0;
    for (std::size_t j = 0; j < m; ++j) {
        Vec2 d1, d2;
        s.eval_all(double(j) * p / double(m), nullptr, &d1, &d2);
        double v2 = d1.norm2();
        acc += cross(d1, d2) / v2; // kappa * |phi'|, trapezoid on periodic grid
    }
    return acc * p / double(m);
}

double seg_seg_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    double o1 = cross(b - a, c - a), o2 = cross(b - a, d - a);
    double o3 = cross(d - c, a - c), o4 = cross(d - c, b - c);
    if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0))) return 0; // proper crossing
    return std::min(std::min(point_segment_distance(a, c, d), point_segment_distance(b, c, d)),
                    std::min(point_segment_distance(c, a, b), point_segment_distance(d, a, b)));
}

} // namespace

Vec2 ImmersedCurve::velocity(double s) const {
    Vec2 d1;
    series_.eval_all(s, nullptr, &d1);
    return d1;
}

double ImmersedCurve::wrap_param(double s) const { return wrap(s, length()); }

TubularFrame ImmersedCurve::frame(double s) const {
    Vec2 p, d1, d2, d3;
    series_.eval_all(s, &p, &d1, &d2, &d3);
    const double v = d1.norm();
    TubularFrame f;
    f.point = p;
    f.tangent = d1 / v;
    f.normal = f.tangent.perp();
    const double v2 = v * v;
    f.curvature = cross(d1, d2) / (v2 * v);
    // d kappa / d arclength, valid for any regular parametrization
    f.curvature_ds = (cross(d1, d3) / (v2 * v) - 3.0 * f.curvature * dot(d1, d2) / v2) / v;
    return f;
}

Vec2 ImmersedCurve::tubular_point(double s, double t) const {
    require(std::abs(t) * max_curvature_ < 1.0, Errc::offset_too_large,
            "normal offset reaches the focal set");
    TubularFrame f = frame(s);
    return f.point + f.normal * t;
}

Box2 ImmersedCurve::bounding_box() const {
    Box2 b;
    for (const Vec2& p : samples_) b.expand(p);
    return b;
}

double ImmersedCurve::diameter() const { return bounding_box().diameter(); }

ImmersedCurve detail_finish_load(TrigCurve raw) {
    TrigCurve s = normalize_series(std::move(raw));

    // orientation convention: embedded curves run counterclockwise; flip when
    // the total turning says otherwise (leave turning-number-zero inputs alone)
    std::size_t m = sample_count_for(s.harmonics());
    if (total_turning(s, m) < -pi) {
        std::vector<Vec2> rev(m);
        const double p = s.period();
        for (std::size_t j = 0; j < m; ++j)
            rev[j] = s.eval(wrap(-double(j) * p / double(m), p));
        s = TrigCurve::interpolate(rev, p);
        s.truncate(1e-13);
    }

    ImmersedCurve c;
    c.series_ = s;
    m = sample_count_for(s.harmonics());
    c.samples_.resize(m);
    double kmax = 0;
    const double p = s.period();
    for (std::size_t j = 0; j < 2 * m; ++j) {
        Vec2 pt, d1, d2;
        s.eval_all(double(j) * p / double(2 * m), &pt, &d1, &d2);
        if (j % 2 == 0) c.samples_[j / 2] = pt;
        const double v = d1.norm();
        kmax = std::max(kmax, std::abs(cross(d1, d2)) / (v * v * v));
    }
    c.max_curvature_ = kmax;
    c.speed_residual_ = speed_residual_of(s, m);

    detail::check_transversality(c, tau_min);
    return c;
}

ImmersedCurve load_and_normalize(std::span<const Vec2> points) {
    std::vector<Vec2> pts(points.begin(), points.end());
    if (pts.size() >= 2 && dist(pts.front(), pts.back()) == 0) pts.pop_back();
    require(pts.size() >= 8, Errc::precondition_failure, "need at least 8 points");

    // closing-gap heuristic: an open arc shows up as one wildly long edge
    std::vector<double> edges(pts.size());
    Box2 bb;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        edges[i] = dist(pts[i], pts[(i + 1) % pts.size()]);
        bb.expand(pts[i]);
    }
    double closing = edges.back();
    std::nth_element(edges.begin(), edges.begin() + edges.size() / 2, edges.end());
    double median = edges[edges.size() / 2];
    require(closing <= 8 * median + 1e-12 || closing <= 1e-3 * bb.diameter(),
            Errc::not_closed, "endpoint gap far exceeds the sample spacing");

    return detail_finish_load(TrigCurve::interpolate(pts, two_pi));
}

ImmersedCurve load_from_series(const TrigCurve& raw) {
    require(raw.harmonics() >= 2, Errc::precondition_failure, "need at least 2 harmonics");
    return detail_finish_load(raw);
}

ImmersedCurve make_circle(double radius, Vec2 center, int samples) {
    std::vector<Vec2> pts(samples);
    for (int j = 0; j < samples; ++j) {
        double u = two_pi * j / samples;
        pts[j] = center + Vec2{radius * std::cos(u), radius * std::sin(u)};
    }
    return load_and_normalize(pts);
}

ImmersedCurve make_ellipse(double rx, double ry, Vec2 center) {
    std::vector<Vec2> pts(1024);
    for (int j = 0; j < 1024; ++j) {
        double u = two_pi * j / 1024;
        pts[j] = center + Vec2{rx * std::cos(u), ry * std::sin(u)};
    }
    return load_and_normalize(pts);
}

ImmersedCurve make_figure_eight(double scale) {
    std::vector<Vec2> pts(1024);
    for (int j = 0; j < 1024; ++j) {
        double u = two_pi * j / 1024;
        pts[j] = Vec2{scale * std::cos(u), scale * std::sin(u) * std::cos(u)};
    }
    return load_and_normalize(pts);
}

double arclength(const ImmersedCurve& c, double s0, double s1) {
    double d = wrap(s1 - s0, c.length());
    return d;
}

ImmersedCurve graph_curve(const ImmersedCurve& base, const ChartFn& chart, double width,
                          const std::function<double(double)>& g) {
    const std::size_t m = base.sample_count();
    const double L = base.length();
    for (std::size_t j = 0; j < 4 * m; ++j) {
        double s = double(j) * L / double(4 * m);
        require(std::abs(g(s)) < width, Errc::graph_exits_tube,
                "graph leaves the tubular neighborhood");
    }
    std::vector<Vec2> pts(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = double(j) * L / double(m);
        pts[j] = chart(s, g(s));
    }
    return load_and_normalize(pts);
}

namespace detail {

std::vector<CrossingPair> refined_crossings(const ImmersedCurve& c) {
    const auto& pts = c.samples();
    const std::size_t m = pts.size();
    const double L = c.length();
    const double h = L / double(m);
    const double diam = std::max(c.diameter(), 1e-12);

    // no self-crossing can involve parameters closer than the shortest loop
    // the curvature allows; half of that is the exclusion window
    double g_par = 0.25 * L;
    if (c.max_curvature() > 0) g_par = std::min(g_par, 0.5 * pi / c.max_curvature());
    const std::size_t g_idx = std::max<std::size_t>(2, std::size_t(g_par / h));

    // bucket the padded segment boxes; crossing or near-touching segments of
    // well separated parameters become Newton candidates
    const double cell = 2.0 * h;
    const double fat = 1e-3 * h;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
    auto key = [&](long ix, long iy) {
        return (std::uint64_t(std::uint32_t(ix)) << 32) | std::uint64_t(std::uint32_t(iy));
    };
    for (std::uint32_t i = 0; i < m; ++i) {
        Vec2 a = pts[i], b = pts[(i + 1) % m];
        double x0 = std::min(a.x, b.x) - fat, x1 = std::max(a.x, b.x) + fat;
        double y0 = std::min(a.y, b.y) - fat, y1 = std::max(a.y, b.y) + fat;
        for (long ix = long(std::floor(x0 / cell)); ix <= long(std::floor(x1 / cell)); ++ix)
            for (long iy = long(std::floor(y0 / cell)); iy <= long(std::floor(y1 / cell)); ++iy)
                grid[key(ix, iy)].push_back(i);
    }

    std::unordered_set<std::uint64_t> seen;
    std::vector<CrossingPair> found;
    auto circ_idx = [&](std::uint32_t i, std::uint32_t j) {
        std::uint32_t d = (i > j) ? i - j : j - i;
        return std::min<std::size_t>(d, m - d);
    };

    for (const auto& [k, list] : grid) {
        (void)k;
        for (std::size_t u = 0; u < list.size(); ++u) {
            for (std::size_t v = u + 1; v < list.size(); ++v) {
                std::uint32_t i = std::min(list[u], list[v]);
                std::uint32_t j = std::max(list[u], list[v]);
                if (circ_idx(i, j) < g_idx) continue;
                if (!seen.insert((std::uint64_t(i) << 32) | j).second) continue;
                if (seg_seg_distance(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]) > fat)
                    continue;

                // Newton on phi(s1) - phi(s2) = 0
                double s1 = (i + 0.5) * h, s2 = (j + 0.5) * h;
                const double s1_0 = s1, s2_0 = s2;
                bool ok = false, tangential = false;
                Vec2 f, d1a, d1b;
                for (int it = 0; it < 40; ++it) {
                    Vec2 pa, pb;
                    c.eval_all(s1, &pa, &d1a);
                    c.eval_all(s2, &pb, &d1b);
                    f = pa - pb;
                    double det = -cross(d1a, d1b);
                    if (std::abs(det) < 1e-8) {
                        tangential = f.norm() < 3 * h;
                        break;
                    }
                    if (f.norm() <= 1e-12 * diam) {
                        ok = true;
                        break;
                    }
                    Vec2 step{(-d1b.y * f.x + d1b.x * f.y) / det,
                              (-d1a.y * f.x + d1a.x * f.y) / det};
                    s1 -= step.x;
                    s2 -= step.y;
                    if (std::abs(s1 - s1_0) > 0.05 * L || std::abs(s2 - s2_0) > 0.05 * L) break;
                }
                if (!ok && !tangential) {
                    if (f.norm() <= 1e-9 * diam) ok = true;
                    else continue;
                }
                double sa = std::abs(cross(d1a.normalized(), d1b.normalized()));
                require(!tangential && sa >= tau_min, Errc::not_transverse,
                        "self-contact angle below the transversality floor");

                CrossingPair cp;
                cp.s1 = wrap(s1, L);
                cp.s2 = wrap(s2, L);
                if (cp.s1 > cp.s2) std::swap(cp.s1, cp.s2);
                cp.location = (c.point(cp.s1) + c.point(cp.s2)) * 0.5;
                cp.sin_angle = sa;
                found.push_back(cp);
            }
        }
    }

    // cluster duplicates (same crossing reached from several candidate pairs)
    std::sort(found.begin(), found.end(),
              [](const CrossingPair& a, const CrossingPair& b) { return a.s1 < b.s1; });
    std::vector<CrossingPair> out;
    const double par_tol = 1e-6 * L;
    for (const CrossingPair& cp : found) {
        bool dup = false;
        for (const CrossingPair& q : out) {
            double a = std::abs(wrap_signed(cp.s1 - q.s1, L));
            double b = std::abs(wrap_signed(cp.s2 - q.s2, L));
            double a2 = std::abs(wrap_signed(cp.s1 - q.s2, L));
            double b2 = std::abs(wrap_signed(cp.s2 - q.s1, L));
            if ((a < par_tol && b < par_tol) || (a2 < par_tol && b2 < par_tol)) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(cp);
    }
    return out;
}

void check_transversality(const ImmersedCurve& c, double floor_sin) {
    for (const CrossingPair& cp : refined_crossings(c))
        require(cp.sin_angle >= floor_sin, Errc::not_transverse,
                "self-contact angle below the transversality floor");
}

} // namespace detail

} // namespace isoflow
