#include <cmath>
#include <vector>

#include "doctest.h"
#include "isoflow/curve.hpp"
#include "isoflow/errors.hpp"
#include "isoflow/numeric.hpp"
#include "oracles.hpp"

using namespace isoflow;

namespace {
std::vector<Vec2> circle_points(int n, double r = 1.0, Vec2 c = {0, 0}) {
    std::vector<Vec2> pts(n);
    for (int j = 0; j < n; ++j) {
        double u = two_pi * j / n;
        pts[j] = c + Vec2{r * std::cos(u), r * std::sin(u)};
    }
    return pts;
}

bool throws_code(Errc want, const std::function<void()>& f) {
    try {
        f();
    } catch (const IsoflowError& e) {
        return e.code() == want;
    }
    return false;
}
} // namespace

TEST_CASE("unit circle from 64 samples has circumference two pi") {
    ImmersedCurve c = load_and_normalize(circle_points(64));
    CHECK(std::abs(c.length() - two_pi) < 1e-6);
    CHECK(c.min_speed_residual() <= 1e-9);
}

TEST_CASE("lemniscate and figure-eight load cleanly") {
    ImmersedCurve c = make_figure_eight();
    CHECK(c.min_speed_residual() <= 1e-9);
    auto xs = detail::refined_crossings(c);
    REQUIRE(xs.size() == 1);
    CHECK(xs[0].location.norm() < 1e-9);
    CHECK(std::abs(xs[0].sin_angle - 1.0) < 1e-9); // branches cross at right angles
}

TEST_CASE("coincident double traversal is rejected") {
    std::vector<Vec2> pts(128);
    for (int j = 0; j < 128; ++j) {
        double u = two_pi * j / 128;
        pts[j] = {std::cos(2 * u), std::sin(2 * u)};
    }
    CHECK(throws_code(Errc::not_transverse, [&] { load_and_normalize(pts); }));
}

TEST_CASE("circle frame: curvature one, normal points inward") {
    ImmersedCurve c = make_circle(1.0);
    for (double s : {0.0, 1.0, 2.5, 6.0}) {
        TubularFrame f = c.frame(s);
        CHECK(std::abs(f.curvature - 1.0) < 1e-9);
        CHECK(dot(f.normal, Vec2{0, 0} - f.point) > 0.99);
        CHECK(std::abs(f.tangent.norm() - 1) < 1e-12);
        CHECK(std::abs(f.normal.norm() - 1) < 1e-12);
        CHECK(std::abs(cross(f.tangent, f.normal) - 1.0) < 1e-12);
    }
}

TEST_CASE("large circle approaches the straight-line limit") {
    ImmersedCurve c = make_circle(1e3);
    CHECK(std::abs(c.frame(12.34).curvature - 1e-3) < 1e-6);
}

TEST_CASE("ellipse vertex curvature matches the finite-difference oracle") {
    ImmersedCurve c = make_ellipse(2.0, 1.0);
    // vertex (2, 0) is the parameter origin
    CHECK(std::abs(c.frame(0).curvature - 2.0) < 1e-4);

    auto poly = oracles::sample_polyline(c, 1024);
    auto fd = oracles::fd_curvature(poly, c.length() / 1024);
    for (std::size_t i = 0; i < poly.size(); i += 37) {
        double lib = c.frame(double(i) * c.length() / 1024).curvature;
        CHECK(std::abs(lib - fd[i]) < 1e-6);
    }
}

TEST_CASE("tubular map on the circle") {
    ImmersedCurve c = make_circle(1.0);
    for (double s : {0.0, 0.7, 3.9}) {
        CHECK(dist(c.tubular_point(s, 0), c.point(s)) < 1e-12);
        CHECK(std::abs(c.tubular_point(s, 0.1).norm() - 0.9) < 1e-9);
    }
    CHECK(throws_code(Errc::offset_too_large, [&] { c.tubular_point(0, 1.5); }));
}

TEST_CASE("tubular map matches the direct frame formula on an ellipse") {
    ImmersedCurve c = make_ellipse(2.0, 1.0);
    const double h = c.length() / 1024;
    auto poly = oracles::sample_polyline(c, 1024);
    for (std::size_t i = 1; i < 1024; i += 101) {
        // normal rebuilt from a finite-difference tangent, independent of frame()
        Vec2 t_fd = (poly[(i + 1) % 1024] - poly[i - 1]) / (2 * h);
        Vec2 e_fd = t_fd.normalized().perp();
        Vec2 expect = poly[i] + e_fd * 0.05;
        CHECK(dist(c.tubular_point(double(i) * h, 0.05), expect) < 1e-5);
    }
}

TEST_CASE("graph over the zero section reproduces the base curve") {
    ImmersedCurve c = make_figure_eight();
    auto chart = [&](double s, double t) { return c.tubular_point(s, t); };
    ImmersedCurve g = graph_curve(c, chart, 0.05, [](double) { return 0.0; });
    CHECK(std::abs(g.length() - c.length()) < 1e-9);
    for (double s = 0; s < c.length(); s += c.length() / 97)
        CHECK(dist(g.point(s), c.point(s)) < 1e-9);
}

TEST_CASE("constant graph over a circle is a concentric circle") {
    ImmersedCurve c = make_circle(1.0);
    auto chart = [&](double s, double t) { return c.tubular_point(s, t); };
    ImmersedCurve g = graph_curve(c, chart, 0.5, [](double) { return 0.1; });
    CHECK(std::abs(g.length() - two_pi * 0.9) < 1e-6);
    for (double s = 0; s < g.length(); s += 0.1)
        CHECK(std::abs(g.point(s).norm() - 0.9) < 1e-9);

    CHECK(throws_code(Errc::graph_exits_tube, [&] {
        graph_curve(c, chart, 0.05, [](double) { return 0.06; });
    }));
}

TEST_CASE("frames stay orthonormal everywhere") {
    ImmersedCurve c = make_figure_eight();
    for (int i = 0; i < 200; ++i) {
        double s = halton(13 + i, 2) * c.length();
        TubularFrame f = c.frame(s);
        CHECK(std::abs(f.tangent.norm() - 1) < 1e-12);
        CHECK(std::abs(cross(f.tangent, f.normal) - 1) < 1e-12);
    }
}

TEST_CASE("parameter difference equals integrated speed") {
    ImmersedCurve c = make_ellipse(2.0, 1.0);
    auto speed = [&](double s) { return c.velocity(s).norm(); };
    for (auto [a, b] : {std::pair{0.3, 1.9}, {2.0, 7.7}, {0.0, c.length()}}) {
        double q = gauss_integrate_panels(speed, a, b, 16, 24);
        CHECK(std::abs(q - (b - a)) < 1e-6 * c.length());
    }
}

TEST_CASE("tubular map is injective below half the focal distance") {
    ImmersedCurve c = make_figure_eight();
    double tmax = 0.5 / c.max_curvature();
    GaussRule rule = gauss_rule(24);
    for (int i = 0; i < 24; ++i) {
        double s = 0.5 * (rule.nodes[i] + 1) * c.length();
        double k = c.frame(s).curvature;
        CHECK(1.0 - tmax * k > 0);
        CHECK(1.0 + tmax * k > 0);
    }
}

TEST_CASE("load rejects bad inputs") {
    CHECK(throws_code(Errc::precondition_failure, [] {
        load_and_normalize(std::vector<Vec2>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    }));

    // open arc: half a circle
    std::vector<Vec2> arc(64);
    for (int j = 0; j < 64; ++j) {
        double u = pi * j / 63.0;
        arc[j] = {std::cos(u), std::sin(u)};
    }
    CHECK(throws_code(Errc::not_closed, [&] { load_and_normalize(arc); }));

    // astroid: four cusps, speed vanishes
    std::vector<Vec2> ast(256);
    for (int j = 0; j < 256; ++j) {
        double u = two_pi * j / 256;
        double cu = std::cos(u), su = std::sin(u);
        ast[j] = {cu * cu * cu, su * su * su};
    }
    CHECK(throws_code(Errc::not_regular, [&] { load_and_normalize(ast); }));
}

#include "isoflow/projector.hpp"

TEST_CASE("projector recovers tubular coordinates") {
    ImmersedCurve c = make_circle(1.0);
    CurveProjector proj(c);
    Vec2 p = Vec2{0.95 * std::cos(1.2), 0.95 * std::sin(1.2)};
    auto sheets = proj.project_all(p, 0.2);
    REQUIRE(sheets.size() == 1);
    CHECK(std::abs(sheets[0].s - 1.2) < 1e-9);
    CHECK(std::abs(sheets[0].t - 0.05) < 1e-9); // inward normal, radius 0.95
    CHECK(dist(c.tubular_point(sheets[0].s, sheets[0].t), p) < 1e-9);
}

TEST_CASE("projector sees both strands near a double point") {
    ImmersedCurve c = make_figure_eight();
    CurveProjector proj(c);
    auto sheets = proj.project_all(Vec2{0.01, 0.013}, 0.1);
    REQUIRE(sheets.size() == 2);
    for (const auto& sh : sheets)
        CHECK(dist(c.tubular_point(sh.s, sh.t), Vec2{0.01, 0.013}) < 1e-9);

    auto nothing = proj.project_all(Vec2{5, 5}, 0.1);
    CHECK(nothing.empty());

    auto near = proj.project_nearest(Vec2{0.9, 0.02});
    CHECK(dist(c.point(near.s), Vec2{0.9, 0.02}) < 0.2);
}
