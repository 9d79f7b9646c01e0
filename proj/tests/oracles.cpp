#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <unordered_map>

namespace oracles {

namespace {
// proper segment crossing (strict interiors); collinear overlaps don't count
bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d, Vec2& where) {
    double d1 = isoflow::cross(b - a, c - a);
    double d2 = isoflow::cross(b - a, d - a);
    double d3 = isoflow::cross(d - c, a - c);
    double d4 = isoflow::cross(d - c, b - c);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        double t = d1 / (d1 - d2);
        where = c + (d - c) * t;
        return true;
    }
    return false;
}
} // namespace

std::vector<BruteCrossing> brute_self_intersections(std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    std::vector<BruteCrossing> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 a = poly[i], b = poly[(i + 1) % n];
        double ax0 = std::min(a.x, b.x), ax1 = std::max(a.x, b.x);
        double ay0 = std::min(a.y, b.y), ay1 = std::max(a.y, b.y);
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue; // shares a vertex
            Vec2 c = poly[j], d = poly[(j + 1) % n];
            if (std::max(c.x, d.x) < ax0 || std::min(c.x, d.x) > ax1 ||
                std::max(c.y, d.y) < ay0 || std::min(c.y, d.y) > ay1)
                continue;
            Vec2 w;
            if (segments_cross(a, b, c, d, w)) out.push_back({i, j, w});
        }
    }
    return out;
}

std::vector<BruteCrossing> grid_self_intersections(std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    double len = 0;
    for (std::size_t i = 0; i < n; ++i) len += isoflow::dist(poly[i], poly[(i + 1) % n]);
    const double cell = 2.0 * len / double(n);
    auto key = [](long x, long y) {
        return (std::uint64_t(std::uint32_t(x)) << 32) | std::uint64_t(std::uint32_t(y));
    };
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
    for (std::uint32_t i = 0; i < n; ++i) {
        Vec2 a = poly[i], b = poly[(i + 1) % n];
        long x0 = long(std::floor(std::min(a.x, b.x) / cell));
        long x1 = long(std::floor(std::max(a.x, b.x) / cell));
        long y0 = long(std::floor(std::min(a.y, b.y) / cell));
        long y1 = long(std::floor(std::max(a.y, b.y) / cell));
        for (long x = x0; x <= x1; ++x)
            for (long y = y0; y <= y1; ++y) grid[key(x, y)].push_back(i);
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<BruteCrossing> out;
    for (const auto& [k, list] : grid) {
        (void)k;
        for (std::size_t u = 0; u < list.size(); ++u)
            for (std::size_t v = u + 1; v < list.size(); ++v) {
                std::uint32_t i = std::min(list[u], list[v]);
                std::uint32_t j = std::max(list[u], list[v]);
                if (j == i + 1 || (i == 0 && j == n - 1)) continue;
                if (!pairs.insert({i, j}).second) continue;
                Vec2 w;
                if (segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n], w))
                    out.push_back({i, j, w});
            }
    }
    std::sort(out.begin(), out.end(), [](const BruteCrossing& a, const BruteCrossing& b) {
        return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });
    return out;
}

double shoelace(std::span<const Vec2> poly) {
    double acc = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 a = poly[i], b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

std::vector<double> fd_curvature(std::span<const Vec2> samples, double h) {
    const std::size_t n = samples.size();
    auto kappa_at = [&](std::size_t i, std::size_t stride) {
        Vec2 pm = samples[(i + n - stride) % n], p0 = samples[i], pp = samples[(i + stride) % n];
        double hh = h * double(stride);
        Vec2 d1 = (pp - pm) / (2 * hh);
        Vec2 d2 = (pp - p0 * 2.0 + pm) / (hh * hh);
        double v = d1.norm();
        return isoflow::cross(d1, d2) / (v * v * v);
    };
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (4.0 * kappa_at(i, 1) - kappa_at(i, 2)) / 3.0;
    return out;
}

std::vector<Vec2> sample_polyline(const isoflow::ImmersedCurve& c, std::size_t n) {
    std::vector<Vec2> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c.point(double(i) * c.length() / double(n));
    return out;
}

double fd_derivative(const std::function<double(double)>& f, double x, double h) {
    auto d = [&](double hh) { return (f(x + hh) - f(x - hh)) / (2 * hh); };
    return (4.0 * d(h) - d(2 * h)) / 3.0;
}

Vec2 fd_gradient(const std::function<double(Vec2)>& f, Vec2 p, double h) {
    return {fd_derivative([&](double x) { return f({x, p.y}); }, p.x, h),
            fd_derivative([&](double y) { return f({p.x, y}); }, p.y, h)};
}

} // namespace oracles
