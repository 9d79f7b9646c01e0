#include "isoflow/projector.hpp"

#include <algorithm>
#include <cmath>

#include "isoflow/errors.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {
std::uint64_t cell_key(long ix, long iy) {
    return (std::uint64_t(std::uint32_t(ix)) << 32) | std::uint64_t(std::uint32_t(iy));
}
} // namespace

CurveProjector::CurveProjector(const ImmersedCurve& curve, double band_hint)
    : curve_(&curve) {
    const auto& pts = curve.samples();
    h_ = curve.length() / double(pts.size());
    if (band_hint <= 0) band_hint = 0.02 * curve.diameter();
    cell_ = std::max(4 * h_, band_hint);
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
        long ix = long(std::floor(pts[i].x / cell_));
        long iy = long(std::floor(pts[i].y / cell_));
        grid_[cell_key(ix, iy)].push_back(i);
    }
}

bool CurveProjector::refine(Vec2 p, double s_seed, Sheet& out) const {
    const ImmersedCurve& c = *curve_;
    double s = s_seed;
    for (int it = 0; it < 30; ++it) {
        Vec2 q, d1, d2;
        c.eval_all(s, &q, &d1, &d2);
        Vec2 r = q - p;
        double f = dot(r, d1);
        double df = d1.norm2() + dot(r, d2);
        if (df <= 0.1 * d1.norm2()) df = d1.norm2(); // past-focal safeguard
        double step = f / df;
        s -= step;
        if (std::abs(s - s_seed) > 4 * h_ + 2 * std::abs(step)) return false;
        if (std::abs(step) < 1e-13 * c.length()) {
            TubularFrame fr = c.frame(s);
            out.s = c.wrap_param(s);
            out.t = dot(p - fr.point, fr.normal);
            return true;
        }
    }
    return false;
}

std::vector<CurveProjector::Sheet> CurveProjector::project_all(Vec2 p, double band) const {
    const ImmersedCurve& c = *curve_;
    const auto& pts = c.samples();
    const std::uint32_t m = std::uint32_t(pts.size());
    const double reach = band + 1.5 * h_;

    // gather nearby sample indices
    std::vector<std::uint32_t> hits;
    long ix0 = long(std::floor((p.x - reach) / cell_)), ix1 = long(std::floor((p.x + reach) / cell_));
    long iy0 = long(std::floor((p.y - reach) / cell_)), iy1 = long(std::floor((p.y + reach) / cell_));
    for (long ix = ix0; ix <= ix1; ++ix)
        for (long iy = iy0; iy <= iy1; ++iy) {
            auto it = grid_.find(cell_key(ix, iy));
            if (it == grid_.end()) continue;
            for (std::uint32_t i : it->second)
                if (dist(pts[i], p) <= reach) hits.push_back(i);
        }
    if (hits.empty()) return {};
    std::sort(hits.begin(), hits.end());

    // split into circular runs of consecutive samples: one strand each
    std::vector<std::pair<std::uint32_t, std::uint32_t>> runs; // [first, last]
    for (std::uint32_t i : hits) {
        if (!runs.empty() && i <= runs.back().second + 2) runs.back().second = i;
        else runs.push_back({i, i});
    }
    if (runs.size() > 1 && runs.front().first <= 1 && runs.back().second >= m - 2) {
        runs.front().first = runs.back().first; // wrap-around strand
        runs.pop_back();
    }

    std::vector<Sheet> sheets;
    for (auto [a, b] : runs) {
        std::uint32_t n = (b >= a) ? (b - a) : (b + m - a);
        std::uint32_t best = a;
        double bestd = 1e300;
        for (std::uint32_t k = 0; k <= n; ++k) {
            std::uint32_t i = (a + k) % m;
            double d = dist(pts[i], p);
            if (d < bestd) {
                bestd = d;
                best = i;
            }
        }
        Sheet sh;
        if (refine(p, double(best) * h_, sh) && std::abs(sh.t) <= band) {
            bool dup = false;
            for (const Sheet& q : sheets)
                if (std::abs(wrap_signed(q.s - sh.s, c.length())) < 1e-9 * c.length()) dup = true;
            if (!dup) sheets.push_back(sh);
        }
    }
    std::sort(sheets.begin(), sheets.end(),
              [](const Sheet& u, const Sheet& v) { return u.s < v.s; });
    return sheets;
}

CurveProjector::Sheet CurveProjector::project_nearest(Vec2 p) const {
    const ImmersedCurve& c = *curve_;
    const auto& pts = c.samples();
    std::uint32_t best = 0;
    double bestd = 1e300;
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
        double d = dist(pts[i], p);
        if (d < bestd) {
            bestd = d;
            best = i;
        }
    }
    Sheet sh;
    if (!refine(p, double(best) * h_, sh)) {
        TubularFrame fr = c.frame(double(best) * h_);
        sh.s = double(best) * h_;
        sh.t = dot(p - fr.point, fr.normal);
    }
    return sh;
}

} // namespace isoflow
