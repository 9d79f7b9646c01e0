#include "isoflow/numeric.hpp"

#include <map>
#include <mutex>

#include "isoflow/errors.hpp"

namespace isoflow {

double smoothstep(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    return u * u * u * (10 + u * (-15 + 6 * u));
}

double smoothstep_d(double u) {
    if (u <= 0 || u >= 1) return 0;
    return 30 * u * u * (1 - u) * (1 - u);
}

double smoothstep_dd(double u) {
    if (u <= 0 || u >= 1) return 0;
    return 60 * u * (1 - u) * (1 - 2 * u);
}

double plateau(double y, double p, double q) {
    double a = std::abs(y);
    if (a <= p) return 1;
    if (a >= q) return 0;
    return smoothstep((q - a) / (q - p));
}

double plateau_d(double y, double p, double q) {
    double a = std::abs(y);
    if (a <= p || a >= q) return 0;
    double d = -smoothstep_d((q - a) / (q - p)) / (q - p);
    return y >= 0 ? d : -d;
}

double unit_bump(double y, double a, double b) {
    if (y <= a || y >= b) return 0;
    double u = (y - a) / (b - a);
    // smoothstep derivative has unit integral over [0,1]
    return smoothstep_d(u) / (b - a);
}

// ---- Gauss-Legendre ------------------------------------------------------

static GaussRule make_gauss(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton from Chebyshev initial guess
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1);
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = 2.0 / ((1 - x * x) * dp * dp);
    }
    return r;
}

const GaussRule& gauss_rule(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss(n)).first;
    return it->second;
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b, int n) {
    const GaussRule& r = gauss_rule(n);
    double mid = (a + b) / 2, half = (b - a) / 2;
    double s = 0;
    for (int i = 0; i < n; ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
}

double gauss_integrate_panels(const std::function<double(double)>& f, double a, double b,
                              int n, int m) {
    double s = 0, h = (b - a) / m;
    for (int j = 0; j < m; ++j) s += gauss_integrate(f, a + j * h, a + (j + 1) * h, n);
    return s;
}

// ---- FFT -----------------------------------------------------------------

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    require(is_pow2(n), Errc::internal_error, "fft size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = two_pi / double(len) * (inverse ? 1 : -1);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= double(n);
}

std::vector<std::complex<double>> dft(std::span<const std::complex<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0;
        for (std::size_t j = 0; j < n; ++j) {
            double ang = -two_pi * double(k) * double(j) / double(n);
            s += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// ---- root finding ----------------------------------------------------------

double bisect(const std::function<double(double)>& f, double lo, double hi,
              int max_iter, double tol) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    require(flo * fhi < 0, Errc::internal_error, "bisect: endpoints do not bracket a root");
    for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0) return mid;
        if (flo * fm < 0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

double newton_1d(const std::function<std::pair<double, double>(double)>& f_df,
                 double x0, double lo, double hi, int max_iter, double tol) {
    double x = x0;
    for (int i = 0; i < max_iter; ++i) {
        auto [f, df] = f_df(x);
        if (df == 0) break;
        double step = f / df;
        x -= step;
        if (x < lo) x = lo;
        if (x > hi) x = hi;
        if (std::abs(step) < tol) return x;
    }
    return x;
}

// ---- Halton -----------------------------------------------------------------

double halton(std::uint64_t index, std::uint32_t base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * double(index % base);
        index /= base;
    }
    return r;
}

std::vector<Vec2> halton_points(std::size_t count, const Box2& box, std::uint64_t seed) {
    std::vector<Vec2> pts;
    pts.reserve(count);
    std::uint64_t off = 101 + seed % 7919;
    for (std::size_t i = 0; i < count; ++i) {
        double u = halton(off + i, 2);
        double v = halton(off + i, 3);
        pts.push_back({box.lo.x + u * box.width(), box.lo.y + v * box.height()});
    }
    return pts;
}

// ---- distances ---------------------------------------------------------------

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double t = dot(p - a, ab);
    double l2 = ab.norm2();
    if (l2 <= 0) return dist(p, a);
    t = std::clamp(t / l2, 0.0, 1.0);
    return dist(p, a + ab * t);
}

double distance_to_polyline(Vec2 p, std::span<const Vec2> poly, bool closed) {
    double best = std::numeric_limits<double>::max();
    const std::size_t n = poly.size();
    if (n == 0) return best;
    if (n == 1) return dist(p, poly[0]);
    std::size_t m = closed ? n : n - 1;
    for (std::size_t i = 0; i < m; ++i) {
        best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    return best;
}

double hausdorff_distance(std::span<const Vec2> a, std::span<const Vec2> b, bool closed) {
    double d1 = 0, d2 = 0;
    for (Vec2 p : a) d1 = std::max(d1, distance_to_polyline(p, b, closed));
    for (Vec2 p : b) d2 = std::max(d2, distance_to_polyline(p, a, closed));
    return std::max(d1, d2);
}

double polygon_signed_area(std::span<const Vec2> poly) {
    double s = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 p = poly[i], q = poly[(i + 1) % n];
        s += cross(p, q);
    }
    return 0.5 * s;
}

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::not_closed: return "NotClosed";
        case Errc::not_regular: return "NotRegular";
        case Errc::not_transverse: return "NotTransverse";
        case Errc::degenerate_triple_point: return "DegenerateTriplePoint";
        case Errc::inconsistent_topology: return "InconsistentTopology";
        case Errc::combinatorics_mismatch: return "CombinatoricsMismatch";
        case Errc::offset_too_large: return "OffsetTooLarge";
        case Errc::graph_exits_tube: return "GraphExitsTube";
        case Errc::width_too_large: return "WidthTooLarge";
        case Errc::tube_degenerate: return "TubeDegenerate";
        case Errc::step_failure: return "StepFailure";
        case Errc::left_domain: return "LeftDomain";
        case Errc::shrink_factor_not_found: return "ShrinkFactorNotFound";
        case Errc::bump_infeasible: return "BumpInfeasible";
        case Errc::linear_part_not_rotation: return "LinearPartNotRotation";
        case Errc::not_a_graph: return "NotAGraph";
        case Errc::slope_too_large: return "SlopeTooLarge";
        case Errc::double_point_escaped: return "DoublePointEscaped";
        case Errc::graphness_lost: return "GraphnessLost";
        case Errc::not_well_defined: return "NotWellDefined";
        case Errc::subdivision_exhausted: return "SubdivisionExhausted";
        case Errc::precondition_failure: return "PreconditionFailure";
        case Errc::io_failure: return "IOFailure";
        case Errc::internal_error: return "InternalError";
    }
    return "UnknownError";
}

} // namespace isoflow
