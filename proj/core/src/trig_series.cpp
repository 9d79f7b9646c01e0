#include "isoflow/trig_series.hpp"

#include <complex>

#include "isoflow/errors.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

TrigCurve::TrigCurve(Vec2 c0, std::vector<Vec2> a, std::vector<Vec2> b, double period)
    : c0_(c0), a_(std::move(a)), b_(std::move(b)), period_(period) {
    if (a_.size() != b_.size()) fail(Errc::internal_error, "trig series: size mismatch");
}

TrigCurve TrigCurve::interpolate(std::span<const Vec2> samples, double period) {
    const std::size_t n = samples.size();
    require(n >= 4, Errc::internal_error, "trig interpolation needs >= 4 samples");
    std::vector<std::complex<double>> zx(n), zy(n);
    for (std::size_t j = 0; j < n; ++j) {
        zx[j] = samples[j].x;
        zy[j] = samples[j].y;
    }
    std::vector<std::complex<double>> fx, fy;
    if (is_pow2(n)) {
        fx = zx; fy = zy;
        fft(fx, false);
        fft(fy, false);
    } else {
        fx = dft(zx);
        fy = dft(zy);
    }
    const std::size_t half = n / 2;
    Vec2 c0{fx[0].real() / double(n), fy[0].real() / double(n)};
    std::vector<Vec2> a(half), b(half);
    for (std::size_t k = 1; k < half; ++k) {
        a[k - 1] = {2 * fx[k].real() / double(n), 2 * fy[k].real() / double(n)};
        b[k - 1] = {-2 * fx[k].imag() / double(n), -2 * fy[k].imag() / double(n)};
    }
    // Nyquist: cosine-only term (sin vanishes on the grid)
    a[half - 1] = {fx[half].real() / double(n), fy[half].real() / double(n)};
    b[half - 1] = {0, 0};
    return TrigCurve(c0, std::move(a), std::move(b), period);
}

Vec2 TrigCurve::eval(double s) const {
    Vec2 p;
    eval_all(s, &p);
    return p;
}

void TrigCurve::eval_all(double s, Vec2* p0, Vec2* p1, Vec2* p2, Vec2* p3) const {
    const double w = two_pi / period_;
    const double th = s * w;
    const double c1 = std::cos(th), s1 = std::sin(th);
    double ck = 1, sk = 0; // cos(k th), sin(k th), starting k=0
    Vec2 v0 = c0_, v1{}, v2{}, v3{};
    const int K = int(a_.size());
    for (int k = 1; k <= K; ++k) {
        double cn = ck * c1 - sk * s1;
        double sn = sk * c1 + ck * s1;
        ck = cn;
        sk = sn;
        const Vec2& A = a_[k - 1];
        const Vec2& B = b_[k - 1];
        double kw = k * w;
        if (p0) v0 += A * ck + B * sk;
        if (p1) v1 += (B * ck - A * sk) * kw;
        if (p2) v2 += (A * ck + B * sk) * (-kw * kw);
        if (p3) v3 += (A * sk - B * ck) * (kw * kw * kw);
    }
    if (p0) *p0 = v0;
    if (p1) *p1 = v1;
    if (p2) *p2 = v2;
    if (p3) *p3 = v3;
}

double TrigCurve::max_coeff() const {
    double m = std::max(std::abs(c0_.x), std::abs(c0_.y));
    for (std::size_t k = 0; k < a_.size(); ++k) {
        m = std::max(m, std::max(std::abs(a_[k].x), std::abs(a_[k].y)));
        m = std::max(m, std::max(std::abs(b_[k].x), std::abs(b_[k].y)));
    }
    return m;
}

void TrigCurve::truncate(double eps_rel) {
    double thresh = eps_rel * std::max(max_coeff(), 1e-300);
    int keep = 0;
    for (int k = int(a_.size()); k >= 1; --k) {
        double m = std::max(std::max(std::abs(a_[k - 1].x), std::abs(a_[k - 1].y)),
                            std::max(std::abs(b_[k - 1].x), std::abs(b_[k - 1].y)));
        if (m > thresh) {
            keep = k;
            break;
        }
    }
    keep = std::max(keep, 1);
    a_.resize(keep);
    b_.resize(keep);
}

// ---- antiderivative --------------------------------------------------------

PeriodicAntiderivative::PeriodicAntiderivative(std::span<const double> samples,
                                               double period)
    : period_(period) {
    const std::size_t n = samples.size();
    require(is_pow2(n), Errc::internal_error, "antiderivative needs power-of-two grid");
    std::vector<std::complex<double>> z(n);
    for (std::size_t j = 0; j < n; ++j) z[j] = samples[j];
    fft(z, false);
    mean_ = z[0].real() / double(n);
    const std::size_t half = n / 2;
    ac_.assign(half, 0.0);
    as_.assign(half, 0.0);
    const double w = two_pi / period_;
    for (std::size_t k = 1; k < half; ++k) {
        double a = 2 * z[k].real() / double(n);
        double b = -2 * z[k].imag() / double(n);
        // integral of a cos(kwu) + b sin(kwu) is (a sin(kwu) - b cos(kwu)) / (kw)
        as_[k - 1] = a / (k * w);
        ac_[k - 1] = -b / (k * w);
    }
    // Nyquist cosine term integrates to sine
    double anyq = z[half].real() / double(n);
    as_[half - 1] = anyq / (double(half) * w);

    // drop the negligible tail; evaluation cost tracks the true bandwidth
    double scale = std::abs(mean_) * period_;
    for (std::size_t k = 0; k < half; ++k)
        scale = std::max(scale, std::abs(ac_[k]) + std::abs(as_[k]));
    std::size_t keep = half;
    while (keep > 1 && std::abs(ac_[keep - 1]) + std::abs(as_[keep - 1]) <= 1e-14 * scale) --keep;
    ac_.resize(keep);
    as_.resize(keep);
}

double PeriodicAntiderivative::eval(double u) const {
    const double w = two_pi / period_;
    const double th = u * w;
    const double c1 = std::cos(th), s1 = std::sin(th);
    double ck = 1, sk = 0;
    double v = mean_ * u;
    const int K = int(ac_.size());
    for (int k = 1; k <= K; ++k) {
        double cn = ck * c1 - sk * s1;
        double sn = sk * c1 + ck * s1;
        ck = cn;
        sk = sn;
        // subtract value at 0 so F(0) = 0
        v += ac_[k - 1] * (ck - 1) + as_[k - 1] * sk;
    }
    return v;
}

} // namespace isoflow
