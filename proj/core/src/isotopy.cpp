#include "isoflow/isotopy.hpp"

#include <algorithm>
#include <cmath>

#include "isoflow/errors.hpp"
#include "ode_impl.hpp"

namespace isoflow {

Vec2 FlowPiece::field(Vec2, double) const {
    fail(Errc::internal_error, kind() + " piece has no field form");
}

Mat2 FlowPiece::field_jacobian(Vec2 x, double u) const {
    return fd_jacobian([this](Vec2 p, double v) { return field(p, v); }, x, u);
}

Vec2 FlowPiece::map(Vec2, double) const {
    fail(Errc::internal_error, kind() + " piece has no map form");
}

Mat2 FlowPiece::map_jacobian(Vec2, double) const {
    fail(Errc::internal_error, kind() + " piece has no map form");
}

Vec2 FlowPiece::map_inverse(Vec2, double) const {
    fail(Errc::internal_error, kind() + " piece has no map form");
}

namespace {

class TranslationPiece final : public FlowPiece {
public:
    explicit TranslationPiece(Vec2 d) : d_(d) {}
    std::string kind() const override { return "translate"; }
    Vec2 field(Vec2, double) const override { return d_; }
    Mat2 field_jacobian(Vec2, double) const override { return {0, 0, 0, 0}; }
    bool hamiltonian() const override { return true; }
    bool is_map() const override { return true; }
    Vec2 map(Vec2 x, double u) const override { return x + d_ * u; }
    Mat2 map_jacobian(Vec2, double) const override { return Mat2::identity(); }
    Vec2 map_inverse(Vec2 y, double u) const override { return y - d_ * u; }
    std::vector<std::pair<std::string, double>> params() const override {
        return {{"dx", d_.x}, {"dy", d_.y}};
    }

private:
    Vec2 d_;
};

class RotationPiece final : public FlowPiece {
public:
    RotationPiece(double angle, Vec2 center) : angle_(angle), center_(center) {}
    std::string kind() const override { return "rotation"; }
    Vec2 field(Vec2 x, double) const override { return (x - center_).perp() * angle_; }
    Mat2 field_jacobian(Vec2, double) const override { return {0, -angle_, angle_, 0}; }
    bool hamiltonian() const override { return true; }
    bool is_map() const override { return true; }
    Vec2 map(Vec2 x, double u) const override {
        return center_ + Mat2::rotation(u * angle_) * (x - center_);
    }
    Mat2 map_jacobian(Vec2, double u) const override { return Mat2::rotation(u * angle_); }
    Vec2 map_inverse(Vec2 y, double u) const override {
        return center_ + Mat2::rotation(-u * angle_) * (y - center_);
    }
    std::vector<std::pair<std::string, double>> params() const override {
        return {{"angle", angle_}, {"cx", center_.x}, {"cy", center_.y}};
    }

private:
    double angle_;
    Vec2 center_;
};

// advance x across one segment from local time alpha to beta (either order);
// multiplies *jac on the left by the segment derivative when requested
Vec2 advance(const Segment& seg, Vec2 x, double alpha, double beta,
             const IntegrateOptions& opt, Mat2* jac) {
    if (alpha == beta || !seg.piece) return x;
    const FlowPiece& p = *seg.piece;
    const double len = seg.t1 - seg.t0;

    if (p.is_map()) {
        double ua = seg.inverse ? 1 - alpha : alpha;
        double ub = seg.inverse ? 1 - beta : beta;
        Vec2 z = (ua == 0) ? x : p.map_inverse(x, ua);
        Vec2 y = p.map(z, ub);
        if (jac) {
            Mat2 d = p.map_jacobian(z, ub);
            if (ua != 0) d = d * p.map_jacobian(z, ua).inverse();
            *jac = d * (*jac);
        }
        if (opt.domain.valid())
            require(opt.domain.contains(y), Errc::left_domain,
                    "trajectory left the configured box");
        if (opt.trajectory) {
            opt.trajectory->push_back({seg.t0 + alpha * len, x});
            opt.trajectory->push_back({seg.t0 + beta * len, y});
        }
        return y;
    }

    // outside the support nothing moves at any time of this piece
    SupportDisc sup = p.support();
    if (sup.bounded() && !sup.contains(x)) return x;

    auto value = [&](Vec2 q, double u) {
        return seg.inverse ? -p.field(q, 1 - u) : p.field(q, u);
    };
    auto deriv = [&](Vec2 q, double u) {
        return seg.inverse ? p.field_jacobian(q, 1 - u) * -1.0 : p.field_jacobian(q, u);
    };

    detail::OdeSystem sys;
    detail::OdeControls ctl;
    ctl.tol = opt.tol;
    ctl.domain = opt.domain.valid() ? &opt.domain : nullptr;
    ctl.trajectory = opt.trajectory;
    ctl.t_base = seg.t0;
    ctl.t_scale = len;
    if (p.hamiltonian())
        sys.div_rate = [&](double u, const double* y) {
            return deriv({y[0], y[1]}, u).trace();
        };

    if (jac) {
        sys.dim = 6;
        sys.rhs = [&](double u, const double* y, double* dy) {
            Vec2 q{y[0], y[1]};
            Vec2 f = value(q, u);
            Mat2 a = deriv(q, u);
            dy[0] = f.x;
            dy[1] = f.y;
            dy[2] = a.a * y[2] + a.b * y[4];
            dy[3] = a.a * y[3] + a.b * y[5];
            dy[4] = a.c * y[2] + a.d * y[4];
            dy[5] = a.c * y[3] + a.d * y[5];
        };
        double y[6] = {x.x, x.y, 1, 0, 0, 1};
        detail::dopri5(sys, alpha, beta, y, ctl);
        *jac = Mat2{y[2], y[3], y[4], y[5]} * (*jac);
        return {y[0], y[1]};
    }
    sys.dim = 2;
    sys.rhs = [&](double u, const double* y, double* dy) {
        Vec2 f = value({y[0], y[1]}, u);
        dy[0] = f.x;
        dy[1] = f.y;
    };
    double y[2] = {x.x, x.y};
    detail::dopri5(sys, alpha, beta, y, ctl);
    return {y[0], y[1]};
}

Vec2 walk(const std::vector<Segment>& segs, Vec2 x, double t0, double t1,
          const IntegrateOptions& opt, Mat2* jac) {
    if (t0 == t1) return x;
    if (t0 < t1) {
        for (const Segment& s : segs) {
            double a = std::max(t0, s.t0), b = std::min(t1, s.t1);
            if (b <= a) continue;
            double len = s.t1 - s.t0;
            x = advance(s, x, (a - s.t0) / len, (b - s.t0) / len, opt, jac);
        }
    } else {
        for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
            const Segment& s = *it;
            double a = std::max(t1, s.t0), b = std::min(t0, s.t1);
            if (b <= a) continue;
            double len = s.t1 - s.t0;
            x = advance(s, x, (b - s.t0) / len, (a - s.t0) / len, opt, jac);
        }
    }
    return x;
}

} // namespace

Isotopy::Isotopy(std::vector<Segment> segments) : segments_(std::move(segments)) {
    double cursor = -1e-12;
    for (const Segment& s : segments_) {
        require(bool(s.piece), Errc::precondition_failure, "segment without a piece");
        require(s.t1 > s.t0, Errc::precondition_failure, "empty segment interval");
        require(s.t0 >= cursor && s.t1 <= 1 + 1e-12, Errc::precondition_failure,
                "segments must be ordered and inside [0,1]");
        cursor = s.t1 - 1e-12;
    }
}

Isotopy Isotopy::single(std::shared_ptr<const FlowPiece> piece, bool inverse) {
    std::vector<Segment> segs;
    segs.push_back({0, 1, inverse, std::move(piece)});
    return Isotopy(std::move(segs));
}

Vec2 Isotopy::apply(Vec2 x, double t0, double t1, const IntegrateOptions& opt) const {
    return walk(segments_, x, t0, t1, opt, nullptr);
}

std::pair<Vec2, Mat2> Isotopy::apply_with_jacobian(Vec2 x, double t0, double t1,
                                                   const IntegrateOptions& opt) const {
    Mat2 jac = Mat2::identity();
    Vec2 y = walk(segments_, x, t0, t1, opt, &jac);
    return {y, jac};
}

Isotopy Isotopy::inverse() const {
    const Isotopy* self = this;
    Direction dir = Direction::inverse;
    return compose_invert({self, 1}, {&dir, 1});
}

SupportDisc Isotopy::support() const {
    if (segments_.empty()) return {{0, 0}, 0};
    SupportDisc acc = segments_.front().piece->support();
    for (std::size_t i = 1; i < segments_.size(); ++i)
        acc = support_hull(acc, segments_[i].piece->support());
    return acc;
}

Vec2 integrate(const Isotopy& iso, Vec2 x0, double t0, double t1,
               const IntegrateOptions& opt) {
    return iso.apply(x0, t0, t1, opt);
}

double jacobian_det(const Isotopy& iso, Vec2 x, double t, const IntegrateOptions& opt) {
    return iso.apply_with_jacobian(x, 0, t, opt).second.det();
}

Isotopy compose_invert(std::span<const Isotopy> parts, std::span<const Direction> directions) {
    require(parts.size() == directions.size(), Errc::precondition_failure,
            "one direction per part");
    if (parts.empty()) return {};
    const double w = 1.0 / double(parts.size());
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const double base = w * double(i);
        const auto& inner = parts[i].segments();
        if (directions[i] == Direction::forward) {
            for (const Segment& s : inner)
                segs.push_back({base + w * s.t0, base + w * s.t1, s.inverse, s.piece});
        } else {
            for (auto it = inner.rbegin(); it != inner.rend(); ++it)
                segs.push_back(
                    {base + w * (1 - it->t1), base + w * (1 - it->t0), !it->inverse, it->piece});
        }
    }
    return Isotopy(std::move(segs));
}

std::shared_ptr<const FlowPiece> make_translation_piece(Vec2 displacement) {
    return std::make_shared<TranslationPiece>(displacement);
}

std::shared_ptr<const FlowPiece> make_rotation_piece(double angle, Vec2 center) {
    return std::make_shared<RotationPiece>(angle, center);
}

} // namespace isoflow
