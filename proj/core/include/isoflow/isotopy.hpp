#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isoflow/field.hpp"
#include "isoflow/geometry.hpp"
#include "isoflow/integrate.hpp"

namespace isoflow {

// One building block of an isotopy over its own local time in [0,1].
// Either a time-dependent field (integrated) or a closed-form family of
// maps with map(x, 0) = x (evaluated directly); is_map() picks the route.
class FlowPiece {
public:
    virtual ~FlowPiece() = default;

    virtual std::string kind() const = 0;
    virtual Vec2 field(Vec2 x, double u) const;
    virtual Mat2 field_jacobian(Vec2 x, double u) const; // finite differences
    virtual bool hamiltonian() const { return false; }
    virtual SupportDisc support() const { return {}; }

    virtual bool is_map() const { return false; }
    virtual Vec2 map(Vec2 x, double u) const;
    virtual Mat2 map_jacobian(Vec2 x, double u) const;
    virtual Vec2 map_inverse(Vec2 y, double u) const;

    // scalar parameters for the manifest; pieces without a closed parameter
    // set are grid-sampled at serialization time instead
    virtual std::vector<std::pair<std::string, double>> params() const { return {}; }
};

class FieldFlowPiece : public FlowPiece {
public:
    explicit FieldFlowPiece(VectorFieldT f, std::string kind = "field")
        : field_(std::move(f)), kind_(std::move(kind)) {}

    std::string kind() const override { return kind_; }
    Vec2 field(Vec2 x, double u) const override { return field_(x, u); }
    Mat2 field_jacobian(Vec2 x, double u) const override { return field_.jacobian(x, u); }
    bool hamiltonian() const override { return field_.hamiltonian(); }
    SupportDisc support() const override { return field_.support(); }
    const VectorFieldT& underlying() const { return field_; }

private:
    VectorFieldT field_;
    std::string kind_;
};

// piece scheduled on a sub-interval of isotopy time; inverse plays the
// piece's reverse trajectories (negated field, time flipped)
struct Segment {
    double t0 = 0;
    double t1 = 1;
    bool inverse = false;
    std::shared_ptr<const FlowPiece> piece;
};

enum class Direction { forward, inverse };

// Piecewise flow on time [0,1]; no segments means the identity, time gaps
// between segments hold points still.  phi_0 = id always.
class Isotopy {
public:
    Isotopy() = default;
    explicit Isotopy(std::vector<Segment> segments);
    static Isotopy single(std::shared_ptr<const FlowPiece> piece, bool inverse = false);

    const std::vector<Segment>& segments() const { return segments_; }
    bool is_identity() const { return segments_.empty(); }

    Vec2 apply(Vec2 x, double t0, double t1, const IntegrateOptions& opt = {}) const;
    Vec2 operator()(Vec2 x, double t = 1.0) const { return apply(x, 0, t); }
    std::pair<Vec2, Mat2> apply_with_jacobian(Vec2 x, double t0, double t1,
                                              const IntegrateOptions& opt = {}) const;
    Isotopy inverse() const;
    SupportDisc support() const; // hull over segments

private:
    std::vector<Segment> segments_;
};

Vec2 integrate(const Isotopy& iso, Vec2 x0, double t0, double t1,
               const IntegrateOptions& opt = {});

// determinant of the flow map's spatial derivative at x, time 0 to t
double jacobian_det(const Isotopy& iso, Vec2 x, double t = 1.0,
                    const IntegrateOptions& opt = {});

// ordered composition squeezed onto equal windows of [0,1]; inverse parts
// run their reverse trajectories
Isotopy compose_invert(std::span<const Isotopy> parts, std::span<const Direction> directions);

std::shared_ptr<const FlowPiece> make_translation_piece(Vec2 displacement);
std::shared_ptr<const FlowPiece> make_rotation_piece(double angle, Vec2 center = {0, 0});

} // namespace isoflow
