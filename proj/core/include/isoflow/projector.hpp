#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "isoflow/curve.hpp"

namespace isoflow {

// Resolves tubular coordinates around a curve: all preimages (s, t) with
// p = phi(s) + t e(s), |t| within a band.  A spatial hash over the dense
// samples keeps queries local; each hit is polished by Newton on the
// foot-point equation <phi(s) - p, phi'(s)> = 0.
class CurveProjector {
public:
    struct Sheet {
        double s;  // arclength of the foot point
        double t;  // signed normal offset (along the left normal)
    };

    // band_hint sizes the hash cells; queries well above it fall back to
    // wider cell scans and stay correct, just slower
    explicit CurveProjector(const ImmersedCurve& curve, double band_hint = 0);

    // every sheet with |t| <= band, sorted by s; band must stay below the
    // focal distance 1/max|kappa|
    std::vector<Sheet> project_all(Vec2 p, double band) const;

    // foot point with the smallest |t|, searched over the whole curve
    Sheet project_nearest(Vec2 p) const;

    const ImmersedCurve& curve() const { return *curve_; }

private:
    const ImmersedCurve* curve_;
    double cell_ = 1;
    double h_ = 1; // sample spacing
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid_;

    bool refine(Vec2 p, double s_seed, Sheet& out) const;
};

} // namespace isoflow
