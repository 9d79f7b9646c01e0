#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "isoflow/curve.hpp"

namespace isoflow {

struct DoublePoint {
    Vec2 location;
    double s1, s2;   // branch parameters, s1 < s2
    double angle;    // crossing angle in (0, pi)
};

// maximal smooth piece between two double-point visits; t1 may exceed the
// curve length by one period when the arc wraps the parameter origin
struct Arc {
    double t0, t1;
    int start_dp, end_dp;         // -1 on an embedded curve
    int start_branch, end_branch; // 0 when the endpoint parameter is the dp's s1
};

struct Face {
    std::vector<std::pair<int, int>> boundary; // (arc index, +1 forward / -1 backward)
    double area = 0;    // positive
    int winding = 0;    // of the curve around the interior witness
    int depth = 0;      // number of other bounded faces containing it
    Vec2 sample{};      // interior witness point
};

// Planar subdivision induced by the curve.  With n >= 1 double points the
// half-edge walk must produce exactly n + 1 bounded faces (Euler: V = n,
// E = 2n, F = n + 2 with the unbounded one).
struct Arrangement {
    ImmersedCurve curve;
    std::vector<DoublePoint> double_points;
    std::vector<Arc> arcs;
    std::vector<Face> faces;  // bounded, in half-edge discovery order
    std::vector<std::pair<int, int>> outer_boundary; // unbounded face walk
    double green_total = 0;   // signed curve integral (1/2) * closed-integral of (x dy - y dx)
};

// All self-intersections, Newton-refined on the spectral form, sorted by s1.
// Errors: NotTransverse, DegenerateTriplePoint.
std::vector<DoublePoint> find_double_points(const ImmersedCurve& curve);

// Errors: everything from find_double_points, plus InconsistentTopology when
// the half-edge walk does not close up to the expected face count.
Arrangement build_arrangement(const ImmersedCurve& curve);

// dense polyline around a bounded face (walk order, counterclockwise)
std::vector<Vec2> face_polyline(const Arrangement& arr, const Face& face);

// Crossing sequence along the curve: (double point label, orientation sign)
// at each of the 2n visits.  Canonical form relabels by first appearance and
// minimizes lexicographically over cyclic rotations.
using GaussCode = std::vector<std::pair<int, int>>;
GaussCode gauss_code(const Arrangement& arr);
GaussCode canonical_gauss_code(const GaussCode& code);
// mirror image: reversed visit order, flipped orientation signs
GaussCode reflected_gauss_code(const GaussCode& code);

struct DiskCorrespondence {
    std::vector<int> a_to_b;  // bounded face i of A matches face a_to_b[i] of B
    std::vector<double> area_a, area_b;
};

// Pair up bounded faces of two combinatorially equal arrangements.  With a
// hint map (time-one transport) face witnesses are pushed through it;
// otherwise the pairing comes from aligning the Gauss codes, ambiguity broken
// by descending area then lowest boundary-arc index.
// Errors: CombinatoricsMismatch.
DiskCorrespondence match_disks(const Arrangement& a, const Arrangement& b,
                               const std::function<Vec2(Vec2)>* hint = nullptr);

struct AreaCheckReport {
    bool ok = false;
    double max_mismatch = 0;              // relative to the first curve's areas
    std::vector<double> mismatch;         // per pair
};

// true iff every matched pair differs in area by at most tol, relative to
// the first arrangement's area
AreaCheckReport check_disk_areas(const DiskCorrespondence& corr, double tol);

// winding number of a closed polyline around p (angle accumulation)
int winding_number(std::span<const Vec2> poly, Vec2 p);

} // namespace isoflow
