#include "isoflow/arrangement.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "isoflow/errors.hpp"
#include "isoflow/numeric.hpp"

namespace isoflow {

namespace {

// (1/2) integral of (x y' - y x') over a parameter interval
double green_integral(const ImmersedCurve& c, double t0, double t1) {
    int panels = std::max(2, int((t1 - t0) / c.length() * 128) + 1);
    return gauss_integrate_panels(
        [&](double s) {
            Vec2 p, d;
            c.eval_all(s, &p, &d);
            return 0.5 * (p.x * d.y - p.y * d.x);
        },
        t0, t1, 20, panels);
}

int curve_winding(const ImmersedCurve& c, Vec2 p) {
    const auto& pts = c.samples();
    double acc = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Vec2 u = pts[i] - p, v = pts[(i + 1) % pts.size()] - p;
        acc += std::atan2(cross(u, v), dot(u, v));
    }
    return int(std::lround(acc / two_pi));
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
    double a = 0;
    Vec2 c{0, 0};
    for (std::size_t i = 0; i < poly.size(); ++i) {
        Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
        double w = cross(p, q);
        a += w;
        c += (p + q) * w;
    }
    if (std::abs(a) < 1e-300) return poly[0];
    return c / (3 * a);
}

// witness strictly inside a counterclockwise face boundary
Vec2 interior_witness(std::span<const Vec2> poly, double area, double diam) {
    Vec2 c = polygon_centroid(poly);
    double scale = std::sqrt(std::max(area, 1e-300));
    if (winding_number(poly, c) == 1 &&
        distance_to_polyline(c, poly, true) > std::max(0.02 * scale, 1e-9 * diam))
        return c;
    for (double t : {0.25, 0.1, 0.04, 0.01, 0.004, 0.001}) {
        double off = t * scale;
        for (std::size_t i = 0; i < poly.size();
             i += std::max<std::size_t>(1, poly.size() / 64)) {
            Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
            if (dist(p, q) < 1e-12 * diam) continue;
            Vec2 mid = (p + q) * 0.5;
            Vec2 inward = (q - p).normalized().perp(); // interior is left of the walk
            Vec2 cand = mid + inward * off;
            if (winding_number(poly, cand) == 1 &&
                distance_to_polyline(cand, poly, true) > 0.4 * off)
                return cand;
        }
    }
    fail(Errc::inconsistent_topology, "no interior witness for a face");
}

} // namespace

int winding_number(std::span<const Vec2> poly, Vec2 p) {
    double acc = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        Vec2 u = poly[i] - p, v = poly[(i + 1) % poly.size()] - p;
        acc += std::atan2(cross(u, v), dot(u, v));
    }
    return int(std::lround(acc / two_pi));
}

std::vector<DoublePoint> find_double_points(const ImmersedCurve& curve) {
    auto pairs = detail::refined_crossings(curve);

    // coincident crossing locations mean at least three branches meet
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t j = i + 1; j < pairs.size(); ++j)
            require(dist(pairs[i].location, pairs[j].location) > 1e-8,
                    Errc::degenerate_triple_point,
                    "distinct crossings share a location");

    std::vector<DoublePoint> out;
    out.reserve(pairs.size());
    for (const auto& cp : pairs) {
        Vec2 t1 = curve.velocity(cp.s1).normalized();
        Vec2 t2 = curve.velocity(cp.s2).normalized();
        DoublePoint dp;
        dp.location = cp.location;
        dp.s1 = cp.s1;
        dp.s2 = cp.s2;
        dp.angle = std::atan2(std::abs(cross(t1, t2)), dot(t1, t2));
        out.push_back(dp);
    }
    std::sort(out.begin(), out.end(),
              [](const DoublePoint& a, const DoublePoint& b) { return a.s1 < b.s1; });
    return out;
}

Arrangement build_arrangement(const ImmersedCurve& curve) {
    Arrangement arr;
    arr.curve = curve;
    arr.double_points = find_double_points(curve);
    const double L = curve.length();
    const double diam = curve.diameter();
    const int n = int(arr.double_points.size());
    arr.green_total = green_integral(curve, 0, L);

    if (n == 0) {
        Arc whole{0, L, -1, -1, -1, -1};
        arr.arcs.push_back(whole);
        int dir = arr.green_total > 0 ? 1 : -1;
        Face f;
        f.boundary = {{0, dir}};
        f.area = std::abs(arr.green_total);
        auto poly = face_polyline(arr, f);
        f.sample = interior_witness(poly, f.area, diam);
        f.winding = curve_winding(curve, f.sample);
        f.depth = 0;
        arr.faces.push_back(std::move(f));
        arr.outer_boundary = {{0, -dir}};
        return arr;
    }

    // breakpoints: both visits of every double point, in traversal order
    struct Bp {
        double s;
        int dp, branch;
    };
    std::vector<Bp> bps;
    for (int i = 0; i < n; ++i) {
        bps.push_back({arr.double_points[i].s1, i, 0});
        bps.push_back({arr.double_points[i].s2, i, 1});
    }
    std::sort(bps.begin(), bps.end(), [](const Bp& a, const Bp& b) { return a.s < b.s; });
    const int m = 2 * n;
    for (int k = 0; k + 1 < m; ++k)
        require(bps[k + 1].s - bps[k].s > 1e-10 * L, Errc::inconsistent_topology,
                "double point visits collide in parameter");

    for (int k = 0; k < m; ++k) {
        Arc a;
        a.t0 = bps[k].s;
        a.t1 = (k + 1 < m) ? bps[k + 1].s : bps[0].s + L;
        a.start_dp = bps[k].dp;
        a.start_branch = bps[k].branch;
        a.end_dp = bps[(k + 1) % m].dp;
        a.end_branch = bps[(k + 1) % m].branch;
        arr.arcs.push_back(a);
    }

    // half-edge 2k runs arc k forward, 2k+1 backward; sort outgoing edges
    // around each vertex counterclockwise
    struct Outgoing {
        int he;
        double angle;
    };
    std::vector<std::vector<Outgoing>> star(n);
    for (int k = 0; k < m; ++k) {
        const Arc& a = arr.arcs[k];
        Vec2 t_start = curve.velocity(a.t0).normalized();
        Vec2 t_end = curve.velocity(a.t1).normalized();
        star[a.start_dp].push_back({2 * k, std::atan2(t_start.y, t_start.x)});
        star[a.end_dp].push_back({2 * k + 1, std::atan2(-t_end.y, -t_end.x)});
    }
    std::vector<int> next(2 * m, -1), head(2 * m, -1);
    for (int k = 0; k < m; ++k) {
        head[2 * k] = arr.arcs[k].end_dp;
        head[2 * k + 1] = arr.arcs[k].start_dp;
    }
    std::vector<int> slot(2 * m, -1); // position of each half-edge in its tail's star
    for (int v = 0; v < n; ++v) {
        require(star[v].size() == 4, Errc::inconsistent_topology,
                "double point without four incident half-edges");
        std::sort(star[v].begin(), star[v].end(),
                  [](const Outgoing& a, const Outgoing& b) { return a.angle < b.angle; });
        for (int i = 0; i < 4; ++i) slot[star[v][i].he] = i;
    }
    for (int h = 0; h < 2 * m; ++h) {
        int twin = h ^ 1;
        int v = head[h];
        // clockwise predecessor of the twin keeps the face on the left
        next[h] = star[v][(slot[twin] + 3) % 4].he;
    }

    std::vector<double> arc_green(m);
    for (int k = 0; k < m; ++k) arc_green[k] = green_integral(curve, arr.arcs[k].t0, arr.arcs[k].t1);

    std::vector<int> walk_of(2 * m, -1);
    struct Walk {
        std::vector<std::pair<int, int>> boundary;
        double signed_area;
    };
    std::vector<Walk> walks;
    for (int h0 = 0; h0 < 2 * m; ++h0) {
        if (walk_of[h0] >= 0) continue;
        Walk w;
        w.signed_area = 0;
        int h = h0;
        for (int steps = 0; steps <= 2 * m; ++steps) {
            require(steps < 2 * m, Errc::inconsistent_topology, "face walk does not close");
            walk_of[h] = int(walks.size());
            w.boundary.push_back({h / 2, (h % 2 == 0) ? 1 : -1});
            w.signed_area += (h % 2 == 0) ? arc_green[h / 2] : -arc_green[h / 2];
            h = next[h];
            if (h == h0) break;
        }
        walks.push_back(std::move(w));
    }
    require(int(walks.size()) == n + 2, Errc::inconsistent_topology,
            "face count violates the Euler relation");

    int outer = -1;
    for (int i = 0; i < int(walks.size()); ++i) {
        if (walks[i].signed_area < 0) {
            require(outer < 0, Errc::inconsistent_topology, "two faces claim the outside");
            outer = i;
        }
    }
    require(outer >= 0, Errc::inconsistent_topology, "no unbounded face found");
    arr.outer_boundary = walks[outer].boundary;

    std::vector<int> face_of_walk(walks.size(), -1);
    for (int i = 0; i < int(walks.size()); ++i) {
        if (i == outer) continue;
        require(walks[i].signed_area > 0, Errc::inconsistent_topology,
                "bounded face with nonpositive area");
        Face f;
        f.boundary = walks[i].boundary;
        f.area = walks[i].signed_area;
        face_of_walk[i] = int(arr.faces.size());
        arr.faces.push_back(std::move(f));
    }

    // containment depth: arcs crossed to escape to the unbounded region,
    // minus one, via breadth-first search on arc adjacency
    std::vector<int> dist(walks.size(), -1);
    std::vector<int> queue{outer};
    dist[outer] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        int w = queue[qi];
        for (auto [k, dir] : walks[w].boundary) {
            int twin = walk_of[2 * k + (dir > 0 ? 1 : 0)];
            if (dist[twin] < 0) {
                dist[twin] = dist[w] + 1;
                queue.push_back(twin);
            }
        }
    }
    for (int i = 0; i < int(walks.size()); ++i)
        if (i != outer) arr.faces[face_of_walk[i]].depth = dist[i] - 1;

    for (std::size_t i = 0; i < arr.faces.size(); ++i) {
        std::vector<Vec2> poly = face_polyline(arr, arr.faces[i]);
        arr.faces[i].sample = interior_witness(poly, arr.faces[i].area, diam);
        arr.faces[i].winding = curve_winding(curve, arr.faces[i].sample);
    }
    return arr;
}

std::vector<Vec2> face_polyline(const Arrangement& arr, const Face& face) {
    const ImmersedCurve& c = arr.curve;
    const double L = c.length();
    const auto& samples = c.samples();
    const double h = L / double(samples.size());
    std::vector<Vec2> out;
    for (auto [k, dir] : face.boundary) {
        const Arc& a = arr.arcs[std::size_t(k)];
        long i0 = long(std::floor(a.t0 / h)) + 1;
        long i1 = long(std::ceil(a.t1 / h)) - 1;
        std::vector<Vec2> piece;
        piece.push_back(c.point(a.t0));
        for (long i = i0; i <= i1; ++i)
            piece.push_back(samples[std::size_t(i % long(samples.size()))]);
        if (dir > 0) {
            out.insert(out.end(), piece.begin(), piece.end());
        } else {
            piece.push_back(c.point(a.t1));
            piece.erase(piece.begin());
            out.insert(out.end(), piece.rbegin(), piece.rend());
        }
    }
    return out;
}

GaussCode gauss_code(const Arrangement& arr) {
    struct Visit {
        double s;
        int label, sign;
    };
    std::vector<Visit> visits;
    for (int i = 0; i < int(arr.double_points.size()); ++i) {
        const DoublePoint& dp = arr.double_points[i];
        Vec2 t1 = arr.curve.velocity(dp.s1).normalized();
        Vec2 t2 = arr.curve.velocity(dp.s2).normalized();
        int sign = cross(t1, t2) > 0 ? 1 : -1;
        visits.push_back({dp.s1, i, sign});
        visits.push_back({dp.s2, i, sign});
    }
    std::sort(visits.begin(), visits.end(),
              [](const Visit& a, const Visit& b) { return a.s < b.s; });
    GaussCode code;
    for (const Visit& v : visits) code.push_back({v.label, v.sign});
    return code;
}

GaussCode canonical_gauss_code(const GaussCode& code) {
    const std::size_t len = code.size();
    if (len == 0) return {};
    GaussCode best;
    for (std::size_t r = 0; r < len; ++r) {
        GaussCode w;
        std::map<int, int> relabel;
        for (std::size_t i = 0; i < len; ++i) {
            auto [label, sign] = code[(i + r) % len];
            auto it = relabel.find(label);
            if (it == relabel.end()) it = relabel.insert({label, int(relabel.size())}).first;
            w.push_back({it->second, sign});
        }
        if (best.empty() || w < best) best = w;
    }
    return best;
}

GaussCode reflected_gauss_code(const GaussCode& code) {
    GaussCode out(code.rbegin(), code.rend());
    for (auto& [label, sign] : out) sign = -sign;
    return out;
}

namespace {

// boundary fingerprint under an arc relabeling (sorted, direction-tagged)
std::vector<std::pair<int, int>> mapped_boundary(const Face& f,
                                                 const std::vector<int>& arc_map,
                                                 int dir_flip) {
    std::vector<std::pair<int, int>> key;
    for (auto [arc, dir] : f.boundary) key.push_back({arc_map[arc], dir * dir_flip});
    std::sort(key.begin(), key.end());
    return key;
}

} // namespace

DiskCorrespondence match_disks(const Arrangement& a, const Arrangement& b,
                               const std::function<Vec2(Vec2)>* hint) {
    require(a.double_points.size() == b.double_points.size(), Errc::combinatorics_mismatch,
            "double point counts differ");
    GaussCode wa = gauss_code(a), wb = gauss_code(b);
    // the code classes reachable by mirroring the plane and/or reversing the
    // traversal: mirror flips signs, reversal flips both order and signs
    GaussCode ca = canonical_gauss_code(wa);
    GaussCode wb_m = wb, wb_r = reflected_gauss_code(wb), wb_mr = wb_r;
    for (auto& [l, s] : wb_m) s = -s;
    for (auto& [l, s] : wb_mr) s = -s;
    require(ca == canonical_gauss_code(wb) || ca == canonical_gauss_code(wb_m) ||
                ca == canonical_gauss_code(wb_r) || ca == canonical_gauss_code(wb_mr),
            Errc::combinatorics_mismatch, "crossing sequences do not align");
    require(a.faces.size() == b.faces.size(), Errc::combinatorics_mismatch,
            "bounded face counts differ");

    DiskCorrespondence corr;
    const std::size_t nf = a.faces.size();
    corr.area_a.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) corr.area_a[i] = a.faces[i].area;
    corr.area_b.resize(nf);

    if (hint) {
        std::vector<std::vector<Vec2>> polys(nf);
        for (std::size_t j = 0; j < nf; ++j) polys[j] = face_polyline(b, b.faces[j]);
        corr.a_to_b.assign(nf, -1);
        std::vector<int> used(nf, 0);
        for (std::size_t i = 0; i < nf; ++i) {
            Vec2 q = (*hint)(a.faces[i].sample);
            int found = -1;
            for (std::size_t j = 0; j < nf; ++j) {
                if (winding_number(polys[j], q) != 0) {
                    found = int(j);
                    break;
                }
            }
            require(found >= 0, Errc::combinatorics_mismatch,
                    "transported witness lands in no bounded face");
            require(!used[found], Errc::combinatorics_mismatch,
                    "transported witnesses collide in one face");
            require(a.faces[i].boundary.size() == b.faces[found].boundary.size(),
                    Errc::combinatorics_mismatch, "matched faces differ combinatorially");
            used[found] = 1;
            corr.a_to_b[i] = found;
            corr.area_b[i] = b.faces[found].area;
        }
        return corr;
    }

    if (a.double_points.empty()) {
        corr.a_to_b = {0};
        corr.area_b[0] = b.faces[0].area;
        return corr;
    }

    // enumerate code alignments; each valid one induces an arc bijection
    const int m = int(wa.size());
    std::map<std::vector<std::pair<int, int>>, int> b_face_index;
    for (std::size_t j = 0; j < nf; ++j) {
        auto key = b.faces[j].boundary;
        std::sort(key.begin(), key.end());
        b_face_index[key] = int(j);
    }

    std::vector<std::vector<int>> candidates;
    for (int refl = 0; refl < 2; ++refl) {         // traversal order reversed
        for (int sflip = 0; sflip < 2; ++sflip) {  // crossing signs flipped
            for (int r = 0; r < m; ++r) {
                std::map<int, int> dp_map, dp_seen;
                bool ok = true;
                for (int i = 0; i < m && ok; ++i) {
                    auto [la, sa] = wa[i];
                    int bi = refl ? (2 * m - 1 - (i + r)) % m : (i + r) % m;
                    auto [lb, sb] = wb[bi];
                    if (sflip) sb = -sb;
                    if (sa != sb) ok = false;
                    auto it = dp_map.find(la);
                    if (it == dp_map.end()) {
                        if (dp_seen.count(lb)) ok = false;
                        dp_map[la] = lb;
                        dp_seen[lb] = la;
                    } else if (it->second != lb) {
                        ok = false;
                    }
                }
                if (!ok) continue;
                // arc k of A spans visits k -> k+1; a sign flip means the
                // correspondence reverses plane orientation, so face walks
                // traverse matched arcs the other way
                std::vector<int> arc_map(m);
                for (int k = 0; k < m; ++k)
                    arc_map[k] = refl ? (3 * m - 2 - (k + r)) % m : (k + r) % m;
                int dir_flip = sflip ? -1 : 1;
                std::vector<int> pi(nf, -1);
                std::vector<int> used(nf, 0);
                bool good = true;
                for (std::size_t i = 0; i < nf && good; ++i) {
                    auto key = mapped_boundary(a.faces[i], arc_map, dir_flip);
                    auto it = b_face_index.find(key);
                    if (it == b_face_index.end() || used[it->second]) good = false;
                    else {
                        pi[i] = it->second;
                        used[it->second] = 1;
                    }
                }
                if (good && std::find(candidates.begin(), candidates.end(), pi) ==
                                candidates.end())
                    candidates.push_back(std::move(pi));
            }
        }
    }
    require(!candidates.empty(), Errc::combinatorics_mismatch,
            "no face bijection is compatible with the crossing sequence");

    // deterministic pick: largest faces first, then lowest boundary arc index
    std::vector<std::size_t> order(nf);
    for (std::size_t i = 0; i < nf; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (a.faces[x].area != a.faces[y].area) return a.faces[x].area > a.faces[y].area;
        return a.faces[x].boundary < a.faces[y].boundary;
    });
    auto rank = [&](const std::vector<int>& pi) {
        std::vector<std::pair<double, int>> key;
        for (std::size_t i : order) {
            int minarc = 1 << 30;
            for (auto [arc, dir] : b.faces[pi[i]].boundary) minarc = std::min(minarc, arc);
            key.push_back({-b.faces[pi[i]].area, minarc});
        }
        return key;
    };
    std::size_t best = 0;
    auto best_key = rank(candidates[0]);
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        auto k = rank(candidates[c]);
        if (k < best_key) {
            best_key = k;
            best = c;
        }
    }
    corr.a_to_b = candidates[best];
    for (std::size_t i = 0; i < nf; ++i) corr.area_b[i] = b.faces[corr.a_to_b[i]].area;
    return corr;
}

AreaCheckReport check_disk_areas(const DiskCorrespondence& corr, double tol) {
    AreaCheckReport rep;
    rep.mismatch.resize(corr.a_to_b.size());
    for (std::size_t i = 0; i < corr.a_to_b.size(); ++i) {
        rep.mismatch[i] = std::abs(corr.area_a[i] - corr.area_b[i]) / corr.area_a[i];
        rep.max_mismatch = std::max(rep.max_mismatch, rep.mismatch[i]);
    }
    rep.ok = rep.max_mismatch <= tol;
    return rep;
}

} // namespace isoflow
