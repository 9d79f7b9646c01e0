#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "isoflow/errors.hpp"
#include "isoflow/field.hpp"
#include "isoflow/integrate.hpp"
#include "isoflow/isotopy.hpp"
#include "isoflow/numeric.hpp"
#include "oracles.hpp"

using namespace isoflow;

namespace {

bool throws_code(Errc want, const std::function<void()>& f) {
    try {
        f();
    } catch (const IsoflowError& e) {
        return e.code() == want;
    }
    return false;
}

struct Rng {
    std::mt19937 mt;
    explicit Rng(std::uint32_t seed) : mt(seed) {}
    double uni() { return (double(mt()) + 0.5) / 4294967296.0; }
    double gauss() {
        double u1 = uni(), u2 = uni();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
};

// quadratic-form Hamiltonian under a radial plateau cutoff, gradient by hand
ScalarField random_hamiltonian(std::uint32_t seed) {
    Rng rng(seed);
    // moderate amplitudes: the determinant invariant needs the flow condition
    // number exp(Lipschitz * duration) to stay small
    double c1 = 0.12 * rng.gauss(), c2 = 0.12 * rng.gauss(), c3 = 0.07 * rng.gauss();
    double c4 = 0.07 * rng.gauss(), c5 = 0.05 * rng.gauss();
    double R = 1.5 + rng.uni();
    double phase = rng.uni();
    auto mod = [phase](double t) { return 1 + 0.5 * std::sin(two_pi * (t + phase)); };
    auto poly = [=](Vec2 p) {
        return c1 * p.x + c2 * p.y + c3 * p.x * p.y + c4 * (p.x * p.x - p.y * p.y) / 2 +
               c5 * (p.x * p.x + p.y * p.y) / 2;
    };
    auto poly_grad = [=](Vec2 p) {
        return Vec2{c1 + c3 * p.y + c4 * p.x + c5 * p.x, c2 + c3 * p.x - c4 * p.y + c5 * p.y};
    };
    auto value = [=](Vec2 p, double t) {
        return mod(t) * poly(p) * plateau(p.norm(), 0.4 * R, R);
    };
    auto grad = [=](Vec2 p, double t) {
        double r = p.norm();
        double cut = plateau(r, 0.4 * R, R);
        Vec2 g = poly_grad(p) * cut;
        if (r > 1e-12) g = g + p * (poly(p) * plateau_d(r, 0.4 * R, R) / r);
        return g * mod(t);
    };
    return {value, grad, SupportDisc{{0, 0}, R}};
}

// classic fixed-step RK4, the self-consistency reference
Vec2 rk4(const VectorFieldT& v, Vec2 x, double t0, double t1, int steps) {
    double h = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i) {
        double t = t0 + i * h;
        Vec2 k1 = v(x, t);
        Vec2 k2 = v(x + k1 * (h / 2), t + h / 2);
        Vec2 k3 = v(x + k2 * (h / 2), t + h / 2);
        Vec2 k4 = v(x + k3 * h, t + h);
        x = x + (k1 + k2 * 2 + k3 * 2 + k4) * (h / 6);
    }
    return x;
}

ScalarField radial_quadratic() {
    auto value = [](Vec2 p, double) { return 0.5 * p.norm2() * plateau(p.norm(), 2, 4); };
    return {value, SupportDisc{{0, 0}, 4}};
}

} // namespace

TEST_CASE("quadratic Hamiltonian gives the rotation field on its plateau") {
    VectorFieldT f = hamiltonian_field(radial_quadratic());
    CHECK(f.hamiltonian());
    for (Vec2 p : {Vec2{1, 0}, Vec2{0.3, -0.4}, Vec2{-1.2, 0.7}, Vec2{0, 1.9}}) {
        Vec2 got = f(p, 0.37);
        CHECK(std::abs(got.x - -p.y) < 1e-9);
        CHECK(std::abs(got.y - p.x) < 1e-9);
    }
    // and vanishes identically beyond the support
    CHECK(f({5, 1}, 0).norm() == 0);
    CHECK(f({-4.2, 1.4}, 0.5).norm() < 1e-12);
}

TEST_CASE("zero Hamiltonian gives the zero field") {
    VectorFieldT f = hamiltonian_field(ScalarField{});
    CHECK(f.zero());
    CHECK(f({0.3, 0.4}, 0.2).norm() == 0);
    CHECK(dist(integrate(f, {0.3, 0.4}, 0, 1), {0.3, 0.4}) == 0);
}

TEST_CASE("linear Hamiltonian translates vertically at unit speed") {
    auto value = [](Vec2 p, double) { return p.x * plateau(p.norm(), 1.5, 3); };
    ScalarField H{value, SupportDisc{{0, 0}, 3}};
    VectorFieldT f = hamiltonian_field(H);
    for (Vec2 p : {Vec2{0, 0}, Vec2{0.5, -0.5}, Vec2{-1, 1}}) {
        // oracle: rotate the finite-difference gradient by a quarter turn
        Vec2 g = oracles::fd_gradient([&](Vec2 q) { return H(q, 0); }, p, 1e-4);
        Vec2 want{-g.y, g.x};
        Vec2 got = f(p, 0);
        CHECK(dist(got, want) < 1e-6);
        CHECK(std::abs(got.x) < 1e-9);
        CHECK(std::abs(got.y - 1) < 1e-9);
    }
}

TEST_CASE("gradient consistency and perpendicularity on random Hamiltonians") {
    for (std::uint32_t seed : {11u, 23u, 37u}) {
        ScalarField H = random_hamiltonian(seed);
        VectorFieldT f = hamiltonian_field(H);
        Box2 box;
        box.expand({-2, -2});
        box.expand({2, 2});
        for (const Vec2& p : halton_points(40, box, seed))
            for (double t : {0.15, 0.6}) {
                Vec2 g = H.gradient(p, t);
                Vec2 fd = oracles::fd_gradient([&](Vec2 q) { return H(q, t); }, p, 1e-4);
                CHECK(dist(g, fd) < std::max(1e-6, 1e-4 * g.norm()));
                CHECK(std::abs(dot(f(p, t), g)) <= 1e-8 * std::max(g.norm2(), 1e-12));
            }
    }
}

TEST_CASE("integrating the zero field holds every point still") {
    VectorFieldT zero;
    CHECK(dist(integrate(zero, {2, -3}, 0, 1), {2, -3}) == 0);
    std::vector<std::pair<double, Vec2>> traj;
    IntegrateOptions opt;
    opt.trajectory = &traj;
    CHECK(dist(integrate(zero, {0, 0}, 0.2, 0.8, opt), {0, 0}) == 0);
}

TEST_CASE("quarter turn of the rotation field lands on the axis") {
    VectorFieldT f = hamiltonian_field(radial_quadratic());
    Vec2 end = integrate(f, {1, 0}, 0, pi / 2);
    CHECK(dist(end, {0, 1}) < 1e-8);
    // flow property: split the interval anywhere
    Vec2 mid = integrate(f, {1, 0}, 0, 0.4);
    CHECK(dist(integrate(f, mid, 0.4, pi / 2), end) < 1e-8);
}

TEST_CASE("endpoints agree with a fixed-step reference on 100 random fields") {
    int tested = 0;
    for (std::uint32_t seed = 1; seed <= 100; ++seed) {
        ScalarField H = random_hamiltonian(seed);
        VectorFieldT f = hamiltonian_field(H);
        Rng rng(seed * 977 + 5);
        Vec2 x0{2 * rng.uni() - 1, 2 * rng.uni() - 1};
        Vec2 got = integrate(f, x0, 0, 1);
        Vec2 ref_h = rk4(f, x0, 0, 1, 2000);
        Vec2 ref_h2 = rk4(f, x0, 0, 1, 4000);
        REQUIRE(dist(ref_h, ref_h2) < 1e-8); // reference is converged
        CHECK(dist(got, ref_h2) < 1e-7);
        ++tested;
    }
    CHECK(tested == 100);
}

TEST_CASE("points outside the support never move") {
    ScalarField H = random_hamiltonian(3);
    VectorFieldT f = hamiltonian_field(H);
    double R = H.support().radius;
    Vec2 far{R + 0.4, R};
    CHECK(dist(integrate(f, far, 0, 1), far) == 0);
    auto [y, jac] = integrate_with_jacobian(f, far, 0, 1);
    CHECK(dist(y, far) == 0);
    CHECK(jac.det() == 1.0);
}

TEST_CASE("jacobian_det: identity, rotation segment, scaling flow") {
    CHECK(jacobian_det(Isotopy{}, {0.4, -2}, 1) == 1.0);

    // rotation exercised through the field route, not the closed-form map
    auto piece = std::make_shared<FieldFlowPiece>(hamiltonian_field(radial_quadratic()));
    Isotopy rot = Isotopy::single(piece);
    for (double t : {0.3, 0.7, 1.0})
        for (Vec2 p : {Vec2{1, 0}, Vec2{-0.6, 1.1}, Vec2{0.2, 0.1}})
            CHECK(std::abs(jacobian_det(rot, p, t) - 1) < 1e-9);

    VectorFieldT scaling{[](Vec2 p, double) { return Vec2{p.x, 0}; }, SupportDisc{}};
    Isotopy sc = Isotopy::single(std::make_shared<FieldFlowPiece>(scaling));
    CHECK(std::abs(jacobian_det(sc, {0.7, 0.3}, 1) - std::exp(1.0)) < 1e-7);
}

TEST_CASE("composing an isotopy with its inverse is the identity") {
    Isotopy a = Isotopy::single(
        std::make_shared<FieldFlowPiece>(hamiltonian_field(random_hamiltonian(42))));
    std::vector<Isotopy> parts{a, a};
    std::vector<Direction> dirs{Direction::forward, Direction::inverse};
    Isotopy round_trip = compose_invert(parts, dirs);
    Box2 box;
    box.expand({-2, -2});
    box.expand({2, 2});
    for (const Vec2& p : halton_points(100, box, 9)) {
        CHECK(dist(round_trip(p), p) < 1e-7);
    }
}

TEST_CASE("translations compose to the vector sum") {
    Isotopy tu = Isotopy::single(make_translation_piece({0.3, -1.2}));
    Isotopy tw = Isotopy::single(make_translation_piece({-2.1, 0.4}));
    std::vector<Isotopy> parts{tu, tw};
    std::vector<Direction> dirs{Direction::forward, Direction::forward};
    Isotopy both = compose_invert(parts, dirs);
    for (Vec2 p : {Vec2{0, 0}, Vec2{5, 5}, Vec2{-1, 2}})
        CHECK(dist(both(p), p + Vec2{-1.8, -0.8}) < 1e-9);
    // halfway through only the first translation has acted
    CHECK(dist(both({0, 0}, 0.5), {0.3, -1.2}) < 1e-9);
}

TEST_CASE("three Hamiltonian segments keep unit determinant everywhere") {
    std::vector<Isotopy> parts;
    for (std::uint32_t seed : {5u, 6u, 7u})
        parts.push_back(Isotopy::single(
            std::make_shared<FieldFlowPiece>(hamiltonian_field(random_hamiltonian(seed)))));
    std::vector<Direction> dirs{Direction::forward, Direction::inverse, Direction::forward};
    Isotopy iso = compose_invert(parts, dirs);
    REQUIRE(iso.segments().size() == 3);
    Box2 box;
    box.expand({-2, -2});
    box.expand({2, 2});
    for (const Vec2& p : halton_points(50, box, 4))
        CHECK(std::abs(jacobian_det(iso, p, 1) - 1) < 1e-7);
    for (const Vec2& p : halton_points(10, box, 8))
        for (double t : {0.21, 0.5, 0.83})
            CHECK(std::abs(jacobian_det(iso, p, t) - 1) < 1e-7);
}

TEST_CASE("variational jacobian matches differencing the flow map") {
    // independent oracle: central differences of the endpoint map itself
    std::vector<Isotopy> parts;
    for (std::uint32_t seed : {5u, 6u, 7u})
        parts.push_back(Isotopy::single(
            std::make_shared<FieldFlowPiece>(hamiltonian_field(random_hamiltonian(seed)))));
    std::vector<Direction> dirs{Direction::forward, Direction::inverse, Direction::forward};
    Isotopy iso = compose_invert(parts, dirs);
    const double h = 1e-4;
    for (Vec2 p : {Vec2{0.3, -0.9}, Vec2{-1.1, 0.2}, Vec2{0.7, 0.6}}) {
        auto [end, jac] = iso.apply_with_jacobian(p, 0, 1);
        Vec2 dx = (iso({p.x + h, p.y}) - iso({p.x - h, p.y})) * (0.5 / h);
        Vec2 dy = (iso({p.x, p.y + h}) - iso({p.x, p.y - h})) * (0.5 / h);
        CHECK(std::abs(jac.a - dx.x) < 5e-5);
        CHECK(std::abs(jac.c - dx.y) < 5e-5);
        CHECK(std::abs(jac.b - dy.x) < 5e-5);
        CHECK(std::abs(jac.d - dy.y) < 5e-5);
        // joint 6-dim integration steps differently from the plain 2-dim run
        CHECK(dist(end, iso(p)) < 1e-8);
    }
}

TEST_CASE("flow property splits arbitrary time intervals") {
    Isotopy iso = Isotopy::single(
        std::make_shared<FieldFlowPiece>(hamiltonian_field(random_hamiltonian(17))));
    Vec2 p{0.4, -0.3};
    Vec2 direct = iso.apply(p, 0.2, 0.9);
    Vec2 stepped = iso.apply(iso.apply(p, 0.2, 0.55), 0.55, 0.9);
    CHECK(dist(direct, stepped) < 1e-8);
    // and running backward undoes the flow
    CHECK(dist(iso.apply(direct, 0.9, 0.2), p) < 1e-8);
}

TEST_CASE("map pieces agree with integrating their fields") {
    auto rot_map = make_rotation_piece(1.1, {0.2, -0.3});
    Isotopy via_map = Isotopy::single(rot_map);
    VectorFieldT field{[](Vec2 p, double) { return (p - Vec2{0.2, -0.3}).perp() * 1.1; },
                       SupportDisc{},
                       true};
    Isotopy via_field = Isotopy::single(std::make_shared<FieldFlowPiece>(field));
    for (Vec2 p : {Vec2{1, 1}, Vec2{-0.5, 0.8}})
        for (double t : {0.25, 0.6, 1.0}) {
            CHECK(dist(via_map(p, t), via_field(p, t)) < 1e-8);
            auto [ym, jm] = via_map.apply_with_jacobian(p, 0.1, t);
            auto [yf, jf] = via_field.apply_with_jacobian(p, 0.1, t);
            CHECK(dist(ym, yf) < 1e-8);
            CHECK((jm - jf).max_abs() < 1e-7);
        }
    // inverse direction through the map route
    Isotopy undo = via_map.inverse();
    Vec2 q = via_map({1, 1});
    CHECK(dist(undo(q), {1, 1}) < 1e-12);
}

TEST_CASE("evaluation at time zero is the identity") {
    Isotopy iso = Isotopy::single(
        std::make_shared<FieldFlowPiece>(hamiltonian_field(random_hamiltonian(8))));
    for (Vec2 p : {Vec2{0, 0}, Vec2{1.2, -0.7}})
        CHECK(dist(iso(p, 0), p) == 0);
}

TEST_CASE("segment validation rejects malformed schedules") {
    auto piece = make_translation_piece({1, 0});
    CHECK(throws_code(Errc::precondition_failure, [&] {
        Isotopy(std::vector<Segment>{{0.5, 0.4, false, piece}});
    }));
    CHECK(throws_code(Errc::precondition_failure, [&] {
        Isotopy(std::vector<Segment>{{0, 0.6, false, piece}, {0.5, 1, false, piece}});
    }));
    CHECK(throws_code(Errc::precondition_failure, [&] {
        Isotopy(std::vector<Segment>{{0, 1.2, false, piece}});
    }));
    CHECK(throws_code(Errc::precondition_failure, [&] {
        Isotopy(std::vector<Segment>{{0, 1, false, nullptr}});
    }));
}

TEST_CASE("leaving the configured box raises an error") {
    Isotopy iso = Isotopy::single(make_translation_piece({10, 0}));
    IntegrateOptions opt;
    opt.domain.expand({-1, -1});
    opt.domain.expand({1, 1});
    CHECK(throws_code(Errc::left_domain, [&] { iso.apply({0, 0}, 0, 1, opt); }));
    // a field-driven escape is caught mid-flight too
    VectorFieldT drift{[](Vec2, double) { return Vec2{3, 0}; }, SupportDisc{}};
    CHECK(throws_code(Errc::left_domain, [&] {
        integrate(drift, {0, 0}, 0, 1, opt);
    }));
}

TEST_CASE("trajectory sink records the advance of time") {
    VectorFieldT f = hamiltonian_field(radial_quadratic());
    std::vector<std::pair<double, Vec2>> traj;
    IntegrateOptions opt;
    opt.trajectory = &traj;
    integrate(f, {1, 0}, 0, 1, opt);
    REQUIRE(traj.size() >= 3);
    CHECK(traj.front().first == 0);
    CHECK(std::abs(traj.back().first - 1) < 1e-12);
    for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj[i].first > traj[i - 1].first);
    for (const auto& [t, p] : traj) CHECK(std::abs(p.norm() - 1) < 1e-8);
}

TEST_CASE("lipschitz estimates are finite and positive") {
    VectorFieldT f = hamiltonian_field(random_hamiltonian(12));
    double lip = f.lipschitz_estimate();
    CHECK(lip > 0);
    CHECK(lip < 1e3);
    CHECK(VectorFieldT{}.lipschitz_estimate() == 0);
}
