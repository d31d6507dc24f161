#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "conicfem/conic.hpp"

using namespace conicfem;

namespace {

const RationalArc kQuarter{{1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, std::sqrt(2.0) / 2.0};

}  // namespace

TEST_CASE("quarter circle arc stays on the unit circle") {
    CHECK(dist(eval_arc(kQuarter, 0.0), kQuarter.p0) < 1e-15);
    CHECK(dist(eval_arc(kQuarter, 1.0), kQuarter.p2) < 1e-15);
    for (int n = 0; n <= 64; ++n) {
        const Point p = eval_arc(kQuarter, n / 64.0);
        CHECK(p.x * p.x + p.y * p.y == doctest::Approx(1.0).epsilon(1e-14));
    }
    const Point sh = shoulder_point(kQuarter);
    CHECK(sh.x == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    CHECK(sh.y == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    CHECK(dist(sh, eval_arc(kQuarter, 0.5)) < 1e-14);
}

TEST_CASE("arc tangent matches finite differences") {
    for (double t : {0.1, 0.37, 0.5, 0.81}) {
        const double h = 1e-7;
        const Point fd = (0.5 / h) * (eval_arc(kQuarter, t + h) - eval_arc(kQuarter, t - h));
        const Point an = arc_tangent(kQuarter, t);
        CHECK(an.x == doctest::Approx(fd.x).epsilon(1e-6));
        CHECK(an.y == doctest::Approx(fd.y).epsilon(1e-6));
    }
}

TEST_CASE("implicitization of the quarter circle") {
    const QuadraticForm q = implicitize(kQuarter, {0.0, 0.0});
    CHECK(q.w110 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.w101 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.w011 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.w002 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.mu == doctest::Approx(1.0).epsilon(1e-14));
    // q is exactly 1 - x^2 - y^2.
    for (const Point x : {Point{0.3, 0.2}, Point{0.9, 0.1}, Point{0.5, 0.5}}) {
        CHECK(q.eval(x) == doctest::Approx(1.0 - x.x * x.x - x.y * x.y).epsilon(1e-13));
    }
    // Tangency at the chord endpoints: derivative of q along P0->P1 and
    // P2->P1 vanishes there.
    const BBPatch qp = q.as_patch();
    const double h = 1e-6;
    const Point d1 = 1.0 / norm(kQuarter.p1 - kQuarter.p0) * (kQuarter.p1 - kQuarter.p0);
    const Point d2 = 1.0 / norm(kQuarter.p1 - kQuarter.p2) * (kQuarter.p1 - kQuarter.p2);
    const Point g1 = grad_bb(qp, kQuarter.p0);
    const Point g2 = grad_bb(qp, kQuarter.p2);
    (void)h;
    CHECK(std::abs(dot(g1, d1)) < 1e-12);
    CHECK(std::abs(dot(g2, d2)) < 1e-12);
}

TEST_CASE("ray heights of the quarter circle pie") {
    const QuadraticForm q = implicitize(kQuarter, {0.0, 0.0});
    CHECK(ray_height(q, 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ray_height(q, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(ray_height(q, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    // Phi(tau, phi(tau)) lies on the circle for any tau.
    for (int n = 0; n <= 32; ++n) {
        const double tau = n / 32.0;
        const double t = ray_height(q, tau);
        const Point dir = (1.0 - tau) * q.tstar.v1 + tau * q.tstar.v2 - q.tstar.v3;
        const Point p = q.tstar.v3 + t * dir;
        CHECK(p.x * p.x + p.y * p.y == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("subdivision reproduces the same conic") {
    auto [left, right] = subdivide_arc(kQuarter);
    CHECK(left.beta == doctest::Approx(std::sqrt((1.0 + kQuarter.beta) / 2.0)));
    CHECK(dist(left.p0, kQuarter.p0) < 1e-15);
    CHECK(dist(right.p2, kQuarter.p2) < 1e-15);
    CHECK(dist(left.p2, right.p0) < 1e-15);
    for (int n = 0; n <= 16; ++n) {
        const double t = n / 16.0;
        const Point pl = eval_arc(left, t);
        const Point pr = eval_arc(right, t);
        CHECK(pl.x * pl.x + pl.y * pl.y == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(pr.x * pr.x + pr.y * pr.y == doctest::Approx(1.0).epsilon(1e-13));
    }
    // Children of an eighth-circle arc carry weight cos(pi/8).
    CHECK(left.beta == doctest::Approx(std::cos(M_PI / 8.0)).epsilon(1e-14));
}

TEST_CASE("implicit form vanishes along random admissible arcs") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int accepted = 0;
    while (accepted < 50) {
        RationalArc a;
        a.p0 = {2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0};
        a.p2 = {2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0};
        a.p1 = {2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0};
        a.beta = 0.3 + 2.7 * u(rng);
        // v3 opposite the bulge: mirror P1 across the chord midpoint.
        const Point v3 = a.p0 + a.p2 - a.p1;
        QuadraticForm q;
        try {
            q = implicitize(a, v3);
        } catch (const GeometryError&) {
            continue;
        }
        if (q.mu < 1e-3 || q.mu > 1e3) continue;  // keep well-conditioned samples
        ++accepted;
        for (int n = 0; n <= 64; ++n) {
            CHECK(std::abs(q.eval(eval_arc(a, n / 64.0))) < 1e-10);
        }
    }
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(eval_arc({{0, 0}, {1, 1}, {2, 2}, 1.0}, 0.5), GeometryError);
    CHECK_THROWS_AS(eval_arc({{0, 0}, {1, 1}, {0, 2}, -1.0}, 0.5), GeometryError);
    // P1 on the chord line.
    RationalArc bad{{1, 0}, {0.5, 0.5}, {0, 1}, 1.0};
    CHECK_THROWS_AS(implicitize(bad, {0, 0}), GeometryError);
    // v3 inside the circle but beyond the chord: the wedge from v3 crosses
    // the conic, so the form cannot stay positive (mu < 0).
    CHECK_THROWS_AS(implicitize(kQuarter, {0.8, 0.55}), GeometryError);
    // v3 on the conic itself: normalization q(v3) = 1 is impossible.
    CHECK_THROWS_AS(implicitize(kQuarter, {-1.0, 0.0}), GeometryError);
}
