#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "conicfem/mesh.hpp"

using namespace conicfem;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Fan of the unit disk: four quarter-circle pies around the origin.
CurvedTriangulation disk_fan() {
    CurvedTriangulation m;
    m.vertices = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {0, 0}};
    const double b = kSqrt2 / 2.0;
    m.arcs = {
        {{1, 0}, {1, 1}, {0, 1}, b},
        {{0, 1}, {-1, 1}, {-1, 0}, b},
        {{-1, 0}, {-1, -1}, {0, -1}, b},
        {{0, -1}, {1, -1}, {1, 0}, b},
    };
    m.triangles = {
        {{0, 1, 4}, ArcRef{0, false}},
        {{1, 2, 4}, ArcRef{1, false}},
        {{2, 3, 4}, ArcRef{2, false}},
        {{3, 0, 4}, ArcRef{3, false}},
    };
    m.finalize();
    return m;
}

}  // namespace

TEST_CASE("disk fan: classification and validation") {
    const CurvedTriangulation m = disk_fan();
    CHECK(m.count(TriClass::pie) == 4);
    CHECK(m.count(TriClass::buffer) == 0);
    CHECK(m.count(TriClass::ordinary) == 0);
    CHECK(m.edges.size() == 8);
    for (int v = 0; v < 4; ++v) CHECK(m.boundary_vertex[v]);
    CHECK(!m.boundary_vertex[4]);
    CHECK(m.segments.empty());

    const auto violations = validate_conditions(m);
    for (const auto& v : violations) INFO(v);
    CHECK(violations.empty());

    // Implicit forms all describe the unit circle.
    for (int t = 0; t < 4; ++t) {
        REQUIRE(m.qforms[t].has_value());
        CHECK(m.qforms[t]->eval(Point{0.6, 0.8}) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(m.qforms[t]->eval(Point{0, 0}) == doctest::Approx(1.0));
    }
}

TEST_CASE("disk fan: uniform refinement") {
    const CurvedTriangulation m = disk_fan();
    const CurvedTriangulation f = refine_uniform(m);
    CHECK(f.triangles.size() == 16);
    CHECK(f.count(TriClass::pie) == 8);
    CHECK(f.count(TriClass::buffer) == 4);
    CHECK(f.count(TriClass::ordinary) == 4);
    // One new vertex per edge, curved edges included.
    CHECK(f.vertices.size() == m.vertices.size() + m.edges.size());
    CHECK(validate_conditions(f).empty());

    // All child arcs still trace the unit circle.
    for (const auto& arc : f.arcs) {
        CHECK(arc.beta == doctest::Approx(std::cos(M_PI / 8)).epsilon(1e-13));
        for (int s = 0; s <= 10; ++s) {
            CHECK(norm(eval_arc(arc, s / 10.0)) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    const CurvedTriangulation f2 = refine_uniform(f);
    CHECK(f2.triangles.size() == 64);
    CHECK(f2.count(TriClass::pie) == 16);
    CHECK(f2.mesh_size() < f.mesh_size());
    CHECK(f.mesh_size() < m.mesh_size());
}

TEST_CASE("straight meshes: classification, red refinement, violation (b)") {
    // Unit square fanned from its center: conforming, all ordinary.
    CurvedTriangulation sq;
    sq.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
    sq.triangles = {{{0, 1, 4}, {}}, {{1, 2, 4}, {}}, {{2, 3, 4}, {}}, {{3, 0, 4}, {}}};
    sq.finalize();
    CHECK(sq.count(TriClass::ordinary) == 4);
    CHECK(validate_conditions(sq).empty());

    const CurvedTriangulation rf = refine_uniform(sq);
    CHECK(rf.triangles.size() == 16);
    CHECK(rf.count(TriClass::ordinary) == 16);
    CHECK(rf.vertices.size() == sq.vertices.size() + sq.edges.size());

    // Two triangles sharing the square's diagonal: the diagonal is an
    // interior edge with both endpoints on the boundary.
    CurvedTriangulation bad;
    bad.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    bad.triangles = {{{0, 1, 2}, {}}, {{0, 2, 3}, {}}};
    bad.finalize();
    CHECK(bad.count(TriClass::ordinary) == 2);
    const auto violations = validate_conditions(bad);
    REQUIRE(!violations.empty());
    bool found_b = false;
    for (const auto& v : violations) found_b = found_b || v.find("(b)") != std::string::npos;
    CHECK(found_b);
}

TEST_CASE("straight neighbor of a pie triangle is tagged buffer") {
    CurvedTriangulation m;
    m.vertices = {{1, 0}, {0, 1}, {0, 0}, {0.7, -0.7}};
    m.arcs = {{{1, 0}, {1, 1}, {0, 1}, kSqrt2 / 2.0}};
    m.triangles = {{{0, 1, 2}, ArcRef{0, false}}, {{3, 0, 2}, {}}};
    m.finalize();
    CHECK(m.classification[0] == TriClass::pie);
    CHECK(m.classification[1] == TriClass::buffer);
    CHECK(m.neighbor(1, 0) == 0);  // across edge (v0, v2) of triangle 1
}

TEST_CASE("reversed arc reference") {
    CurvedTriangulation m = disk_fan();
    // Re-store arc 0 reversed; triangle 0 must still finalize identically.
    std::swap(m.arcs[0].p0, m.arcs[0].p2);
    m.triangles[0].arc = ArcRef{0, true};
    m.finalize();
    CHECK(m.classification[0] == TriClass::pie);
    CHECK(dist(m.pie_arcs[0]->p0, m.vertices[0]) < 1e-15);
    CHECK(dist(m.pie_arcs[0]->p2, m.vertices[1]) < 1e-15);
    CHECK(validate_conditions(m).empty());
}

TEST_CASE("json round trip") {
    const CurvedTriangulation m = disk_fan();
    const std::string text = mesh_to_json(m);
    const CurvedTriangulation r = mesh_from_json(text);
    REQUIRE(r.vertices.size() == m.vertices.size());
    for (size_t i = 0; i < m.vertices.size(); ++i) {
        CHECK(dist(r.vertices[i], m.vertices[i]) <= 1e-15 * (1.0 + norm(m.vertices[i])));
    }
    REQUIRE(r.arcs.size() == m.arcs.size());
    for (size_t i = 0; i < m.arcs.size(); ++i) {
        CHECK(r.arcs[i].beta == doctest::Approx(m.arcs[i].beta).epsilon(1e-15));
        CHECK(dist(r.arcs[i].p1, m.arcs[i].p1) < 1e-14);
    }
    REQUIRE(r.triangles.size() == m.triangles.size());
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        CHECK(r.triangles[t].v == m.triangles[t].v);
        CHECK(r.triangles[t].arc.has_value() == m.triangles[t].arc.has_value());
    }
    CHECK(r.count(TriClass::pie) == 4);
}

TEST_CASE("load errors") {
    CHECK_THROWS_AS(mesh_from_json("not json"), IoError);
    CHECK_THROWS_AS(mesh_from_json("{\"triangles\": []}"), IoError);  // vertices missing
    CHECK_THROWS_AS(
        mesh_from_json("{\"vertices\": [[0,0],[1,0]], \"triangles\": [{\"v\":[0,1,5]}]}"),
        ValidationError);  // vertex index out of range

    CurvedTriangulation dup;
    dup.vertices = {{0, 0}, {1, 0}, {0, 1}, {1e-14, 1e-14}};
    dup.triangles = {{{0, 1, 2}, {}}};
    CHECK_THROWS_AS(dup.finalize(), ValidationError);

    // Arc endpoints that do not match the curved edge.
    CurvedTriangulation mis;
    mis.vertices = {{1, 0}, {0, 1}, {0, 0}};
    mis.arcs = {{{0, 1}, {1, 1}, {1, 0}, kSqrt2 / 2.0}};  // stored backwards
    mis.triangles = {{{0, 1, 2}, ArcRef{0, false}}};
    CHECK_THROWS_AS(mis.finalize(), ValidationError);

    // Edge shared by three triangles.
    CurvedTriangulation over;
    over.vertices = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {-1, 0.5}};
    over.triangles = {{{0, 1, 2}, {}}, {{1, 3, 2}, {}}, {{0, 2, 4}, {}}, {{0, 1, 4}, {}}};
    // (0,1) would be fine; make (0,2) over-shared instead.
    over.triangles[3] = {{0, 2, 3}, {}};
    CHECK_THROWS_AS(over.finalize(), ValidationError);
}

TEST_CASE("shape constants: equilateral triangle") {
    CurvedTriangulation m;
    m.vertices = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}};
    m.triangles = {{{0, 1, 2}, {}}};
    m.finalize();
    const ShapeReport rep = shape_constants(m);
    CHECK(rep.R == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(rep.A == 0.0);  // no pie triangles
    CHECK(rep.B == 0.0);
}

TEST_CASE("shape constants: disk fan pies") {
    const ShapeReport rep = shape_constants(disk_fan());
    // Quarter-circle pie: the arc bulges away from the interior vertex, so
    // rho = inradius(T*) = 1/(2+sqrt 2) and h = sqrt 2.
    CHECK(rep.R == doctest::Approx(2.0 + 2.0 * kSqrt2).epsilon(1e-10));
    // q = 1 - x^2 - y^2 attains its maximum 1 at the center.
    CHECK(rep.A == doctest::Approx(1.0).epsilon(1e-12));
    // grad q . (v - z)/|v - z| = 2(x^2 + y^2) = 2 on the circle.
    CHECK(rep.B == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("shape constants: inward-bulging parabola pie uses the clipped region") {
    // Arc of y = 1 - x^2 from (1,0) to (-1,0); interior vertex above the
    // apex, so the curve dips inside T* and rho comes from the clipped
    // polygon.  Chebyshev center sits on the symmetry axis at
    // y0 = (3+sqrt 10)/(1+sqrt 10), radius y0 - 1.
    CurvedTriangulation m;
    m.vertices = {{1, 0}, {-1, 0}, {0, 3}};
    m.arcs = {{{1, 0}, {0, 2}, {-1, 0}, 1.0}};
    m.triangles = {{{0, 1, 2}, ArcRef{0, false}}};
    m.finalize();
    REQUIRE(m.qforms[0].has_value());
    // Sanity: the implicit form vanishes on the parabola.
    for (int s = 0; s <= 16; ++s) {
        const double x = -1.0 + 2.0 * s / 16.0;
        CHECK(std::abs(m.qforms[0]->eval(Point{x, 1.0 - x * x})) < 1e-12);
    }
    const ShapeReport rep = shape_constants(m);
    const double s10 = std::sqrt(10.0);
    const double rho = (3.0 + s10) / (1.0 + s10) - 1.0;
    CHECK(rep.R == doctest::Approx(s10 / rho).epsilon(2e-3));
    CHECK(rep.A == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.B > 0.0);
}

TEST_CASE("boundary loop integrity is reported") {
    // Two disjoint triangles: two boundary loops.
    CurvedTriangulation m;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5, 6}};
    m.triangles = {{{0, 1, 2}, {}}, {{3, 4, 5}, {}}};
    m.finalize();
    const auto violations = validate_conditions(m);
    bool found = false;
    for (const auto& v : violations) found = found || v.find("closed loop") != std::string::npos;
    CHECK(found);
}
