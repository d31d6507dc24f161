#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "conicfem/experiments.hpp"

using namespace conicfem;

namespace {

double fd_laplacian(const std::function<double(Point)>& f, Point p) {
    const double h = 1e-4;
    return (f({p.x + h, p.y}) + f({p.x - h, p.y}) + f({p.x, p.y + h}) + f({p.x, p.y - h}) -
            4.0 * f(p)) /
           (h * h);
}

Point fd_gradient(const std::function<double(Point)>& f, Point p) {
    const double h = 1e-6;
    return {(f({p.x + h, p.y}) - f({p.x - h, p.y})) / (2.0 * h),
            (f({p.x, p.y + h}) - f({p.x, p.y - h})) / (2.0 * h)};
}

}  // namespace

TEST_CASE("fit_arc recovers known conic arcs exactly") {
    const auto circle = [](Point p) { return p.x * p.x + p.y * p.y - 1.0; };
    const auto dcircle = [](Point p) { return Point{2.0 * p.x, 2.0 * p.y}; };
    const RationalArc quarter = fit_arc({1, 0}, {0, 1}, circle, dcircle);
    CHECK(quarter.p1.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(quarter.p1.y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(quarter.beta == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-13));
    for (int i = 0; i <= 32; ++i) {
        CHECK(std::abs(circle(eval_arc(quarter, i / 32.0))) <= 1e-12);
    }

    const auto right = [](Point p) { return p.x + p.y * p.y - 6.0; };
    const auto dright = [](Point p) { return Point{1.0, 2.0 * p.y}; };
    const RationalArc par = fit_arc({6, 0}, {2, 2}, right, dright);
    CHECK(par.p1.x == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(par.p1.y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(par.beta == doctest::Approx(1.0).epsilon(1e-13));
    for (int i = 0; i <= 32; ++i) {
        CHECK(std::abs(right(eval_arc(par, i / 32.0))) <= 1e-12);
    }

    // The ellipse is an affine circle; equal parameter steps give the
    // circle's weight cos(pi/8) on every octant arc.
    const auto ellipse = [](Point p) { return p.x * p.x + 6.25 * p.y * p.y - 1.0; };
    const auto dellipse = [](Point p) { return Point{2.0 * p.x, 12.5 * p.y}; };
    const Point a{std::cos(M_PI / 4), 0.4 * std::sin(M_PI / 4)};
    const RationalArc oct = fit_arc({1, 0}, a, ellipse, dellipse);
    CHECK(oct.beta == doctest::Approx(std::cos(M_PI / 8)).epsilon(1e-12));
    for (int i = 0; i <= 32; ++i) {
        CHECK(std::abs(ellipse(eval_arc(oct, i / 32.0))) <= 1e-12);
    }

    CHECK_THROWS_AS(fit_arc({1, 0}, {-1, 0}, circle, dcircle), GeometryError);
}

TEST_CASE("built-in meshes validate at every refinement level") {
    struct Entry {
        const char* name;
        CurvedTriangulation mesh;
        int pies, buffers, ordinary;
    };
    std::vector<Entry> entries;
    entries.push_back({"disk-fan", make_disk_fan(), 4, 0, 0});
    entries.push_back({"disk", make_disk_mesh(), 4, 4, 4});
    entries.push_back({"ellipse", make_ellipse_mesh(), 8, 8, 8});
    entries.push_back({"conic", make_conic_mesh(), 4, 4, 4});

    for (auto& e : entries) {
        INFO(e.name);
        CHECK(e.mesh.count(TriClass::pie) == e.pies);
        CHECK(e.mesh.count(TriClass::buffer) == e.buffers);
        CHECK(e.mesh.count(TriClass::ordinary) == e.ordinary);
        CurvedTriangulation m = e.mesh;
        double h = m.mesh_size();
        for (int level = 0; level < 3; ++level) {
            const auto violations = validate_conditions(m);
            for (const auto& v : violations) INFO(v);
            CHECK(violations.empty());
            if (level < 2) {
                m = refine_uniform(m);
                CHECK(m.mesh_size() < h);
                h = m.mesh_size();
            }
        }
    }
}

TEST_CASE("manufactured data: boundary traces, gradients, loads") {
    // Ellipse: u vanishes on the boundary, load = -lap u.
    for (int i = 0; i < 16; ++i) {
        const double th = 2.0 * M_PI * i / 16.0;
        CHECK(std::abs(ellipse_u({std::cos(th), 0.4 * std::sin(th)})) <= 1e-12);
    }
    const Point probes[] = {{0.3, 0.1}, {-0.5, 0.15}, {0.1, -0.3}, {0.7, 0.05}};
    for (const Point p : probes) {
        CHECK(fd_laplacian(ellipse_u, p) == doctest::Approx(-ellipse_load(p)).epsilon(1e-5));
        const Point g = fd_gradient(ellipse_u, p);
        CHECK(g.x == doctest::Approx(ellipse_grad_u(p).x).epsilon(1e-7));
        CHECK(g.y == doctest::Approx(ellipse_grad_u(p).y).epsilon(1e-7));
    }

    // Conic domain: u vanishes on all four boundary pieces.
    for (int i = 0; i <= 16; ++i) {
        const double x2 = -2.0 + 4.0 * i / 16.0;
        CHECK(std::abs(conic_u({6.0 - x2 * x2, x2})) <= 1e-12);
        CHECK(std::abs(conic_u({x2 * x2 - 6.0, x2})) <= 1e-12);
        const double x1 = -2.0 + 4.0 * i / 16.0;
        CHECK(conic_u({x1, 2.0}) == 0.0);
        CHECK(conic_u({x1, -2.0}) == 0.0);
    }
    const Point cprobes[] = {{0.5, 0.5}, {-3.0, 1.0}, {4.0, -0.5}, {0.0, 1.8}};
    for (const Point p : cprobes) {
        CHECK(fd_laplacian(conic_u, p) == doctest::Approx(-conic_load(p)).epsilon(1e-5));
        const Point g = fd_gradient(conic_u, p);
        CHECK(g.x == doctest::Approx(conic_grad_u(p).x).epsilon(1e-6).scale(1.0));
        CHECK(g.y == doctest::Approx(conic_grad_u(p).y).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("Bessel-root eigenvalue references") {
    CHECK(std::abs(bessel_j(0, 2.404825557696)) <= 1e-12);
    CHECK(bessel_j(0, 0.0) == doctest::Approx(1.0));
    CHECK(bessel_j(1, 0.0) == 0.0);

    const auto refs = disk_eigen_reference(15);
    REQUIRE(refs.size() == 15);
    CHECK(refs[0] == doctest::Approx(5.783185962947).epsilon(1e-10));
    // Multiplicity pattern of the leading eigenvalues.
    CHECK(refs[1] == doctest::Approx(refs[2]).epsilon(1e-13));
    CHECK(refs[3] == doctest::Approx(refs[4]).epsilon(1e-13));
    CHECK(refs[1] == doctest::Approx(3.831705970207512 * 3.831705970207512).epsilon(1e-10));
    CHECK(refs[5] == doctest::Approx(5.520078110286311 * 5.520078110286311).epsilon(1e-10));
    CHECK(refs[5] > refs[4]);
    for (size_t i = 1; i < refs.size(); ++i) CHECK(refs[i] >= refs[i - 1]);

    // Every reference comes from an actual Bessel root.
    for (const double lambda : refs) {
        const double r = std::sqrt(lambda);
        double best = 1.0;
        for (int m = 0; m <= 10; ++m) best = std::min(best, std::abs(bessel_j(m, r)));
        CHECK(best <= 1e-13);
    }
}

TEST_CASE("ellipse study: two levels, errors and sizes behave") {
    ExperimentSpec spec;
    spec.problem = Problem::ellipse_poisson;
    spec.degree = 2;
    spec.levels = 2;
    spec.quad = 8;
    const ConvergenceTable t = run_ellipse_poisson(spec);
    REQUIRE(t.rows.size() == 2);
    CHECK(!t.eigen);
    CHECK(t.rows[0].level == 0);
    CHECK(t.rows[1].level == 1);
    CHECK(t.rows[1].n > t.rows[0].n);
    CHECK(t.rows[1].h < t.rows[0].h);
    for (const auto& r : t.rows) {
        CHECK(r.l2 > 0.0);
        CHECK(r.h1 >= r.l2);
        CHECK(r.degree == 2);
    }
    CHECK(t.rows[1].l2 < 0.5 * t.rows[0].l2);
    CHECK(t.rows[1].h1 < t.rows[0].h1);
}

TEST_CASE("conic study: degree 6 solution is exact in the space") {
    ExperimentSpec spec;
    spec.problem = Problem::conic_poisson;
    spec.degree = 6;
    spec.levels = 1;
    spec.quad = 20;
    const ConvergenceTable t = run_conic_poisson(spec);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].l2 <= 1e-8);
    CHECK(t.rows[0].h1 <= 1e-8);
}

TEST_CASE("disk eigenvalue study: row layout and coarse accuracy") {
    ExperimentSpec spec;
    spec.problem = Problem::disk_eigen;
    spec.degree = 2;
    spec.levels = 1;
    const ConvergenceTable t = run_disk_eigen(spec);
    CHECK(t.eigen);
    REQUIRE(t.rows.size() == 15);
    for (int i = 0; i < 15; ++i) {
        CHECK(t.rows[i].eig_index == i + 1);
        if (i) CHECK(t.rows[i].lambda >= t.rows[i - 1].lambda);
        CHECK(t.rows[i].lambda > 0.0);
    }
    CHECK(t.rows[0].abs_error < 1.0);
    CHECK(t.rows[0].lambda == doctest::Approx(5.783185962947).epsilon(0.1));
}

TEST_CASE("p-refinement study fixes the twice-refined mesh") {
    ExperimentSpec spec;
    spec.problem = Problem::disk_eigen;
    spec.study = Study::p_refine;
    spec.degree_lo = 2;
    spec.degree_hi = 3;
    const ConvergenceTable t = run_disk_eigen(spec);
    REQUIRE(t.rows.size() == 30);
    for (const auto& r : t.rows) {
        CHECK(r.level == 2);
        CHECK(r.h == t.rows[0].h);
    }
    CHECK(t.rows[15].degree == 3);
    CHECK(t.rows[15].n > t.rows[0].n);
    CHECK(t.rows[15].abs_error < t.rows[0].abs_error);  // lambda_1 improves with d
}

TEST_CASE("custom problem reports solution norms from a mesh file") {
    const std::string path = "custom_fan.json";
    save_mesh(make_disk_fan(), path);
    ExperimentSpec spec;
    spec.problem = Problem::custom;
    spec.mesh_file = path;
    spec.degree = 2;
    spec.levels = 1;
    spec.quad = 16;
    const ConvergenceTable t = run_custom(spec);
    REQUIRE(t.rows.size() == 1);
    // u_h = (1 - x^2 - y^2)/4: squared L2 norm (2 pi / 16) int_0^1 (1-r^2)^2 r dr = pi/48.
    CHECK(t.rows[0].l2 == doctest::Approx(std::sqrt(M_PI / 48.0)).epsilon(1e-8));
    CHECK(t.rows[0].h1 > t.rows[0].l2);
    std::remove(path.c_str());

    ExperimentSpec bad = spec;
    bad.mesh_file.clear();
    CHECK_THROWS_AS(run_custom(bad), UsageError);
    bad.mesh_file = "does_not_exist.json";
    CHECK_THROWS_AS(run_custom(bad), IoError);
}

TEST_CASE("table formatting: headers, digits, empty studies") {
    ConvergenceTable empty;
    CHECK(format_table(empty) == "level,degree,N,h,L2,H1\n");
    empty.eigen = true;
    CHECK(format_table(empty) == "level,degree,N,h,eig_index,lambda,abs_error\n");

    ConvergenceTable t;
    TableRow r;
    r.level = 1;
    r.degree = 3;
    r.n = 42;
    r.h = 1.0 / 3.0;
    r.l2 = 1.2345678901234567e-5;
    r.h1 = 2.0;
    t.rows.push_back(r);
    const std::string s = format_table(t);
    // Doubles round-trip through 17 significant digits.
    const size_t p1 = s.find('\n') + 1;
    double h = 0.0, l2 = 0.0, h1 = 0.0;
    int level = 0, degree = 0, n = 0;
    REQUIRE(std::sscanf(s.c_str() + p1, "%d,%d,%d,%lf,%lf,%lf", &level, &degree, &n, &h, &l2,
                        &h1) == 6);
    CHECK(level == 1);
    CHECK(n == 42);
    CHECK(h == r.h);
    CHECK(l2 == r.l2);
    CHECK(h1 == r.h1);

    const std::string path = "emit_check.csv";
    emit_table(t, path);
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == s);
    std::remove(path.c_str());
    CHECK_THROWS_AS(emit_table(t, "no_such_dir/x.csv"), IoError);
}

TEST_CASE("experiment output is byte-identical across thread counts") {
    ExperimentSpec spec;
    spec.problem = Problem::ellipse_poisson;
    spec.degree = 2;
    spec.levels = 1;
    spec.quad = 6;
    setenv("CONIC_FEM_THREADS", "1", 1);
    const std::string s1 = format_table(run_ellipse_poisson(spec));
    setenv("CONIC_FEM_THREADS", "4", 1);
    const std::string s4 = format_table(run_ellipse_poisson(spec));
    unsetenv("CONIC_FEM_THREADS");
    CHECK(s1 == s4);
    CHECK(s1.find("level,degree,N,h,L2,H1\n") == 0);
}

TEST_CASE("run_experiment dispatches and writes the requested file") {
    ExperimentSpec spec;
    spec.problem = Problem::ellipse_poisson;
    spec.degree = 2;
    spec.levels = 1;
    spec.quad = 6;
    spec.out = "dispatch_check.csv";
    const ConvergenceTable t = run_experiment(spec);
    REQUIRE(t.rows.size() == 1);
    std::ifstream in(spec.out, std::ios::binary);
    REQUIRE(in.good());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == format_table(t));
    std::remove(spec.out.c_str());

    ExperimentSpec bad = spec;
    bad.out.clear();
    bad.levels = -1;
    CHECK_THROWS_AS(run_experiment(bad), UsageError);
    bad.levels = 1;
    bad.study = Study::p_refine;  // no degree range given
    CHECK_THROWS_AS(run_experiment(bad), UsageError);
}
