#pragma once

#include <functional>
#include <string>
#include <vector>

#include "conicfem/assembly.hpp"

namespace conicfem {

enum class Problem { ellipse_poisson, disk_eigen, conic_poisson, custom };
enum class Study { h_refine, p_refine };

struct ExperimentSpec {
    Problem problem = Problem::ellipse_poisson;
    Study study = Study::h_refine;
    int degree = 3;                     // h-study degree
    int degree_lo = 0, degree_hi = 0;   // p-study range, inclusive
    int levels = 3;                     // h-study rows; a p-study fixes the twice-refined mesh
    int quad = 0;                       // quadrature order per direction; 0 = degree + 4
    double tol = 1e-12;                 // linear solver tolerance
    std::string out;                    // CSV path used by run_experiment; empty = no file
    std::string mesh_file;              // input mesh for the custom problem
};

struct TableRow {
    int level = 0;
    int degree = 0;
    int n = 0;
    double h = 0.0;
    double l2 = 0.0, h1 = 0.0;              // Poisson studies
    int eig_index = 0;                      // eigenvalue studies, 1-based
    double lambda = 0.0, abs_error = 0.0;
};

struct ConvergenceTable {
    bool eigen = false;
    std::vector<TableRow> rows;
};

// Rational-quadratic arc of {implicit = 0} from a to c: the control point is
// the intersection of the endpoint tangents and beta places the shoulder
// point on the curve (bisection, tolerance 1e-14).  Exact for conics.
RationalArc fit_arc(Point a, Point c, const std::function<double(Point)>& implicit,
                    const std::function<Point(Point)>& gradient);

// Built-in initial triangulations; all pass validate_conditions at every
// refinement level.
CurvedTriangulation make_disk_fan();    // four quarter-circle pies around the origin
CurvedTriangulation make_disk_mesh();   // two-ring disk: 4 pies, 4 buffers, 4 ordinary
CurvedTriangulation make_ellipse_mesh();  // x^2 + 6.25 y^2 = 1: 8 pies, 8 buffers, 8 ordinary
CurvedTriangulation make_conic_mesh();  // bounded by x2 = +-2 and x1 = +-(x2^2 - 6)

// Manufactured data.  The loads are -lap u, matching the weak form of
// -lap u = f with the assembled stiffness matrix.
double ellipse_u(Point p);
Point ellipse_grad_u(Point p);
double ellipse_load(Point p);
double conic_u(Point p);
Point conic_grad_u(Point p);
double conic_load(Point p);

// Bessel function J_m by its ascending series (long double accumulation).
double bessel_j(int m, double x);
// k smallest Dirichlet eigenvalues of the unit disk: j_{m,n}^2, counted
// twice for m >= 1.  Roots located by scan + bisection, |J_m(root)| <= 1e-13.
std::vector<double> disk_eigen_reference(int k);

ConvergenceTable run_ellipse_poisson(const ExperimentSpec& spec);
ConvergenceTable run_disk_eigen(const ExperimentSpec& spec);
ConvergenceTable run_conic_poisson(const ExperimentSpec& spec);
// Poisson problem -lap u = 1 on a mesh loaded from spec.mesh_file; the L2/H1
// columns report the norms of the discrete solution itself.
ConvergenceTable run_custom(const ExperimentSpec& spec);
// Dispatch on spec.problem, then write spec.out when set.
ConvergenceTable run_experiment(const ExperimentSpec& spec);

// CSV serialization: header `level,degree,N,h,L2,H1` (Poisson) or
// `level,degree,N,h,eig_index,lambda,abs_error` (eigenvalues), rows in run
// order, floating-point fields with 17 significant digits.
std::string format_table(const ConvergenceTable& t);
void emit_table(const ConvergenceTable& t, const std::string& path);

}  // namespace conicfem
