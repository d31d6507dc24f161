#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "conicfem/mds.hpp"
#include "conicfem/quadrature.hpp"

namespace conicfem {

using SparseMat = Eigen::SparseMatrix<double>;
using DenseMat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Coefficients of a(u,v) = int (grad u . A grad v + v b.grad u + c u v) and
// the load f.  Unset callables are treated as zero (A unset = identity).
struct PdeCoefficients {
    std::function<std::array<double, 4>(Point)> A;  // row-major 2x2, symmetric
    std::function<Point(Point)> b;
    std::function<double(Point)> c;
    std::function<double(Point)> f;

    static PdeCoefficients laplace(std::function<double(Point)> load);
};

// Element blocks over the Bernstein basis of the triangle's working degree
// (d for ordinary, d+1 for pie and buffer triangles, over T*).  Rows are
// test indices, columns trial indices.
struct ElementMatrices {
    DenseMat S, B, M;
    Vec L;
};

// Sum-factorized BB-moments combined with the Bernstein product formula;
// the default path.  q is the quadrature order per direction.
ElementMatrices element_matrices(const CurvedTriangulation& m, int t,
                                 const PdeCoefficients& coeffs, int d, int q);

// Plain quadrature over the same points; cross-validation oracle.
ElementMatrices element_matrices_direct(const CurvedTriangulation& m, int t,
                                        const PdeCoefficients& coeffs, int d, int q);

struct AssembledSystem {
    SparseMat S, B, M;
    Vec L;
};

// Global matrices through the transformation table: S = T^t diag(S_T) T and
// so on.  Element computation runs in parallel over triangles (capped by
// CONIC_FEM_THREADS); the scatter is serial in triangle order, so results
// are bit-stable across thread counts.  S and M are symmetrized after an
// explicit deviation check (1e-12 relative).
AssembledSystem assemble(const DofTable& table, const PdeCoefficients& coeffs, int q);

// Direct sparse factorization with iterative refinement for N <= 2e5,
// preconditioned conjugate gradients above.  Guarantees a relative residual
// |Sx - L| <= tol |L|; throws SolverError on indefinite or singular input
// and when the iteration budget (10 N) is exhausted.
Vec solve_poisson(const SparseMat& S, const Vec& L, double tol = 1e-12);

struct EigenPairs {
    std::vector<double> values;  // ascending
    DenseMat vectors;            // M-orthonormal columns
};

// k smallest generalized eigenpairs of S v = lambda M v; dense reduction for
// N <= 4000, shift-invert Lanczos with the M inner product above.  Residuals
// are verified: |S v - lambda M v| <= 1e-9 |S v|.
EigenPairs solve_eigs(const SparseMat& S, const SparseMat& M, int k);

struct ErrorNorms {
    double l2 = 0.0;
    double h1 = 0.0;
};

// L2 and full H1 distance between the spline with the given coefficients
// and the exact solution, integrated at order q+2 per direction.
ErrorNorms error_norms(const DofTable& table, const std::vector<double>& dofs,
                       const std::function<double(Point)>& u,
                       const std::function<Point(Point)>& grad_u, int q);

// MatrixMarket coordinate format dump for debugging.
void write_matrix_market(const SparseMat& a, const std::string& path);

}  // namespace conicfem
