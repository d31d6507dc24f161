#pragma once

#include <vector>

#include "conicfem/geometry.hpp"

namespace conicfem {

// Number of domain points (i,j,k), i+j+k = d.
inline int bb_size(int d) { return (d + 1) * (d + 2) / 2; }

// Position of (i,j,k) in the coefficient vector: lexicographic on (i,j,k),
// descending in i, then descending in j.  Rank 0 is (d,0,0), the last entry
// is (0,0,d).
inline int bb_rank(int d, int i, int j) {
    const int m = d - i;
    return m * (m + 1) / 2 + (m - j);
}

struct MultiIndex {
    int i, j, k;
};

// All (i,j,k) with i+j+k = d in coefficient-vector order.
std::vector<MultiIndex> bb_indices(int d);

// Domain points xi_ijk = (i*v1 + j*v2 + k*v3)/d in coefficient-vector order.
std::vector<Point> domain_points(const Triangle& t, int d);

// Polynomial of degree d in Bernstein-Bezier form over a reference triangle:
// p = sum c_ijk B^d_ijk with B^d_ijk = d!/(i!j!k!) b1^i b2^j b3^k.
struct BBPatch {
    int degree = 0;
    Triangle tri;
    std::vector<double> coeffs;  // size bb_size(degree)

    static BBPatch zero(const Triangle& t, int d);
};

// de Casteljau evaluation; numerically stable for barycentric coordinates in
// the unit simplex and still exact (as a polynomial) outside it.
double eval_bb(const BBPatch& p, const Bary& b);
double eval_bb(const BBPatch& p, Point x);

// Cartesian gradient, via the two directional derivatives along v2-v1, v3-v1.
Point grad_bb(const BBPatch& p, const Bary& b);
Point grad_bb(const BBPatch& p, Point x);

// Same polynomial written to degree d+1:
// c'_ijk = (i*c_{i-1,j,k} + j*c_{i,j-1,k} + k*c_{i,j,k-1})/(d+1).
BBPatch degree_raise(const BBPatch& p);

// Product of two patches over the same triangle; degree adds.
BBPatch bb_product(const BBPatch& p, const BBPatch& r);

namespace detail {
// Univariate Bernstein B^n_nu(t) = C(n,nu) t^nu (1-t)^(n-nu).
double bernstein_1d(int n, int nu, double t);
double binomial(int n, int k);
}  // namespace detail

}  // namespace conicfem
