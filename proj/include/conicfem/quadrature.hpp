#pragma once

#include <functional>
#include <vector>

#include "conicfem/conic.hpp"
#include "conicfem/geometry.hpp"

namespace conicfem {

// Quadrature rule on [0,1].
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule: exact for polynomials of degree <= 2q-1,
// sum of weights 1.
Rule1D gauss_legendre_01(int q);

// Gauss rule for the weight function t on [0,1]: sum w_j f(x_j)
// approximates int_0^1 t f(t) dt, exact for f of degree <= 2q-1,
// sum of weights 1/2.
Rule1D gauss_jacobi_01(int q);

// Duffy map collapsing the unit square onto the triangle:
//   Phi(t1,t2) = b1 v1 + b2 v2 + b3 v3,
//   b1 = (1-t1) t2, b2 = t1 t2, b3 = 1 - t2,
// with Jacobian 2|T| t2.  Phi(0,1) = v1, Phi(1,1) = v2, Phi(.,0) = v3.
Point duffy(const Triangle& t, double t1, double t2);

struct QuadPoint {
    Point x;
    double w;
};

// Product Gauss rule after the Duffy map.  For qform == nullptr the domain
// is the straight triangle; otherwise it is the pie region swept from v3 up
// to the conic {q = 0}, with the radial extent phi(t1) = ray_height(q, t1):
//   int_T f ~= 2|T*| sum_mu w_mu phi(xi_mu)^2 sum_nu w~_nu f(xi_numu).
// Exact for polynomials of degree <= 2*order-1 when phi == 1.
std::vector<QuadPoint> curved_rule(const Triangle& tstar, const QuadraticForm* qform, int order);

// Sum-factorized BB-moments
//   mu^{T,m}_ijk(f) = int_T f B^m_ijk
// over a straight triangle or pie region.  The bivariate Bernstein factors
// through the Duffy map,
//   B^m_ijk(Phi(t1,t2)) = B^{m-k}_j(t1) * C(m,k) t2^{m-k} (1-t2)^k,
// so the inner (t2) sums cost O(q^2 m) and the outer loop O(q m^2).
// Exact for f of degree <= 2*order - m - 1 when phi == 1.
class MomentPlan {
public:
    MomentPlan(const Triangle& tstar, const QuadraticForm* qform, int m, int order);

    // All moments in coefficient-vector order (see bb_rank).
    std::vector<double> moments(const std::function<double(Point)>& f) const;

    const std::vector<QuadPoint>& centers() const { return centers_; }
    int moment_degree() const { return m_; }
    int order() const { return q_; }

private:
    int m_, q_;
    double jac_;                     // 2|T*|
    std::vector<QuadPoint> centers_; // mu-major, nu-minor
    std::vector<double> wphi2_;      // w_mu phi(xi_mu)^2
    std::vector<double> vtab_;       // B^{m-k}_j(xi_mu), per mu triangular (k,j)
    std::vector<double> utab_;       // w~_nu C(m,k) t2^{m-k} (1-t2)^k per (mu,nu,k)
};

}  // namespace conicfem
