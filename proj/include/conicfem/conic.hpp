#pragma once

#include <utility>

#include "conicfem/bernstein.hpp"
#include "conicfem/geometry.hpp"

namespace conicfem {

// Rational quadratic Bezier arc in standard form (end weights 1, middle
// weight beta > 0):
//   B(t) = (P0 B0 + beta P1 B1 + P2 B2) / (B0 + beta B1 + B2),
// with B_i the quadratic Bernstein polynomials on [0,1].  beta = 1 traces a
// parabola, beta < 1 an ellipse, beta > 1 a hyperbola.
struct RationalArc {
    Point p0, p1, p2;
    double beta = 1.0;
};

Point eval_arc(const RationalArc& a, double t);
Point arc_tangent(const RationalArc& a, double t);  // d/dt of eval_arc

// Point of maximal distance from the chord, at t = 1/2:
// (1-s) M + s P1 with M the chord midpoint and s = beta/(beta+1).
Point shoulder_point(const RationalArc& a);

// Split at t = 1/2 into two standard-form arcs tracing the same curve.
// Both children carry weight sqrt((1+beta)/2).
std::pair<RationalArc, RationalArc> subdivide_arc(const RationalArc& a);

// Implicit quadratic q with q = 0 on the conic through the arc, expressed in
// BB-form of degree 2 over T* = (P0, P2, v3):
//   q = 2(w110 b1 b2 + w101 b1 b3 + w011 b2 b3) + w002 b3^2,
// normalized so q(v3) = w002 = 1, and q > 0 on the v3 side near the arc.
struct QuadraticForm {
    Triangle tstar;
    double w110 = 0.0, w101 = 0.0, w011 = 0.0, w002 = 1.0;
    double mu = 0.0;  // positivity scale; mu > 0 is required

    BBPatch as_patch() const;
    double eval(Point x) const;
    double eval(const Bary& b) const;
};

// Derive the implicit form from the arc and the third vertex.  Throws
// GeometryError when P1 is on the chord line, when the denominator
// 1 - 4 beta^2 alpha1 alpha2 vanishes, or when the positivity scale mu
// is not positive.
QuadraticForm implicitize(const RationalArc& a, Point v3);

// Barrier height phi(tau): the first positive root t of
//   q(v3 + t ((1-tau) v1 + tau v2 - v3)) = 0,
// so that Phi(tau, phi(tau)) lies on the conic.  Throws GeometryError when
// no positive root exists.
double ray_height(const QuadraticForm& q, double tau);

}  // namespace conicfem
