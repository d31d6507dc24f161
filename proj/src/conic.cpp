#include "conicfem/conic.hpp"

#include <cmath>

namespace conicfem {

namespace {

void require_valid_arc(const RationalArc& a) {
    if (!(a.beta > 0.0) || !std::isfinite(a.beta)) {
        throw GeometryError("arc weight beta must be positive and finite");
    }
    const double scale = std::max(dist(a.p0, a.p2), dist(a.p0, a.p1));
    if (std::abs(cross(a.p1 - a.p0, a.p2 - a.p0)) <= 1e-14 * scale * scale) {
        throw GeometryError("arc control points are collinear");
    }
}

}  // namespace

Point eval_arc(const RationalArc& a, double t) {
    require_valid_arc(a);
    const double b0 = (1.0 - t) * (1.0 - t);
    const double b1 = 2.0 * t * (1.0 - t);
    const double b2 = t * t;
    const double den = b0 + a.beta * b1 + b2;
    return 1.0 / den * (b0 * a.p0 + (a.beta * b1) * a.p1 + b2 * a.p2);
}

Point arc_tangent(const RationalArc& a, double t) {
    require_valid_arc(a);
    // Differentiate numerator/denominator of the homogeneous form.
    const double b0 = (1.0 - t) * (1.0 - t);
    const double b1 = 2.0 * t * (1.0 - t);
    const double b2 = t * t;
    const double db0 = -2.0 * (1.0 - t);
    const double db1 = 2.0 - 4.0 * t;
    const double db2 = 2.0 * t;
    const Point num = b0 * a.p0 + (a.beta * b1) * a.p1 + b2 * a.p2;
    const Point dnum = db0 * a.p0 + (a.beta * db1) * a.p1 + db2 * a.p2;
    const double den = b0 + a.beta * b1 + b2;
    const double dden = db0 + a.beta * db1 + db2;
    return 1.0 / (den * den) * (den * dnum - dden * num);
}

Point shoulder_point(const RationalArc& a) {
    require_valid_arc(a);
    const double s = a.beta / (a.beta + 1.0);
    const Point m = 0.5 * (a.p0 + a.p2);
    return (1.0 - s) * m + s * a.p1;
}

std::pair<RationalArc, RationalArc> subdivide_arc(const RationalArc& a) {
    require_valid_arc(a);
    // de Casteljau at t = 1/2 in homogeneous coordinates with weights
    // (1, beta, 1), then renormalize each half to standard form.
    const Point c = eval_arc(a, 0.5);
    const double bchild = std::sqrt((1.0 + a.beta) / 2.0);
    const Point l1 = 1.0 / (1.0 + a.beta) * (a.p0 + a.beta * a.p1);
    const Point r1 = 1.0 / (1.0 + a.beta) * (a.p2 + a.beta * a.p1);
    return {RationalArc{a.p0, l1, c, bchild}, RationalArc{c, r1, a.p2, bchild}};
}

BBPatch QuadraticForm::as_patch() const {
    BBPatch p = BBPatch::zero(tstar, 2);
    p.coeffs[bb_rank(2, 1, 1)] = w110;
    p.coeffs[bb_rank(2, 1, 0)] = w101;
    p.coeffs[bb_rank(2, 0, 1)] = w011;
    p.coeffs[bb_rank(2, 0, 0)] = w002;
    return p;
}

double QuadraticForm::eval(const Bary& b) const {
    return 2.0 * (w110 * b.b1 * b.b2 + w101 * b.b1 * b.b3 + w011 * b.b2 * b.b3) +
           w002 * b.b3 * b.b3;
}

double QuadraticForm::eval(Point x) const { return eval(barycentric(tstar, x)); }

QuadraticForm implicitize(const RationalArc& a, Point v3) {
    require_valid_arc(a);
    const Triangle tstar{a.p0, a.p2, v3};
    require_nondegenerate(tstar);
    const Bary alpha = barycentric(tstar, a.p1);
    if (std::abs(alpha.b3) < 1e-14) {
        throw GeometryError("implicitize: P1 lies on the chord line");
    }
    const double beta2 = a.beta * a.beta;
    const double den = 1.0 - 4.0 * beta2 * alpha.b1 * alpha.b2;
    if (std::abs(den) < 1e-14) {
        throw GeometryError("implicitize: degenerate conic (denominator vanishes)");
    }
    const double mu = 2.0 * beta2 * alpha.b3 / den;
    if (!(mu > 0.0)) {
        throw GeometryError("implicitize: conic not positive towards v3 (mu <= 0)");
    }
    QuadraticForm q;
    q.tstar = tstar;
    q.w110 = -alpha.b3 * mu;
    q.w101 = alpha.b2 * mu;
    q.w011 = alpha.b1 * mu;
    q.w002 = 1.0;
    q.mu = mu;
    return q;
}

double ray_height(const QuadraticForm& q, double tau) {
    // q restricted to the ray from v3 towards (1-tau) v1 + tau v2, in the
    // ray parameter t:  a t^2 + b t + c with
    const double e = q.w101 * (1.0 - tau) + q.w011 * tau;
    const double c = q.w002;
    const double b = 2.0 * (e - q.w002);
    const double a = q.w002 - 2.0 * e + 2.0 * q.w110 * (1.0 - tau) * tau;
    const double eps = 1e-13;
    if (std::abs(a) < eps * std::max({std::abs(b), std::abs(c), 1.0})) {
        // Effectively linear along this ray.
        if (std::abs(b) < eps) throw GeometryError("ray_height: ray does not meet the conic");
        const double t = -c / b;
        if (t <= 0.0) throw GeometryError("ray_height: no positive intersection");
        return t;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) throw GeometryError("ray_height: ray does not meet the conic");
    const double sq = std::sqrt(disc);
    // Cancellation-safe pair of roots.
    const double q1 = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    const double r1 = q1 / a;
    const double r2 = (q1 != 0.0) ? c / q1 : 0.0;
    const double lo = std::min(r1, r2), hi = std::max(r1, r2);
    const double tol = 1e-12;
    if (lo > tol) return lo;
    if (hi > tol) return hi;
    throw GeometryError("ray_height: no positive intersection");
}

}  // namespace conicfem
