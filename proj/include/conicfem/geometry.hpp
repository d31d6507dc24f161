#pragma once

#include <array>
#include <cmath>

#include "conicfem/errors.hpp"

namespace conicfem {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double dist(Point a, Point b) { return norm(a - b); }

// Barycentric coordinates b1+b2+b3 = 1 with b_l = 1 at vertex l.
struct Bary {
    double b1 = 0.0;
    double b2 = 0.0;
    double b3 = 0.0;
};

struct Triangle {
    Point v1, v2, v3;

    Point vertex(int l) const { return l == 0 ? v1 : (l == 1 ? v2 : v3); }
};

inline double signed_area(const Triangle& t) {
    return 0.5 * cross(t.v2 - t.v1, t.v3 - t.v1);
}

inline double diameter(const Triangle& t) {
    return std::max({dist(t.v1, t.v2), dist(t.v2, t.v3), dist(t.v3, t.v1)});
}

// Inscribed circle radius of the straight triangle.
inline double inradius(const Triangle& t) {
    const double a = dist(t.v2, t.v3);
    const double b = dist(t.v3, t.v1);
    const double c = dist(t.v1, t.v2);
    return 2.0 * std::abs(signed_area(t)) / (a + b + c);
}

inline void require_nondegenerate(const Triangle& t) {
    const double scale = diameter(t);
    if (!(std::abs(signed_area(t)) > 1e-14 * scale * scale)) {
        throw GeometryError("degenerate triangle (area too small)");
    }
}

inline Bary barycentric(const Triangle& t, Point p) {
    require_nondegenerate(t);
    const double area2 = cross(t.v2 - t.v1, t.v3 - t.v1);
    const double b1 = cross(t.v2 - p, t.v3 - p) / area2;
    const double b2 = cross(t.v3 - p, t.v1 - p) / area2;
    return {b1, b2, 1.0 - b1 - b2};
}

inline Point from_barycentric(const Triangle& t, const Bary& b) {
    return b.b1 * t.v1 + b.b2 * t.v2 + b.b3 * t.v3;
}

// Gradients of the barycentric coordinates; constant vector fields.
inline std::array<Point, 3> barycentric_gradients(const Triangle& t) {
    require_nondegenerate(t);
    const double area2 = cross(t.v2 - t.v1, t.v3 - t.v1);
    const auto perp = [](Point p) { return Point{-p.y, p.x}; };
    return {1.0 / area2 * perp(t.v3 - t.v2),
            1.0 / area2 * perp(t.v1 - t.v3),
            1.0 / area2 * perp(t.v2 - t.v1)};
}

}  // namespace conicfem
