#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "conicfem/conic.hpp"

namespace conicfem {

struct ArcRef {
    int index = -1;
    bool reversed = false;
};

// One triangle of the mesh.  When `arc` is set, the edge (v[0], v[1]) is
// replaced by that boundary arc and v[2] is the interior vertex.
struct TriRecord {
    std::array<int, 3> v{-1, -1, -1};
    std::optional<ArcRef> arc;
};

enum class TriClass { ordinary, pie, buffer };

struct StraightSegment {
    Point a, b;
};

struct EdgeInfo {
    int a = -1, b = -1;  // vertex ids, a < b
    int t0 = -1, t1 = -1;
    bool curved = false;  // replaced by a boundary arc
    bool boundary() const { return t1 < 0; }
};

// Shape diagnostics: R bounds triangle aspect (diameter over inscribed-disk
// radius, with T cap T* for pie triangles), A bounds q from above relative to
// q(v) = 1, B bounds the growth of q away from the curved edge from below.
struct ShapeReport {
    double R = 0.0;
    double A = 0.0;
    double B = 0.0;
};

class CurvedTriangulation {
public:
    std::vector<Point> vertices;
    std::vector<RationalArc> arcs;
    std::vector<TriRecord> triangles;

    // Derived connectivity, built by finalize().
    std::vector<TriClass> classification;
    std::vector<EdgeInfo> edges;
    std::vector<std::array<int, 3>> tri_edges;  // local edge l is opposite vertex l
    std::vector<bool> boundary_vertex;
    std::vector<StraightSegment> segments;  // straight boundary pieces
    std::vector<std::optional<QuadraticForm>> qforms;   // set for pie triangles
    std::vector<std::optional<RationalArc>> pie_arcs;   // oriented p0 = v[0], p2 = v[1]

    // Builds the edge table, classification and pie implicitizations.
    // Throws ValidationError / GeometryError on structural defects
    // (bad indices, duplicate vertices, over-shared edges, arc mismatch).
    void finalize();

    bool finalized() const { return !classification.empty() || triangles.empty(); }
    Triangle tri(int t) const;  // straight companion T* for pie triangles
    int neighbor(int t, int local_edge) const;
    int count(TriClass c) const;
    double tri_diameter(int t) const;  // includes sampled arc bulge for pies
    double mesh_size() const;          // max over triangles
};

CurvedTriangulation mesh_from_json(const std::string& text);
std::string mesh_to_json(const CurvedTriangulation& m);
CurvedTriangulation load_mesh(const std::string& path);
void save_mesh(const CurvedTriangulation& m, const std::string& path);

// Admissibility conditions; returns human-readable violations (empty when
// the mesh is conforming):
//   (a) arc endpoints coincide with their mesh vertices;
//   (b) no interior edge has both endpoints on the boundary;
//   (c) where boundary pieces with non-proportional q meet (at least one a
//       genuine conic), a buffer triangle is attached to the corner;
//   (d) every pie triangle is star-shaped with respect to its interior
//       vertex (sampled over 64 rays);
//   (e) q > 0 inside every pie triangle (sampled);
// plus the structural requirement that a pie triangle has exactly two
// boundary vertices and an interior one.
std::vector<std::string> validate_conditions(const CurvedTriangulation& m);

// Uniform 1:4 refinement.  Straight triangles split at edge midpoints; pie
// triangles use the arc midpoint for the curved edge and replace the arc by
// its two subdivision children.  Throws ValidationError when the refined
// mesh fails validate_conditions.
CurvedTriangulation refine_uniform(const CurvedTriangulation& m);

// The degree argument is part of the interface for callers sizing spaces;
// R, A, B themselves are mesh quantities and do not depend on it.
ShapeReport shape_constants(const CurvedTriangulation& m, int d = 0);

}  // namespace conicfem
