#pragma once

#include <iosfwd>
#include <vector>

#include "conicfem/mesh.hpp"

namespace conicfem {

enum class DofKind { ordinary, pie_star, buffer_interior };

// One global degree of freedom: a BB coefficient functional at a domain
// point.  (i,j,k) are the indices in the first owning triangle at that
// kind's key degree: d for ordinary, d-1 for pie_star, d+1 for
// buffer_interior.
struct DofInfo {
    DofKind kind;
    int tri = -1;
    int i = 0, j = 0, k = 0;
};

// One entry of a triangle's slice of the transformation matrix: the basis
// function of `dof` contributes `w` to the BB coefficient at `local` (rank
// at the triangle's working degree).
struct TriEntry {
    int local;
    int dof;
    double w;
};

// Global-to-local map for the minimal determining set: ordinary triangles
// work at degree d, pie and buffer triangles at degree d+1 (pie blocks are
// expressed over the straight companion T*).
class DofTable {
public:
    DofTable() = default;

    int degree() const { return d_; }
    int size() const { return n_; }
    const CurvedTriangulation& mesh() const { return *mesh_; }

    int block_degree(int t) const;
    int block_size(int t) const;
    int block_offset(int t) const { return offsets_[t]; }
    int total_block_size() const { return offsets_.back(); }
    const std::vector<TriEntry>& entries(int t) const { return entries_[t]; }
    const DofInfo& info(int dof) const { return infos_[dof]; }

    // Blocks of BB coefficients per triangle, concatenated; cost O(d^2) per
    // triangle.  Throws UsageError on length mismatch.
    std::vector<double> apply_T(const std::vector<double>& x) const;
    std::vector<double> apply_T_transpose(const std::vector<double>& blocks) const;

    // Coefficient functionals lambda applied to per-triangle blocks; on pie
    // triangles this divides by q (inverts the quadratic-multiplication
    // structure).  extract(apply_T(x)) == x.
    std::vector<double> extract(const std::vector<double>& blocks) const;

    // Value of the basis spline s_dof at p.  Throws GeometryError when p is
    // outside the closed domain beyond tolerance 1e-10.
    double basis_eval(int dof, Point p) const;

    // Triangle containing p (first match), or -1.
    int locate(Point p) const;

    // Debug dump: triangle,local,dof,weight per line.
    void dump_csv(std::ostream& out) const;

    friend DofTable build_mds(const CurvedTriangulation& mesh, int d);

private:
    const CurvedTriangulation* mesh_ = nullptr;
    int d_ = 0;
    int n_ = 0;
    std::vector<DofInfo> infos_;
    std::vector<std::vector<TriEntry>> entries_;
    std::vector<int> offsets_;
};

// Builds the minimal determining set for S_{d,0}: ordinary domain points of
// degree d off the boundary, pie domain points of degree d-1 over T*
// (coefficients of the factor next to q), and buffer interior points of
// degree d+1 off edges shared with non-buffer triangles and off the
// boundary.  Keys shared between triangles are identified combinatorially.
// Throws UsageError for d < 2 and ValidationError when adjacent pie
// triangles disagree on the normalized conic along a shared edge.
DofTable build_mds(const CurvedTriangulation& mesh, int d);

}  // namespace conicfem
