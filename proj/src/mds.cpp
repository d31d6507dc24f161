#include "conicfem/mds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <utility>

namespace conicfem {

namespace {

// Canonical key of a coefficient functional; DOFs shared between triangles
// map to the same key.  Namespaces:
//   {0, v}            value s(v): ordinary corner, pie interior vertex, or
//                     vertex surrounded by buffer triangles only
//   {1, e, pos}       ordinary edge point, degree d
//   {2, t, i, j, k}   ordinary interior point
//   {3, z, v}         pie chord endpoint (value of the factor r at z);
//                     shared exactly by the pies containing edge (z, v)
//   {4, e, pos}       pie point on a straight edge, degree d-1
//   {5, t, i, j, k}   pie point private to one triangle (chord or interior)
//   {6, e, pos}       buffer point on a buffer-buffer edge, degree d+1
//   {7, t, i, j, k}   buffer interior point
// `pos` counts the barycentric weight at the larger-id endpoint of the edge,
// so both triangles sharing the edge derive the same key combinatorially.
using Key = std::array<long, 5>;

}  // namespace

int DofTable::block_degree(int t) const {
    return mesh_->classification[t] == TriClass::ordinary ? d_ : d_ + 1;
}

int DofTable::block_size(int t) const { return bb_size(block_degree(t)); }

std::vector<double> DofTable::apply_T(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) {
        throw UsageError("apply_T: expected vector of length " + std::to_string(n_));
    }
    std::vector<double> out(total_block_size(), 0.0);
    for (size_t t = 0; t < entries_.size(); ++t) {
        double* block = out.data() + offsets_[t];
        for (const auto& en : entries_[t]) block[en.local] += en.w * x[en.dof];
    }
    return out;
}

std::vector<double> DofTable::apply_T_transpose(const std::vector<double>& blocks) const {
    if (static_cast<int>(blocks.size()) != total_block_size()) {
        throw UsageError("apply_T_transpose: expected vector of length " +
                         std::to_string(total_block_size()));
    }
    std::vector<double> out(n_, 0.0);
    for (size_t t = 0; t < entries_.size(); ++t) {
        const double* block = blocks.data() + offsets_[t];
        for (const auto& en : entries_[t]) out[en.dof] += en.w * block[en.local];
    }
    return out;
}

std::vector<double> DofTable::extract(const std::vector<double>& blocks) const {
    if (static_cast<int>(blocks.size()) != total_block_size()) {
        throw UsageError("extract: expected vector of length " +
                         std::to_string(total_block_size()));
    }
    const auto& m = *mesh_;
    const int nt = static_cast<int>(m.triangles.size());

    // Recover the factor coefficients on pie triangles: the block stores
    // a = coefficients of q*r at degree d+1; solve for r at degree d-1 by
    // marching k downwards (the k-index couples triangularly).
    std::vector<std::vector<double>> factor(nt);
    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::pie) continue;
        const auto& q = *m.qforms[t];
        const double s = static_cast<double>(d_) * (d_ + 1);
        const double* a = blocks.data() + offsets_[t];
        std::vector<double> c(bb_size(d_ - 1), 0.0);
        for (int k = d_ - 1; k >= 0; --k) {
            for (int i = 0; i + k <= d_ - 1; ++i) {
                const int j = d_ - 1 - k - i;
                double rhs = s * a[bb_rank(d_ + 1, i, j)];
                if (i >= 1 && j >= 1)
                    rhs -= 2.0 * i * j * q.w110 * c[bb_rank(d_ - 1, i - 1, j - 1)];
                if (i >= 1)
                    rhs -= 2.0 * i * (k + 2) * q.w101 * c[bb_rank(d_ - 1, i - 1, j)];
                if (j >= 1)
                    rhs -= 2.0 * j * (k + 2) * q.w011 * c[bb_rank(d_ - 1, i, j - 1)];
                c[bb_rank(d_ - 1, i, j)] = rhs / ((k + 1) * (k + 2) * q.w002);
            }
        }
        factor[t] = std::move(c);
    }

    std::vector<double> out(n_, 0.0);
    for (int dof = 0; dof < n_; ++dof) {
        const DofInfo& in = infos_[dof];
        switch (in.kind) {
            case DofKind::ordinary:
                out[dof] = blocks[offsets_[in.tri] + bb_rank(d_, in.i, in.j)];
                break;
            case DofKind::buffer_interior:
                out[dof] = blocks[offsets_[in.tri] + bb_rank(d_ + 1, in.i, in.j)];
                break;
            case DofKind::pie_star:
                out[dof] = factor[in.tri][bb_rank(d_ - 1, in.i, in.j)];
                break;
        }
    }
    return out;
}

int DofTable::locate(Point p) const {
    const auto& m = *mesh_;
    const double tol = 1e-10;
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
        const Bary b = barycentric(m.tri(t), p);
        if (m.classification[t] == TriClass::pie) {
            if (b.b1 < -tol || b.b2 < -tol) continue;
            const double ray = 1.0 - b.b3;  // parameter toward the chord
            if (ray <= tol) {
                if (ray >= -tol) return t;
                continue;
            }
            const double tau = std::clamp(b.b2 / (b.b1 + b.b2), 0.0, 1.0);
            double phi;
            try {
                phi = ray_height(*m.qforms[t], tau);
            } catch (const GeometryError&) {
                continue;
            }
            if (ray <= phi * (1.0 + 1e-9) + tol) return t;
        } else {
            if (b.b1 >= -tol && b.b2 >= -tol && b.b3 >= -tol) return t;
        }
    }
    return -1;
}

double DofTable::basis_eval(int dof, Point p) const {
    if (dof < 0 || dof >= n_) throw UsageError("basis_eval: dof index out of range");
    const int t = locate(p);
    if (t < 0) throw GeometryError("basis_eval: point lies outside the domain");
    BBPatch patch = BBPatch::zero(mesh_->tri(t), block_degree(t));
    for (const auto& en : entries_[t]) {
        if (en.dof == dof) patch.coeffs[en.local] += en.w;
    }
    return eval_bb(patch, p);
}

void DofTable::dump_csv(std::ostream& out) const {
    out << "triangle,local,dof,weight\n";
    out << std::setprecision(17);
    for (size_t t = 0; t < entries_.size(); ++t) {
        for (const auto& en : entries_[t]) {
            out << t << ',' << en.local << ',' << en.dof << ',' << en.w << '\n';
        }
    }
}

DofTable build_mds(const CurvedTriangulation& m, int d) {
    if (d < 2) throw UsageError("build_mds: degree must be at least 2");
    if (!m.finalized()) throw UsageError("build_mds: mesh is not finalized");

    const int nt = static_cast<int>(m.triangles.size());
    const int nv = static_cast<int>(m.vertices.size());

    // Vertices whose whole fan consists of buffer triangles carry their own
    // coefficient DOF; all other interior vertices belong to an ordinary
    // triangle or are the interior vertex of a pie.
    std::vector<bool> all_buffer(nv, true);
    for (int t = 0; t < nt; ++t) {
        for (int l = 0; l < 3; ++l) {
            if (m.classification[t] != TriClass::buffer) all_buffer[m.triangles[t].v[l]] = false;
        }
    }

    // Local (i,j,k) at degree n of the point on edge e at position pos, seen
    // from triangle t.
    const auto local_on_edge = [&m](int t, int e, int n, int pos) -> std::array<int, 3> {
        int l = -1;
        for (int ll = 0; ll < 3; ++ll) {
            if (m.tri_edges[t][ll] == e) l = ll;
        }
        const auto& r = m.triangles[t];
        const int la = l == 0 ? 1 : 0;
        const int lb = l == 2 ? 1 : 2;
        std::array<int, 3> w{0, 0, 0};
        w[lb] = m.edges[e].b == r.v[lb] ? pos : n - pos;
        w[la] = n - w[lb];
        return w;
    };

    // Position of the on-edge point (i,j,k) (zero index at local vertex l):
    // the weight carried by the larger-id endpoint.
    const auto edge_pos = [&m](int t, int l, int i, int j, int k) -> std::pair<int, int> {
        const auto& r = m.triangles[t];
        const int e = m.tri_edges[t][l];
        int gb, wa, wb;
        switch (l) {
            case 0: gb = r.v[2]; wa = j; wb = k; break;
            case 1: gb = r.v[2]; wa = i; wb = k; break;
            default: gb = r.v[1]; wa = i; wb = j; break;
        }
        return {e, m.edges[e].b == gb ? wb : wa};
    };

    const auto ordinary_key = [&](int t, int i, int j, int k) -> std::optional<Key> {
        const auto& r = m.triangles[t];
        const int zeros = (i == 0) + (j == 0) + (k == 0);
        if (zeros == 2) {
            const int v = r.v[i > 0 ? 0 : (j > 0 ? 1 : 2)];
            if (m.boundary_vertex[v]) return std::nullopt;
            return Key{0, v, 0, 0, 0};
        }
        if (zeros == 1) {
            const auto [e, pos] = edge_pos(t, i == 0 ? 0 : (j == 0 ? 1 : 2), i, j, k);
            if (m.edges[e].boundary()) return std::nullopt;
            return Key{1, e, pos, 0, 0};
        }
        return Key{2, t, i, j, k};
    };

    const auto pie_key = [&](int t, int i, int j, int k) -> Key {
        const auto& r = m.triangles[t];
        if (k == d - 1) return {0, r.v[2], 0, 0, 0};
        if (i == d - 1) return {3, r.v[0], r.v[2], 0, 0};
        if (j == d - 1) return {3, r.v[1], r.v[2], 0, 0};
        if (j == 0 && i > 0 && k > 0) {
            const auto [e, pos] = edge_pos(t, 1, i, j, k);
            return {4, e, pos, 0, 0};
        }
        if (i == 0 && j > 0 && k > 0) {
            const auto [e, pos] = edge_pos(t, 0, i, j, k);
            return {4, e, pos, 0, 0};
        }
        return {5, t, i, j, k};
    };

    const auto buffer_key = [&](int t, int i, int j, int k) -> std::optional<Key> {
        const auto& r = m.triangles[t];
        const int zeros = (i == 0) + (j == 0) + (k == 0);
        if (zeros == 2) {
            const int v = r.v[i > 0 ? 0 : (j > 0 ? 1 : 2)];
            if (m.boundary_vertex[v] || !all_buffer[v]) return std::nullopt;
            return Key{0, v, 0, 0, 0};
        }
        if (zeros == 1) {
            const int l = i == 0 ? 0 : (j == 0 ? 1 : 2);
            const auto [e, pos] = edge_pos(t, l, i, j, k);
            const auto& ei = m.edges[e];
            if (ei.boundary()) return std::nullopt;
            const int other = ei.t0 == t ? ei.t1 : ei.t0;
            if (m.classification[other] != TriClass::buffer) return std::nullopt;
            return Key{6, e, pos, 0, 0};
        }
        return Key{7, t, i, j, k};
    };

    std::map<Key, int> keymap;
    std::vector<DofInfo> infos;
    const auto intern = [&](const Key& key, DofKind kind, int t, int i, int j, int k) {
        if (keymap.emplace(key, static_cast<int>(infos.size())).second) {
            infos.push_back({kind, t, i, j, k});
        }
    };
    const auto lookup = [&](const Key& key) -> int {
        const auto it = keymap.find(key);
        return it == keymap.end() ? -1 : it->second;
    };

    const auto idx_d = bb_indices(d);
    const auto idx_dm1 = bb_indices(d - 1);
    const auto idx_dp1 = bb_indices(d + 1);

    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::ordinary) continue;
        for (const auto& mi : idx_d) {
            if (const auto key = ordinary_key(t, mi.i, mi.j, mi.k)) {
                intern(*key, DofKind::ordinary, t, mi.i, mi.j, mi.k);
            }
        }
    }
    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::pie) continue;
        for (const auto& mi : idx_dm1) {
            intern(pie_key(t, mi.i, mi.j, mi.k), DofKind::pie_star, t, mi.i, mi.j, mi.k);
        }
    }
    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::buffer) continue;
        for (const auto& mi : idx_dp1) {
            if (const auto key = buffer_key(t, mi.i, mi.j, mi.k)) {
                intern(*key, DofKind::buffer_interior, t, mi.i, mi.j, mi.k);
            }
        }
    }

    std::vector<std::vector<TriEntry>> entries(nt);

    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::ordinary) continue;
        for (const auto& mi : idx_d) {
            if (const auto key = ordinary_key(t, mi.i, mi.j, mi.k)) {
                entries[t].push_back({bb_rank(d, mi.i, mi.j), lookup(*key), 1.0});
            }
        }
    }

    // Pie blocks: each factor coefficient c_ijk of degree d-1 contributes the
    // four BB-coefficients of q * B^{d-1}_{ijk} at degree d+1 over T*.
    const double scale = 1.0 / (static_cast<double>(d) * (d + 1));
    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::pie) continue;
        const auto& q = *m.qforms[t];
        for (const auto& mi : idx_dm1) {
            const int i = mi.i, j = mi.j, k = mi.k;
            const int dof = lookup(pie_key(t, i, j, k));
            auto& out = entries[t];
            out.push_back({bb_rank(d + 1, i + 1, j + 1), dof,
                           2.0 * (i + 1) * (j + 1) * q.w110 * scale});
            out.push_back({bb_rank(d + 1, i + 1, j), dof,
                           2.0 * (i + 1) * (k + 1) * q.w101 * scale});
            out.push_back({bb_rank(d + 1, i, j + 1), dof,
                           2.0 * (j + 1) * (k + 1) * q.w011 * scale});
            out.push_back({bb_rank(d + 1, i, j), dof,
                           static_cast<double>(k + 1) * (k + 2) * q.w002 * scale});
        }
    }

    // Buffer blocks, after all pie blocks are complete.
    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::buffer) continue;
        const auto& r = m.triangles[t];
        for (const auto& mi : idx_dp1) {
            const int i = mi.i, j = mi.j, k = mi.k;
            const int rank = bb_rank(d + 1, i, j);
            const int zeros = (i == 0) + (j == 0) + (k == 0);
            if (zeros == 2) {
                // Corner coefficient equals the value at the vertex.
                const int dof = lookup({0, r.v[i > 0 ? 0 : (j > 0 ? 1 : 2)], 0, 0, 0});
                if (dof >= 0) entries[t].push_back({rank, dof, 1.0});
                continue;
            }
            if (zeros == 0) {
                entries[t].push_back({rank, lookup(Key{7, t, i, j, k}), 1.0});
                continue;
            }
            const int l = i == 0 ? 0 : (j == 0 ? 1 : 2);
            const auto [e, pos] = edge_pos(t, l, i, j, k);
            const auto& ei = m.edges[e];
            if (ei.boundary()) continue;  // homogeneous boundary trace
            const int other = ei.t0 == t ? ei.t1 : ei.t0;
            switch (m.classification[other]) {
                case TriClass::buffer:
                    entries[t].push_back({rank, lookup(Key{6, e, pos, 0, 0}), 1.0});
                    break;
                case TriClass::ordinary: {
                    // The trace on e has degree d on the ordinary side; its
                    // univariate BB form raised to degree d+1 fills this row.
                    const std::pair<int, double> parts[2] = {
                        {pos - 1, pos / static_cast<double>(d + 1)},
                        {pos, (d + 1 - pos) / static_cast<double>(d + 1)}};
                    for (const auto& [mu, w] : parts) {
                        if (mu < 0 || mu > d) continue;
                        int dof;
                        if (mu == 0) {
                            dof = lookup({0, ei.a, 0, 0, 0});
                        } else if (mu == d) {
                            dof = lookup({0, ei.b, 0, 0, 0});
                        } else {
                            dof = lookup({1, e, mu, 0, 0});
                        }
                        if (dof >= 0) entries[t].push_back({rank, dof, w});
                    }
                    break;
                }
                case TriClass::pie: {
                    // Continuity copy: replicate the pie row of the same
                    // physical point.
                    const auto w = local_on_edge(other, e, d + 1, pos);
                    const int prank = bb_rank(d + 1, w[0], w[1]);
                    for (const auto& pe : entries[other]) {
                        if (pe.local == prank) entries[t].push_back({rank, pe.dof, pe.w});
                    }
                    break;
                }
            }
        }
    }

    for (auto& list : entries) {
        std::sort(list.begin(), list.end(), [](const TriEntry& a, const TriEntry& b) {
            return a.local != b.local ? a.local < b.local : a.dof < b.dof;
        });
        size_t out = 0;
        for (size_t in = 0; in < list.size(); ++in) {
            if (out > 0 && list[out - 1].local == list[in].local &&
                list[out - 1].dof == list[in].dof) {
                list[out - 1].w += list[in].w;
            } else {
                list[out++] = list[in];
            }
        }
        list.resize(out);
    }

    // Adjacent pies must agree on the normalized conic and produce identical
    // coefficients on the shared edge.
    for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
        const auto& ei = m.edges[e];
        if (ei.boundary()) continue;
        if (m.classification[ei.t0] != TriClass::pie) continue;
        if (m.classification[ei.t1] != TriClass::pie) continue;
        const auto edge_weight = [&](int t) {
            for (int l = 0; l < 3; ++l) {
                if (m.tri_edges[t][l] == e) return l == 0 ? m.qforms[t]->w011 : m.qforms[t]->w101;
            }
            return 0.0;
        };
        const double w0 = edge_weight(ei.t0), w1 = edge_weight(ei.t1);
        if (std::abs(w0 - w1) > 1e-10 * std::max(1.0, std::abs(w0))) {
            throw ValidationError(
                "build_mds: adjacent pie triangles disagree on the normalized conic along a "
                "shared edge");
        }
        const auto row_map = [&](int t, int local) {
            std::map<int, double> mp;
            for (const auto& en : entries[t]) {
                if (en.local == local) mp[en.dof] += en.w;
            }
            return mp;
        };
        for (int pos = 0; pos <= d + 1; ++pos) {
            const auto a0 = local_on_edge(ei.t0, e, d + 1, pos);
            const auto a1 = local_on_edge(ei.t1, e, d + 1, pos);
            auto m0 = row_map(ei.t0, bb_rank(d + 1, a0[0], a0[1]));
            const auto m1 = row_map(ei.t1, bb_rank(d + 1, a1[0], a1[1]));
            for (const auto& kv : m1) m0[kv.first] += 0.0;
            for (const auto& [dof, w] : m0) {
                const auto it = m1.find(dof);
                const double v1 = it == m1.end() ? 0.0 : it->second;
                if (std::abs(w - v1) > 1e-10 * std::max(1.0, std::abs(w))) {
                    throw ValidationError(
                        "build_mds: inconsistent coefficients on an edge shared by two pie "
                        "triangles");
                }
            }
        }
    }

    DofTable tab;
    tab.mesh_ = &m;
    tab.d_ = d;
    tab.n_ = static_cast<int>(infos.size());
    tab.infos_ = std::move(infos);
    tab.entries_ = std::move(entries);
    tab.offsets_.assign(nt + 1, 0);
    for (int t = 0; t < nt; ++t) {
        tab.offsets_[t + 1] = tab.offsets_[t] + tab.block_size(t);
    }
    return tab;
}

}  // namespace conicfem
