#include "conicfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "conicfem/quadrature.hpp"

namespace conicfem {

namespace {

constexpr double kVertexTol = 1e-12;  // duplicate-vertex threshold
constexpr double kAttachTol = 1e-10;  // arc endpoint vs vertex coordinate match

std::string fmt_tri(int t) { return "triangle " + std::to_string(t); }

}  // namespace

Triangle CurvedTriangulation::tri(int t) const {
    const auto& r = triangles.at(t);
    return {vertices[r.v[0]], vertices[r.v[1]], vertices[r.v[2]]};
}

int CurvedTriangulation::neighbor(int t, int local_edge) const {
    const EdgeInfo& e = edges[tri_edges[t][local_edge]];
    return e.t0 == t ? e.t1 : e.t0;
}

int CurvedTriangulation::count(TriClass c) const {
    int n = 0;
    for (TriClass k : classification) n += (k == c);
    return n;
}

double CurvedTriangulation::tri_diameter(int t) const {
    std::vector<Point> pts{vertices[triangles[t].v[0]], vertices[triangles[t].v[1]],
                           vertices[triangles[t].v[2]]};
    if (pie_arcs[t]) {
        for (int s = 1; s < 16; ++s) pts.push_back(eval_arc(*pie_arcs[t], s / 16.0));
    }
    double h = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        for (size_t j = i + 1; j < pts.size(); ++j) h = std::max(h, dist(pts[i], pts[j]));
    }
    return h;
}

double CurvedTriangulation::mesh_size() const {
    double h = 0.0;
    for (int t = 0; t < (int)triangles.size(); ++t) h = std::max(h, tri_diameter(t));
    return h;
}

void CurvedTriangulation::finalize() {
    const int nv = (int)vertices.size();
    const int nt = (int)triangles.size();
    classification.assign(nt, TriClass::ordinary);
    tri_edges.assign(nt, {-1, -1, -1});
    edges.clear();
    segments.clear();
    qforms.assign(nt, std::nullopt);
    pie_arcs.assign(nt, std::nullopt);
    boundary_vertex.assign(nv, false);

    for (int i = 0; i < nv; ++i) {
        for (int j = i + 1; j < nv; ++j) {
            if (dist(vertices[i], vertices[j]) < kVertexTol) {
                throw ValidationError("duplicate vertices " + std::to_string(i) + " and " +
                                      std::to_string(j));
            }
        }
    }

    std::vector<bool> arc_used(arcs.size(), false);
    std::map<std::pair<int, int>, int> edge_ids;
    for (int t = 0; t < nt; ++t) {
        const auto& r = triangles[t];
        for (int l = 0; l < 3; ++l) {
            if (r.v[l] < 0 || r.v[l] >= nv) throw ValidationError(fmt_tri(t) + ": vertex index out of range");
        }
        if (r.v[0] == r.v[1] || r.v[1] == r.v[2] || r.v[0] == r.v[2]) {
            throw ValidationError(fmt_tri(t) + ": repeated vertex");
        }
        require_nondegenerate(tri(t));
        // Local edge l is opposite vertex l; the curved edge, if any, is
        // local edge 2 = (v0, v1).
        const std::array<std::pair<int, int>, 3> local{{{r.v[1], r.v[2]}, {r.v[0], r.v[2]}, {r.v[0], r.v[1]}}};
        for (int l = 0; l < 3; ++l) {
            auto key = std::minmax(local[l].first, local[l].second);
            auto it = edge_ids.find(key);
            if (it == edge_ids.end()) {
                EdgeInfo e;
                e.a = key.first;
                e.b = key.second;
                e.t0 = t;
                edge_ids.emplace(key, (int)edges.size());
                tri_edges[t][l] = (int)edges.size();
                edges.push_back(e);
            } else {
                EdgeInfo& e = edges[it->second];
                if (e.t1 >= 0) {
                    throw ValidationError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                                          ") shared by more than two triangles");
                }
                e.t1 = t;
                tri_edges[t][l] = it->second;
            }
        }
        if (r.arc) {
            if (r.arc->index < 0 || r.arc->index >= (int)arcs.size()) {
                throw ValidationError(fmt_tri(t) + ": arc index out of range");
            }
            if (arc_used[r.arc->index]) {
                throw ValidationError("arc " + std::to_string(r.arc->index) + " referenced twice");
            }
            arc_used[r.arc->index] = true;
            RationalArc a = arcs[r.arc->index];
            if (r.arc->reversed) std::swap(a.p0, a.p2);
            if (dist(a.p0, vertices[r.v[0]]) > kAttachTol || dist(a.p2, vertices[r.v[1]]) > kAttachTol) {
                throw ValidationError(fmt_tri(t) + ": arc endpoints do not match its curved edge");
            }
            pie_arcs[t] = a;
            classification[t] = TriClass::pie;
            qforms[t] = implicitize(a, vertices[r.v[2]]);
        }
    }

    for (int t = 0; t < nt; ++t) {
        if (triangles[t].arc) {
            EdgeInfo& e = edges[tri_edges[t][2]];
            e.curved = true;
            if (!e.boundary()) {
                throw ValidationError(fmt_tri(t) + ": curved edge is shared with another triangle");
            }
        }
    }
    for (int t = 0; t < nt; ++t) {
        if (classification[t] == TriClass::pie) continue;
        for (int l = 0; l < 3; ++l) {
            const int n = neighbor(t, l);
            if (n >= 0 && classification[n] == TriClass::pie) {
                classification[t] = TriClass::buffer;
                break;
            }
        }
    }
    for (const EdgeInfo& e : edges) {
        if (e.boundary()) {
            boundary_vertex[e.a] = boundary_vertex[e.b] = true;
            if (!e.curved) segments.push_back({vertices[e.a], vertices[e.b]});
        }
    }
}

// ---------------------------------------------------------------------------
// JSON serialization

CurvedTriangulation mesh_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(std::string("mesh parse error: ") + e.what());
    }
    CurvedTriangulation m;
    try {
        for (const auto& v : doc.at("vertices")) {
            m.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        }
        if (doc.contains("arcs")) {
            for (const auto& a : doc["arcs"]) {
                RationalArc arc;
                arc.p0 = {a.at("p0").at(0).get<double>(), a.at("p0").at(1).get<double>()};
                arc.p1 = {a.at("p1").at(0).get<double>(), a.at("p1").at(1).get<double>()};
                arc.p2 = {a.at("p2").at(0).get<double>(), a.at("p2").at(1).get<double>()};
                arc.beta = a.at("beta").get<double>();
                m.arcs.push_back(arc);
            }
        }
        for (const auto& t : doc.at("triangles")) {
            TriRecord r;
            r.v = {t.at("v").at(0).get<int>(), t.at("v").at(1).get<int>(), t.at("v").at(2).get<int>()};
            if (t.contains("arc")) {
                ArcRef ref;
                ref.index = t["arc"].at("index").get<int>();
                ref.reversed = t["arc"].value("reversed", false);
                r.arc = ref;
            }
            m.triangles.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("mesh schema violation: ") + e.what());
    }
    m.finalize();
    return m;
}

std::string mesh_to_json(const CurvedTriangulation& m) {
    nlohmann::json doc;
    doc["vertices"] = nlohmann::json::array();
    for (const Point& p : m.vertices) doc["vertices"].push_back({p.x, p.y});
    doc["arcs"] = nlohmann::json::array();
    for (const RationalArc& a : m.arcs) {
        doc["arcs"].push_back({{"p0", {a.p0.x, a.p0.y}},
                               {"p1", {a.p1.x, a.p1.y}},
                               {"p2", {a.p2.x, a.p2.y}},
                               {"beta", a.beta}});
    }
    doc["triangles"] = nlohmann::json::array();
    for (const TriRecord& r : m.triangles) {
        nlohmann::json t{{"v", {r.v[0], r.v[1], r.v[2]}}};
        if (r.arc) t["arc"] = {{"index", r.arc->index}, {"reversed", r.arc->reversed}};
        doc["triangles"].push_back(t);
    }
    return doc.dump(2);
}

CurvedTriangulation load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return mesh_from_json(ss.str());
}

void save_mesh(const CurvedTriangulation& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file: " + path);
    out << mesh_to_json(m) << "\n";
}

// ---------------------------------------------------------------------------
// Validation

namespace {

// Cartesian coefficients (x^2, xy, y^2, x, y, 1) of a quadratic, recovered
// exactly from point evaluations.
std::array<double, 6> cartesian_coeffs(const QuadraticForm& q) {
    const double q00 = q.eval(Point{0, 0});
    const double qp0 = q.eval(Point{1, 0}), qm0 = q.eval(Point{-1, 0});
    const double q0p = q.eval(Point{0, 1}), q0m = q.eval(Point{0, -1});
    const double qpp = q.eval(Point{1, 1});
    const double c20 = 0.5 * (qp0 + qm0) - q00;
    const double c02 = 0.5 * (q0p + q0m) - q00;
    const double c10 = 0.5 * (qp0 - qm0);
    const double c01 = 0.5 * (q0p - q0m);
    const double c11 = qpp - c20 - c02 - c10 - c01 - q00;
    return {c20, c11, c02, c10, c01, q00};
}

// Two boundary arcs lie on the same conic when their implicitizations
// against a common probe point agree up to scale.  Both forms are already
// normalized to q(probe) = 1, so same conic means equal coefficients.
bool same_conic(const RationalArc& a, const RationalArc& b, Point probe) {
    QuadraticForm qa, qb;
    try {
        qa = implicitize(a, probe);
        qb = implicitize(b, probe);
    } catch (const GeometryError&) {
        // Probe unusable for one of the arcs; fall back to testing whether
        // a's implicit form vanishes along b.
        try {
            qa = implicitize(a, probe);
        } catch (const GeometryError&) {
            return false;
        }
        for (int s = 0; s <= 8; ++s) {
            if (std::abs(qa.eval(eval_arc(b, s / 8.0))) > 1e-10) return false;
        }
        return true;
    }
    const auto ca = cartesian_coeffs(qa);
    const auto cb = cartesian_coeffs(qb);
    double scale = 0.0, diff = 0.0;
    for (int i = 0; i < 6; ++i) {
        scale = std::max({scale, std::abs(ca[i]), std::abs(cb[i])});
        diff = std::max(diff, std::abs(ca[i] - cb[i]));
    }
    return diff <= 1e-10 * std::max(scale, 1.0);
}

}  // namespace

std::vector<std::string> validate_conditions(const CurvedTriangulation& m) {
    std::vector<std::string> out;
    const int nt = (int)m.triangles.size();

    // Structural: pie triangles have two boundary vertices and an interior one.
    for (int t = 0; t < nt; ++t) {
        if (m.classification[t] != TriClass::pie) continue;
        const auto& r = m.triangles[t];
        if (!m.boundary_vertex[r.v[0]] || !m.boundary_vertex[r.v[1]]) {
            out.push_back(fmt_tri(t) + ": curved-edge endpoints are not boundary vertices");
        }
        if (m.boundary_vertex[r.v[2]]) {
            out.push_back(fmt_tri(t) + ": interior vertex of pie triangle lies on the boundary");
        }
    }

    // Boundary integrity: boundary edges form a single closed loop.
    {
        std::vector<std::vector<int>> link(m.vertices.size());
        int nbe = 0;
        for (const EdgeInfo& e : m.edges) {
            if (!e.boundary()) continue;
            ++nbe;
            link[e.a].push_back(e.b);
            link[e.b].push_back(e.a);
        }
        bool loop = nbe > 0;
        for (const auto& l : link) {
            if (!l.empty() && l.size() != 2) loop = false;
        }
        if (loop) {
            int start = -1;
            for (int v = 0; v < (int)link.size(); ++v) {
                if (!link[v].empty()) { start = v; break; }
            }
            int prev = -1, cur = start, steps = 0;
            do {
                const int nxt = (link[cur][0] == prev) ? link[cur][1] : link[cur][0];
                prev = cur;
                cur = nxt;
                ++steps;
            } while (cur != start && steps <= nbe);
            if (steps != nbe) loop = false;
        }
        if (!loop) out.push_back("boundary edges do not form a single closed loop");
    }

    // (a) arc endpoints coincide with mesh vertices.
    for (int t = 0; t < nt; ++t) {
        if (!m.pie_arcs[t]) continue;
        const RationalArc& a = *m.pie_arcs[t];
        if (dist(a.p0, m.vertices[m.triangles[t].v[0]]) > kAttachTol ||
            dist(a.p2, m.vertices[m.triangles[t].v[1]]) > kAttachTol) {
            out.push_back("(a) " + fmt_tri(t) + ": arc endpoints are not mesh vertices");
        }
    }

    // (b) no interior edge with both endpoints on the boundary.
    for (const EdgeInfo& e : m.edges) {
        if (!e.boundary() && m.boundary_vertex[e.a] && m.boundary_vertex[e.b]) {
            out.push_back("(b) interior edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                          ") has both endpoints on the boundary");
        }
    }

    // (c) corners joining non-proportional boundary pieces, at least one a
    // genuine conic, need an attached buffer triangle.
    {
        // Boundary items incident to each boundary vertex: pie triangle id,
        // or -1 for a straight boundary edge.
        std::vector<std::vector<int>> items(m.vertices.size());
        for (int t = 0; t < nt; ++t) {
            if (!m.pie_arcs[t]) continue;
            items[m.triangles[t].v[0]].push_back(t);
            items[m.triangles[t].v[1]].push_back(t);
        }
        for (const EdgeInfo& e : m.edges) {
            if (e.boundary() && !e.curved) {
                items[e.a].push_back(-1);
                items[e.b].push_back(-1);
            }
        }
        for (int v = 0; v < (int)m.vertices.size(); ++v) {
            if (items[v].size() != 2) continue;  // interior, or reported elsewhere
            const int ta = items[v][0], tb = items[v][1];
            if (ta < 0 && tb < 0) continue;  // two straight pieces
            bool proportional = false;
            if (ta >= 0 && tb >= 0) {
                proportional = same_conic(*m.pie_arcs[ta], *m.pie_arcs[tb],
                                          m.vertices[m.triangles[ta].v[2]]);
            }
            if (proportional) continue;
            bool has_buffer = false;
            for (int t = 0; t < nt && !has_buffer; ++t) {
                if (m.classification[t] != TriClass::buffer) continue;
                const auto& r = m.triangles[t];
                has_buffer = (r.v[0] == v || r.v[1] == v || r.v[2] == v);
            }
            if (!has_buffer) {
                out.push_back("(c) no buffer triangle attached to corner vertex " + std::to_string(v));
            }
        }
    }

    // (d) star-shapedness: the barrier height phi(tau) exists on a tau-grid.
    for (int t = 0; t < nt; ++t) {
        if (!m.qforms[t]) continue;
        bool ok = true;
        for (int s = 0; s <= 64 && ok; ++s) {
            try {
                (void)ray_height(*m.qforms[t], s / 64.0);
            } catch (const GeometryError&) {
                ok = false;
            }
        }
        if (!ok) out.push_back("(d) " + fmt_tri(t) + ": not star-shaped w.r.t. its interior vertex");
    }

    // (e) q > 0 strictly inside the pie.
    for (int t = 0; t < nt; ++t) {
        if (!m.qforms[t]) continue;
        const QuadraticForm& q = *m.qforms[t];
        bool ok = true;
        for (int i = 1; i <= 16 && ok; ++i) {
            const double tau = (i - 0.5) / 16.0;
            double phi;
            try {
                phi = ray_height(q, tau);
            } catch (const GeometryError&) {
                ok = false;
                break;
            }
            for (int j = 1; j <= 16 && ok; ++j) {
                const double u = phi * (j / 16.0) * (1.0 - 1e-3);
                if (q.eval(duffy(q.tstar, tau, u)) <= 0.0) ok = false;
            }
        }
        if (!ok) out.push_back("(e) " + fmt_tri(t) + ": q is not positive inside the pie");
    }

    return out;
}

// ---------------------------------------------------------------------------
// Refinement

CurvedTriangulation refine_uniform(const CurvedTriangulation& m) {
    CurvedTriangulation f;
    f.vertices = m.vertices;
    std::vector<int> edge_mid(m.edges.size());
    std::vector<RationalArc> child_arcs;
    child_arcs.reserve(2 * m.arcs.size());

    for (int e = 0; e < (int)m.edges.size(); ++e) {
        const EdgeInfo& ei = m.edges[e];
        Point mid;
        if (ei.curved) {
            const int t = ei.t0;
            mid = eval_arc(*m.pie_arcs[t], 0.5);
        } else {
            mid = 0.5 * (m.vertices[ei.a] + m.vertices[ei.b]);
        }
        edge_mid[e] = (int)f.vertices.size();
        f.vertices.push_back(mid);
    }

    auto emit = [&](const TriRecord& r) { f.triangles.push_back(r); };
    for (int t = 0; t < (int)m.triangles.size(); ++t) {
        const auto& r = m.triangles[t];
        const int e12 = edge_mid[m.tri_edges[t][0]];  // midpoint of (v1, v2)
        const int e02 = edge_mid[m.tri_edges[t][1]];  // midpoint of (v0, v2)
        const int e01 = edge_mid[m.tri_edges[t][2]];  // midpoint of (v0, v1) or arc midpoint
        if (!r.arc) {
            emit({{r.v[0], e01, e02}, std::nullopt});
            emit({{e01, r.v[1], e12}, std::nullopt});
            emit({{e02, e12, r.v[2]}, std::nullopt});
            emit({{e01, e12, e02}, std::nullopt});
        } else {
            const auto [left, right] = subdivide_arc(*m.pie_arcs[t]);
            const int ia = (int)child_arcs.size();
            child_arcs.push_back(left);
            child_arcs.push_back(right);
            emit({{r.v[0], e01, e02}, ArcRef{ia, false}});
            emit({{e01, r.v[1], e12}, ArcRef{ia + 1, false}});
            emit({{e02, e12, r.v[2]}, std::nullopt});
            emit({{e01, e12, e02}, std::nullopt});
        }
    }
    f.arcs = std::move(child_arcs);
    f.finalize();
    const auto violations = validate_conditions(f);
    if (!violations.empty()) {
        std::string msg = "refined mesh fails validation:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw ValidationError(msg);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Shape constants

namespace {

double segment_distance(Point p, Point a, Point b) {
    const Point d = b - a;
    const double dd = dot(d, d);
    double t = dd > 0.0 ? dot(p - a, d) / dd : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, a + t * d);
}

// Radius of the largest inscribed disk of a simple (possibly non-convex)
// polygon: maximize the boundary clearance over a grid, then refine by
// pattern search in 8 directions.
double polygon_inradius(const std::vector<Point>& poly) {
    const int n = (int)poly.size();
    if (n < 3) return 0.0;
    Point lo = poly[0], hi = poly[0];
    for (const Point& p : poly) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    const double scale = std::max(hi.x - lo.x, hi.y - lo.y);
    auto inside = [&](Point p) {
        bool in = false;
        for (int i = 0; i < n; ++i) {
            const Point a = poly[i], b = poly[(i + 1) % n];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double xi = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if (xi > p.x) in = !in;
            }
        }
        return in;
    };
    auto clearance = [&](Point p) {
        double r = 1e300;
        for (int i = 0; i < n; ++i) r = std::min(r, segment_distance(p, poly[i], poly[(i + 1) % n]));
        return inside(p) ? r : -r;
    };
    const int grid = 96;
    Point best = poly[0];
    double fbest = -1e300;
    for (int i = 1; i < grid; ++i) {
        for (int j = 1; j < grid; ++j) {
            const Point p{lo.x + (hi.x - lo.x) * i / grid, lo.y + (hi.y - lo.y) * j / grid};
            const double f = clearance(p);
            if (f > fbest) {
                fbest = f;
                best = p;
            }
        }
    }
    double step = scale / grid;
    while (step > 1e-9 * scale) {
        bool moved = false;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const Point p{best.x + step * dx, best.y + step * dy};
                const double f = clearance(p);
                if (f > fbest) {
                    fbest = f;
                    best = p;
                    moved = true;
                }
            }
        }
        if (!moved) step *= 0.5;
    }
    return std::max(fbest, 0.0);
}

}  // namespace

ShapeReport shape_constants(const CurvedTriangulation& m, int d) {
    (void)d;
    ShapeReport rep;
    rep.B = 1e300;
    for (int t = 0; t < (int)m.triangles.size(); ++t) {
        const Triangle ts = m.tri(t);
        double rho;
        if (!m.qforms[t]) {
            rho = inradius(ts);
        } else {
            const RationalArc& a = *m.pie_arcs[t];
            const Bary sh = barycentric(ts, shoulder_point(a));
            if (sh.b3 <= 0.0) {
                // Arc bulges away from v3: T contains T*, so T cap T* = T*.
                rho = inradius(ts);
            } else {
                // Arc dips inside T*: T cap T* is the curved triangle itself,
                // approximated by the 64-segment chord polyline of the arc.
                std::vector<Point> poly{ts.v3};
                for (int s = 0; s <= 64; ++s) poly.push_back(eval_arc(a, s / 64.0));
                rho = polygon_inradius(poly);
            }
        }
        if (rho > 0.0) rep.R = std::max(rep.R, m.tri_diameter(t) / rho);

        if (m.qforms[t]) {
            const QuadraticForm& q = *m.qforms[t];
            double qmax = 1.0;  // q(v3) = 1
            for (int i = 0; i < 16; ++i) {
                const double tau = (i + 0.5) / 16.0;
                const double phi = ray_height(q, tau);
                for (int j = 0; j < 16; ++j) {
                    qmax = std::max(qmax, q.eval(duffy(q.tstar, tau, phi * (j + 0.5) / 16.0)));
                }
            }
            rep.A = std::max(rep.A, qmax);
            const BBPatch qp = q.as_patch();
            const RationalArc& a = *m.pie_arcs[t];
            for (int s = 0; s <= 128; ++s) {
                const Point z = eval_arc(a, s / 128.0);
                const Point dir = q.tstar.v3 - z;
                const double len = norm(dir);
                if (len < 1e-30) continue;
                rep.B = std::min(rep.B, dot(grad_bb(qp, z), (1.0 / len) * dir));
            }
        }
    }
    if (rep.B == 1e300) rep.B = 0.0;  // no pie triangles
    return rep;
}

}  // namespace conicfem
