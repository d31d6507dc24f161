#include "conicfem/assembly.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <thread>

namespace conicfem {

namespace {

int component(const MultiIndex& mi, int l) { return l == 0 ? mi.i : (l == 1 ? mi.j : mi.k); }

// Values of all Bernstein polynomials of degree n at b, in rank order.
// Valid for any barycentric triple (powers computed by multiplication, so
// negative coordinates outside the simplex are handled exactly).
std::vector<double> bernstein_row(int n, const Bary& b) {
    std::vector<double> p1(n + 1, 1.0), p2(n + 1, 1.0), p3(n + 1, 1.0);
    for (int i = 1; i <= n; ++i) {
        p1[i] = p1[i - 1] * b.b1;
        p2[i] = p2[i - 1] * b.b2;
        p3[i] = p3[i - 1] * b.b3;
    }
    std::vector<double> row(bb_size(n));
    for (const auto& mi : bb_indices(n)) {
        row[bb_rank(n, mi.i, mi.j)] = detail::binomial(n, mi.i) *
                                      detail::binomial(n - mi.i, mi.j) * p1[mi.i] *
                                      p2[mi.j] * p3[mi.k];
    }
    return row;
}

std::array<double, 4> coeff_a(const PdeCoefficients& coeffs, Point x) {
    return coeffs.A ? coeffs.A(x) : std::array<double, 4>{1.0, 0.0, 0.0, 1.0};
}

int thread_count() {
    if (const char* env = std::getenv("CONIC_FEM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

struct ElementContext {
    TriClass cls;
    int n;
    Triangle ts;
    const QuadraticForm* qf;
};

ElementContext element_context(const CurvedTriangulation& m, int t, int d) {
    if (t < 0 || t >= static_cast<int>(m.triangles.size())) {
        throw UsageError("element_matrices: triangle index out of range");
    }
    if (d < 1) throw UsageError("element_matrices: degree must be at least 1");
    const TriClass cls = m.classification[t];
    return {cls, cls == TriClass::ordinary ? d : d + 1, m.tri(t),
            cls == TriClass::pie ? &*m.qforms[t] : nullptr};
}

}  // namespace

PdeCoefficients PdeCoefficients::laplace(std::function<double(Point)> load) {
    PdeCoefficients c;
    c.f = std::move(load);
    return c;
}

ElementMatrices element_matrices(const CurvedTriangulation& m, int t,
                                 const PdeCoefficients& coeffs, int d, int q) {
    const auto [cls, n, ts, qf] = element_context(m, t, d);
    const int sz = bb_size(n);
    ElementMatrices em{DenseMat::Zero(sz, sz), DenseMat::Zero(sz, sz), DenseMat::Zero(sz, sz),
                       Vec::Zero(sz)};
    const auto grads = barycentric_gradients(ts);
    const auto idx = bb_indices(n);

    // Stiffness: grad B_xi . A grad B_zeta expands through the product
    // formula into degree-(2n-2) moments of the six fields
    // a_lm(x) = grad b_l . A(x) grad b_m.
    {
        MomentPlan plan(ts, qf, 2 * n - 2, q);
        std::array<std::vector<double>, 9> mu;
        for (int l = 0; l < 3; ++l) {
            for (int mm = l; mm < 3; ++mm) {
                mu[3 * l + mm] = plan.moments([&](Point x) {
                    const auto a = coeff_a(coeffs, x);
                    const Point ag{a[0] * grads[mm].x + a[1] * grads[mm].y,
                                   a[2] * grads[mm].x + a[3] * grads[mm].y};
                    return dot(grads[l], ag);
                });
            }
        }
        const double denom = detail::binomial(2 * n - 2, n - 1);
        for (int r1 = 0; r1 < sz; ++r1) {
            const MultiIndex xi = idx[r1];
            for (int l = 0; l < 3; ++l) {
                if (component(xi, l) == 0) continue;
                const int ai = xi.i - (l == 0), aj = xi.j - (l == 1), ak = xi.k - (l == 2);
                for (int r2 = 0; r2 < sz; ++r2) {
                    const MultiIndex zeta = idx[r2];
                    for (int mm = 0; mm < 3; ++mm) {
                        if (component(zeta, mm) == 0) continue;
                        const int bi = zeta.i - (mm == 0), bj = zeta.j - (mm == 1),
                                  bk = zeta.k - (mm == 2);
                        const double ratio = detail::binomial(ai + bi, ai) *
                                             detail::binomial(aj + bj, aj) *
                                             detail::binomial(ak + bk, ak) / denom;
                        const auto& mo = mu[l <= mm ? 3 * l + mm : 3 * mm + l];
                        em.S(r1, r2) += static_cast<double>(n) * n * ratio *
                                        mo[bb_rank(2 * n - 2, ai + bi, aj + bj)];
                    }
                }
            }
        }
    }

    if (coeffs.b) {
        MomentPlan plan(ts, qf, 2 * n - 1, q);
        std::array<std::vector<double>, 3> mu;
        for (int mm = 0; mm < 3; ++mm) {
            mu[mm] = plan.moments([&](Point x) { return dot(coeffs.b(x), grads[mm]); });
        }
        const double denom = detail::binomial(2 * n - 1, n);
        for (int r1 = 0; r1 < sz; ++r1) {
            const MultiIndex xi = idx[r1];
            for (int r2 = 0; r2 < sz; ++r2) {
                const MultiIndex zeta = idx[r2];
                for (int mm = 0; mm < 3; ++mm) {
                    if (component(zeta, mm) == 0) continue;
                    const int bi = zeta.i - (mm == 0), bj = zeta.j - (mm == 1);
                    const int bk = zeta.k - (mm == 2);
                    const double ratio = detail::binomial(xi.i + bi, xi.i) *
                                         detail::binomial(xi.j + bj, xi.j) *
                                         detail::binomial(xi.k + bk, xi.k) / denom;
                    em.B(r1, r2) +=
                        n * ratio * mu[mm][bb_rank(2 * n - 1, xi.i + bi, xi.j + bj)];
                }
            }
        }
    }

    if (coeffs.c) {
        MomentPlan plan(ts, qf, 2 * n, q);
        const auto mu = plan.moments(coeffs.c);
        const double denom = detail::binomial(2 * n, n);
        for (int r1 = 0; r1 < sz; ++r1) {
            const MultiIndex xi = idx[r1];
            for (int r2 = 0; r2 < sz; ++r2) {
                const MultiIndex zeta = idx[r2];
                const double ratio = detail::binomial(xi.i + zeta.i, xi.i) *
                                     detail::binomial(xi.j + zeta.j, xi.j) *
                                     detail::binomial(xi.k + zeta.k, xi.k) / denom;
                em.M(r1, r2) = ratio * mu[bb_rank(2 * n, xi.i + zeta.i, xi.j + zeta.j)];
            }
        }
    }

    if (coeffs.f) {
        MomentPlan plan(ts, qf, n, q);
        const auto mu = plan.moments(coeffs.f);
        for (int r = 0; r < sz; ++r) em.L[r] = mu[r];
    }
    return em;
}

ElementMatrices element_matrices_direct(const CurvedTriangulation& m, int t,
                                        const PdeCoefficients& coeffs, int d, int q) {
    const auto [cls, n, ts, qf] = element_context(m, t, d);
    const int sz = bb_size(n);
    ElementMatrices em{DenseMat::Zero(sz, sz), DenseMat::Zero(sz, sz), DenseMat::Zero(sz, sz),
                       Vec::Zero(sz)};
    const auto grads = barycentric_gradients(ts);
    const auto idx = bb_indices(n);

    std::vector<Point> g(sz), ag(sz);
    for (const auto& pt : curved_rule(ts, qf, q)) {
        const Bary b = barycentric(ts, pt.x);
        const auto row = bernstein_row(n, b);
        const auto rowm = bernstein_row(n - 1, b);
        for (int r = 0; r < sz; ++r) {
            Point grad{0.0, 0.0};
            const MultiIndex xi = idx[r];
            if (xi.i > 0) grad = grad + rowm[bb_rank(n - 1, xi.i - 1, xi.j)] * grads[0];
            if (xi.j > 0) grad = grad + rowm[bb_rank(n - 1, xi.i, xi.j - 1)] * grads[1];
            if (xi.k > 0) grad = grad + rowm[bb_rank(n - 1, xi.i, xi.j)] * grads[2];
            g[r] = static_cast<double>(n) * grad;
        }
        const auto a = coeff_a(coeffs, pt.x);
        for (int r = 0; r < sz; ++r) {
            ag[r] = {a[0] * g[r].x + a[1] * g[r].y, a[2] * g[r].x + a[3] * g[r].y};
        }
        const Point bv = coeffs.b ? coeffs.b(pt.x) : Point{0.0, 0.0};
        const double cv = coeffs.c ? coeffs.c(pt.x) : 0.0;
        const double fv = coeffs.f ? coeffs.f(pt.x) : 0.0;
        for (int r1 = 0; r1 < sz; ++r1) {
            em.L[r1] += pt.w * fv * row[r1];
            for (int r2 = 0; r2 < sz; ++r2) {
                em.S(r1, r2) += pt.w * dot(g[r1], ag[r2]);
                if (coeffs.b) em.B(r1, r2) += pt.w * row[r1] * dot(bv, g[r2]);
                if (coeffs.c) em.M(r1, r2) += pt.w * cv * row[r1] * row[r2];
            }
        }
    }
    return em;
}

namespace {

void check_and_symmetrize(SparseMat& a, const char* name) {
    SparseMat at = SparseMat(a.transpose());
    double mag = 0.0;
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(a, k); it; ++it) {
            mag = std::max(mag, std::abs(it.value()));
        }
    }
    SparseMat diff = a - at;
    double dev = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(diff, k); it; ++it) {
            dev = std::max(dev, std::abs(it.value()));
        }
    }
    if (dev > 1e-12 * std::max(1.0, mag)) {
        throw SolverError(std::string("assemble: ") + name +
                          " deviates from symmetry beyond tolerance");
    }
    a = 0.5 * (a + at);
}

}  // namespace

AssembledSystem assemble(const DofTable& table, const PdeCoefficients& coeffs, int q) {
    const auto& m = table.mesh();
    const int nt = static_cast<int>(m.triangles.size());
    const int n = table.size();
    const int d = table.degree();

    std::vector<ElementMatrices> ems(nt);
    const int threads = std::max(1, std::min(thread_count(), nt));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto work = [&]() {
        try {
            for (int t = next.fetch_add(1); t < nt; t = next.fetch_add(1)) {
                ems[t] = element_matrices(m, t, coeffs, d, q);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    // Serial scatter in triangle order keeps the result independent of the
    // thread count.
    const bool has_b = static_cast<bool>(coeffs.b);
    const bool has_c = static_cast<bool>(coeffs.c);
    const bool has_f = static_cast<bool>(coeffs.f);
    std::vector<Eigen::Triplet<double>> ts_s, ts_b, ts_m;
    AssembledSystem out;
    out.L = Vec::Zero(n);
    for (int t = 0; t < nt; ++t) {
        const auto& entries = table.entries(t);
        const auto& em = ems[t];
        for (const auto& e1 : entries) {
            if (has_f) out.L[e1.dof] += e1.w * em.L[e1.local];
            for (const auto& e2 : entries) {
                const double w = e1.w * e2.w;
                ts_s.emplace_back(e1.dof, e2.dof, w * em.S(e1.local, e2.local));
                if (has_b) ts_b.emplace_back(e1.dof, e2.dof, w * em.B(e1.local, e2.local));
                if (has_c) ts_m.emplace_back(e1.dof, e2.dof, w * em.M(e1.local, e2.local));
            }
        }
    }
    out.S.resize(n, n);
    out.S.setFromTriplets(ts_s.begin(), ts_s.end());
    out.B.resize(n, n);
    out.B.setFromTriplets(ts_b.begin(), ts_b.end());
    out.M.resize(n, n);
    out.M.setFromTriplets(ts_m.begin(), ts_m.end());
    check_and_symmetrize(out.S, "stiffness matrix");
    if (has_c) check_and_symmetrize(out.M, "mass matrix");
    return out;
}

Vec solve_poisson(const SparseMat& s, const Vec& l, double tol) {
    if (s.rows() != s.cols() || s.rows() != l.size()) {
        throw UsageError("solve_poisson: dimension mismatch");
    }
    const Eigen::Index n = s.rows();
    const double lnorm = l.norm();
    if (lnorm == 0.0) return Vec::Zero(n);

    if (n <= 200000) {
        Eigen::SimplicialLDLT<SparseMat> ldlt(s);
        if (ldlt.info() != Eigen::Success) {
            throw SolverError("solve_poisson: sparse factorization failed");
        }
        if ((ldlt.vectorD().array() <= 0.0).any()) {
            throw SolverError("solve_poisson: matrix is singular or not positive definite");
        }
        Vec x = ldlt.solve(l);
        for (int it = 0; it < 6; ++it) {
            const Vec r = l - s * x;
            if (r.norm() <= tol * lnorm) {
                if (!x.allFinite()) break;
                return x;
            }
            x += ldlt.solve(r);
        }
        throw SolverError("solve_poisson: residual did not reach the requested tolerance");
    }

    Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setMaxIterations(10 * n);
    cg.setTolerance(tol);
    cg.compute(s);
    const Vec x = cg.solve(l);
    if (cg.info() != Eigen::Success || !x.allFinite() || (s * x - l).norm() > tol * lnorm) {
        throw SolverError("solve_poisson: conjugate gradients did not converge within 10 N "
                          "iterations");
    }
    return x;
}

namespace {

double max_eigen_residual(const SparseMat& s, const SparseMat& m, const EigenPairs& pairs) {
    double worst = 0.0;
    for (size_t i = 0; i < pairs.values.size(); ++i) {
        const Vec v = pairs.vectors.col(static_cast<Eigen::Index>(i));
        const Vec sv = s * v;
        const Vec r = sv - pairs.values[i] * (m * v);
        worst = std::max(worst, r.norm() / sv.norm());
    }
    return worst;
}

void check_eigen_residuals(const SparseMat& s, const SparseMat& m, const EigenPairs& pairs) {
    if (!(max_eigen_residual(s, m, pairs) <= 1e-9)) {
        throw SolverError("solve_eigs: eigenpair residual exceeds tolerance");
    }
}

// One subspace-iteration + Rayleigh-Ritz sweep over the dense reduction's
// output.  The O(N) roundoff of the full reduction exceeds fine-mesh
// discretization errors; one sparse shift-invert application restores them.
// Returns the polished pairs only when they beat the input residuals.
EigenPairs polish_dense_pairs(const SparseMat& s, const SparseMat& m, EigenPairs pairs) {
    const Eigen::Index n = s.rows();
    const int k = static_cast<int>(pairs.values.size());
    Eigen::SimplicialLDLT<SparseMat> ldlt(s);
    if (ldlt.info() != Eigen::Success) return pairs;
    DenseMat w(n, k);
    for (int j = 0; j < k; ++j) w.col(j) = ldlt.solve(m * pairs.vectors.col(j));
    const DenseMat gram = w.transpose() * (m * w);
    const Eigen::LLT<DenseMat> llt(gram);
    if (llt.info() != Eigen::Success) return pairs;
    w = llt.matrixL().solve(w.transpose()).transpose();
    const DenseMat sw = w.transpose() * (s * w);
    const Eigen::SelfAdjointEigenSolver<DenseMat> es(0.5 * (sw + sw.transpose()));
    if (es.info() != Eigen::Success) return pairs;
    EigenPairs polished;
    polished.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
    polished.vectors = w * es.eigenvectors();
    if (max_eigen_residual(s, m, polished) < max_eigen_residual(s, m, pairs)) return polished;
    return pairs;
}

// Shift-invert Lanczos at zero shift with the M inner product and full
// reorthogonalization; theta = 1/lambda, so the largest Ritz values of
// S^{-1} M give the smallest eigenvalues.
EigenPairs lanczos_smallest(const SparseMat& s, const SparseMat& m, int k) {
    const Eigen::Index n = s.rows();
    Eigen::SimplicialLDLT<SparseMat> ldlt(s);
    if (ldlt.info() != Eigen::Success) {
        throw SolverError("solve_eigs: factorization of the stiffness matrix failed");
    }
    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    int ncv = static_cast<int>(std::min<Eigen::Index>(n, std::max(3 * k + 20, 60)));
    for (int attempt = 0; attempt < 3; ++attempt) {
        // mbasis caches M * basis so reorthogonalization costs dot products,
        // not sparse multiplies.
        DenseMat basis(n, ncv), mbasis(n, ncv);
        Vec alpha = Vec::Zero(ncv), beta = Vec::Zero(ncv);
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
        v /= std::sqrt(v.dot(m * v));
        int steps = ncv;
        for (int j = 0; j < ncv; ++j) {
            basis.col(j) = v;
            mbasis.col(j) = m * v;
            Vec w = ldlt.solve(mbasis.col(j));
            if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
            alpha[j] = w.dot(mbasis.col(j));
            w -= alpha[j] * v;
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    w -= w.dot(mbasis.col(i)) * basis.col(i);
                }
            }
            const double b2 = w.dot(m * w);
            if (!(b2 > 1e-26)) {
                steps = j + 1;
                break;
            }
            beta[j] = std::sqrt(b2);
            v = w / beta[j];
        }
        if (steps < k) {
            ncv = static_cast<int>(std::min<Eigen::Index>(n, 2 * ncv));
            continue;
        }
        DenseMat tri = DenseMat::Zero(steps, steps);
        for (int j = 0; j < steps; ++j) {
            tri(j, j) = alpha[j];
            if (j + 1 < steps) tri(j, j + 1) = tri(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<DenseMat> es(tri);
        EigenPairs out;
        out.vectors.resize(n, k);
        for (int i = 0; i < k; ++i) {
            // Theta descending gives lambda = 1/theta ascending.
            const int col = steps - 1 - i;
            const double theta = es.eigenvalues()[col];
            if (!(theta > 0.0)) {
                throw SolverError("solve_eigs: non-positive Ritz value in shift-invert "
                                  "iteration");
            }
            Vec ritz = basis.leftCols(steps) * es.eigenvectors().col(col);
            ritz /= std::sqrt(ritz.dot(m * ritz));
            out.values.push_back(1.0 / theta);
            out.vectors.col(i) = ritz;
        }
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            const Vec vi = out.vectors.col(i);
            const Vec sv = s * vi;
            ok = (sv - out.values[static_cast<size_t>(i)] * (m * vi)).norm() <= 1e-9 * sv.norm();
        }
        if (ok) return out;
        ncv = static_cast<int>(std::min<Eigen::Index>(n, 2 * ncv));
    }
    throw SolverError("solve_eigs: shift-invert iteration did not converge");
}

}  // namespace

EigenPairs solve_eigs(const SparseMat& s, const SparseMat& m, int k) {
    if (s.rows() != s.cols() || m.rows() != m.cols() || s.rows() != m.rows()) {
        throw UsageError("solve_eigs: dimension mismatch");
    }
    const Eigen::Index n = s.rows();
    if (k < 1 || k > n) throw UsageError("solve_eigs: invalid number of eigenpairs");

    EigenPairs out;
    if (n <= 4000) {
        const DenseMat sd(s), md(m);
        const Eigen::LLT<DenseMat> llt(md);
        if (llt.info() != Eigen::Success) {
            throw SolverError("solve_eigs: mass matrix is not positive definite");
        }
        Eigen::GeneralizedSelfAdjointEigenSolver<DenseMat> ges(sd, md);
        if (ges.info() != Eigen::Success) {
            throw SolverError("solve_eigs: dense eigenvalue reduction failed");
        }
        out.values.assign(ges.eigenvalues().data(), ges.eigenvalues().data() + k);
        out.vectors = ges.eigenvectors().leftCols(k);
        out = polish_dense_pairs(s, m, std::move(out));
    } else {
        out = lanczos_smallest(s, m, k);
    }
    check_eigen_residuals(s, m, out);
    return out;
}

ErrorNorms error_norms(const DofTable& table, const std::vector<double>& dofs,
                       const std::function<double(Point)>& u,
                       const std::function<Point(Point)>& grad_u, int q) {
    const auto& m = table.mesh();
    const auto blocks = table.apply_T(dofs);
    double l2 = 0.0, semi = 0.0;
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
        BBPatch patch = BBPatch::zero(m.tri(t), table.block_degree(t));
        for (int r = 0; r < table.block_size(t); ++r) {
            patch.coeffs[r] = blocks[table.block_offset(t) + r];
        }
        const QuadraticForm* qf =
            m.classification[t] == TriClass::pie ? &*m.qforms[t] : nullptr;
        for (const auto& pt : curved_rule(patch.tri, qf, q + 2)) {
            const double diff = eval_bb(patch, pt.x) - (u ? u(pt.x) : 0.0);
            l2 += pt.w * diff * diff;
            const Point gd = grad_bb(patch, pt.x) - (grad_u ? grad_u(pt.x) : Point{0.0, 0.0});
            semi += pt.w * dot(gd, gd);
        }
    }
    return {std::sqrt(l2), std::sqrt(l2 + semi)};
}

void write_matrix_market(const SparseMat& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    out << std::setprecision(17);
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(a, k); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
    if (!out) throw IoError("write_matrix_market: write failed for " + path);
}

}  // namespace conicfem
