#include "conicfem/bernstein.hpp"

#include <cmath>

namespace conicfem {

std::vector<MultiIndex> bb_indices(int d) {
    std::vector<MultiIndex> idx;
    idx.reserve(bb_size(d));
    for (int i = d; i >= 0; --i) {
        for (int j = d - i; j >= 0; --j) {
            idx.push_back({i, j, d - i - j});
        }
    }
    return idx;
}

std::vector<Point> domain_points(const Triangle& t, int d) {
    std::vector<Point> pts;
    pts.reserve(bb_size(d));
    for (const auto& [i, j, k] : bb_indices(d)) {
        pts.push_back(1.0 / d * (double(i) * t.v1 + double(j) * t.v2 + double(k) * t.v3));
    }
    return pts;
}

BBPatch BBPatch::zero(const Triangle& t, int d) {
    if (d < 0) throw UsageError("negative polynomial degree");
    return {d, t, std::vector<double>(bb_size(d), 0.0)};
}

double eval_bb(const BBPatch& p, const Bary& b) {
    const int d = p.degree;
    if ((int)p.coeffs.size() != bb_size(d)) throw UsageError("coefficient count does not match degree");
    std::vector<double> c = p.coeffs;
    for (int r = d; r >= 1; --r) {
        // Combine level-r coefficients down to level r-1.
        for (int i = r - 1; i >= 0; --i) {
            for (int j = r - 1 - i; j >= 0; --j) {
                const int k = r - 1 - i - j;
                c[bb_rank(r - 1, i, j)] = b.b1 * c[bb_rank(r, i + 1, j)] +
                                          b.b2 * c[bb_rank(r, i, j + 1)] +
                                          b.b3 * c[bb_rank(r, i, j)];
                (void)k;
            }
        }
    }
    return c[0];
}

double eval_bb(const BBPatch& p, Point x) { return eval_bb(p, barycentric(p.tri, x)); }

Point grad_bb(const BBPatch& p, const Bary& b) {
    const int d = p.degree;
    if (d == 0) return {0.0, 0.0};
    // Directional derivative along barycentric direction a (sum zero):
    // D_a p = d * sum_{|l|=d-1} (a1 c_{l+e1} + a2 c_{l+e2} + a3 c_{l+e3}) B^{d-1}_l.
    auto directional = [&](double a1, double a2, double a3) {
        BBPatch dp = BBPatch::zero(p.tri, d - 1);
        for (int i = d - 1; i >= 0; --i) {
            for (int j = d - 1 - i; j >= 0; --j) {
                dp.coeffs[bb_rank(d - 1, i, j)] =
                    d * (a1 * p.coeffs[bb_rank(d, i + 1, j)] +
                         a2 * p.coeffs[bb_rank(d, i, j + 1)] +
                         a3 * p.coeffs[bb_rank(d, i, j)]);
            }
        }
        return eval_bb(dp, b);
    };
    const double g2 = directional(-1.0, 1.0, 0.0);  // along v2 - v1
    const double g3 = directional(-1.0, 0.0, 1.0);  // along v3 - v1
    const Point u2 = p.tri.v2 - p.tri.v1;
    const Point u3 = p.tri.v3 - p.tri.v1;
    // Solve J^T grad = (g2, g3) with J = [u2 u3].
    const double det = cross(u2, u3);
    return {(u3.y * g2 - u2.y * g3) / det, (-u3.x * g2 + u2.x * g3) / det};
}

Point grad_bb(const BBPatch& p, Point x) { return grad_bb(p, barycentric(p.tri, x)); }

BBPatch degree_raise(const BBPatch& p) {
    const int d = p.degree;
    BBPatch out = BBPatch::zero(p.tri, d + 1);
    auto c = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0) return 0.0;
        return p.coeffs[bb_rank(d, i, j)];
    };
    for (const auto& [i, j, k] : bb_indices(d + 1)) {
        out.coeffs[bb_rank(d + 1, i, j)] =
            (i * c(i - 1, j, k) + j * c(i, j - 1, k) + k * c(i, j, k - 1)) / (d + 1);
    }
    return out;
}

BBPatch bb_product(const BBPatch& p, const BBPatch& r) {
    const auto same = [](Point a, Point b) { return a.x == b.x && a.y == b.y; };
    if (!same(p.tri.v1, r.tri.v1) || !same(p.tri.v2, r.tri.v2) || !same(p.tri.v3, r.tri.v3)) {
        throw UsageError("bb_product requires patches over the same triangle");
    }
    const int d = p.degree, q = r.degree;
    BBPatch out = BBPatch::zero(p.tri, d + q);
    const double denom = detail::binomial(d + q, d);
    for (const auto& [i, j, k] : bb_indices(d)) {
        const double cp = p.coeffs[bb_rank(d, i, j)];
        if (cp == 0.0) continue;
        for (const auto& [s, t, u] : bb_indices(q)) {
            const double cr = r.coeffs[bb_rank(q, s, t)];
            if (cr == 0.0) continue;
            const double w = detail::binomial(i + s, i) * detail::binomial(j + t, j) *
                             detail::binomial(k + u, k) / denom;
            out.coeffs[bb_rank(d + q, i + s, j + t)] += w * cp * cr;
        }
    }
    return out;
}

namespace detail {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double v = 1.0;
    for (int t = 0; t < k; ++t) v = v * (n - t) / (t + 1);
    return v;
}

double bernstein_1d(int n, int nu, double t) {
    if (nu < 0 || nu > n) return 0.0;
    return binomial(n, nu) * std::pow(t, nu) * std::pow(1.0 - t, n - nu);
}

}  // namespace detail

}  // namespace conicfem
