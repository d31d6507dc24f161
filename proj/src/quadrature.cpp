#include "conicfem/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace conicfem {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix built from the
// monic three-term recurrence, weights are mu0 * (first eigenvector row)^2.
Rule1D golub_welsch(int q, const std::vector<double>& alpha, const std::vector<double>& beta,
                    double mu0) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i < q; ++i) {
        J(i, i) = alpha[i];
        if (i + 1 < q) J(i, i + 1) = J(i + 1, i) = std::sqrt(beta[i + 1]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Rule1D r;
    r.nodes.resize(q);
    r.weights.resize(q);
    for (int i = 0; i < q; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        r.weights[i] = mu0 * v0 * v0;
    }
    return r;
}

}  // namespace

Rule1D gauss_legendre_01(int q) {
    if (q < 1) throw UsageError("quadrature order must be >= 1");
    // Shifted Legendre on [0,1]: alpha_k = 1/2, beta_k = k^2 / (4(4k^2-1)).
    std::vector<double> alpha(q, 0.5), beta(q, 0.0);
    for (int k = 1; k < q; ++k) beta[k] = k * k / (4.0 * (4.0 * k * k - 1.0));
    return golub_welsch(q, alpha, beta, 1.0);
}

Rule1D gauss_jacobi_01(int q) {
    if (q < 1) throw UsageError("quadrature order must be >= 1");
    // Weight t on [0,1]: shifted Jacobi (a,b) = (0,1).  On [-1,1]:
    // alpha_k = 1/((2k+1)(2k+3)), beta_k = k(k+1)/(2k+1)^2; map x -> (x+1)/2.
    std::vector<double> alpha(q), beta(q, 0.0);
    for (int k = 0; k < q; ++k) {
        alpha[k] = (1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0)) + 1.0) / 2.0;
    }
    for (int k = 1; k < q; ++k) {
        const double b = k * (k + 1.0) / ((2.0 * k + 1.0) * (2.0 * k + 1.0));
        beta[k] = b / 4.0;
    }
    return golub_welsch(q, alpha, beta, 0.5);
}

Point duffy(const Triangle& t, double t1, double t2) {
    const double b1 = (1.0 - t1) * t2;
    const double b2 = t1 * t2;
    const double b3 = 1.0 - t2;
    return b1 * t.v1 + b2 * t.v2 + b3 * t.v3;
}

std::vector<QuadPoint> curved_rule(const Triangle& tstar, const QuadraticForm* qform, int order) {
    require_nondegenerate(tstar);
    const Rule1D leg = gauss_legendre_01(order);
    const Rule1D jac = gauss_jacobi_01(order);
    const double two_area = 2.0 * std::abs(signed_area(tstar));
    std::vector<QuadPoint> pts;
    pts.reserve(order * order);
    for (int mu = 0; mu < order; ++mu) {
        const double tau = leg.nodes[mu];
        const double phi = qform ? ray_height(*qform, tau) : 1.0;
        const double wmu = two_area * leg.weights[mu] * phi * phi;
        for (int nu = 0; nu < order; ++nu) {
            pts.push_back({duffy(tstar, tau, phi * jac.nodes[nu]), wmu * jac.weights[nu]});
        }
    }
    return pts;
}

MomentPlan::MomentPlan(const Triangle& tstar, const QuadraticForm* qform, int m, int order)
    : m_(m), q_(order) {
    require_nondegenerate(tstar);
    if (m < 0) throw UsageError("moment degree must be >= 0");
    if (2 * order <= m) throw UsageError("moment quadrature requires order > m/2");
    const Rule1D leg = gauss_legendre_01(order);
    const Rule1D jac = gauss_jacobi_01(order);
    jac_ = 2.0 * std::abs(signed_area(tstar));

    centers_.resize(order * order);
    wphi2_.resize(order);
    const int vstride = (m + 1) * (m + 2) / 2;
    vtab_.assign(order * vstride, 0.0);
    utab_.assign(order * order * (m + 1), 0.0);

    std::vector<double> powt(m + 1), pown(m + 1);
    for (int mu = 0; mu < order; ++mu) {
        const double tau = leg.nodes[mu];
        const double phi = qform ? ray_height(*qform, tau) : 1.0;
        wphi2_[mu] = leg.weights[mu] * phi * phi;
        // V table: B^{m-k}_j(tau), rows k = 0..m, j = 0..m-k.
        powt[0] = pown[0] = 1.0;
        for (int r = 1; r <= m; ++r) {
            powt[r] = powt[r - 1] * tau;
            pown[r] = pown[r - 1] * (1.0 - tau);
        }
        double* vrow = vtab_.data() + mu * vstride;
        for (int k = 0, off = 0; k <= m; off += m - k + 1, ++k) {
            const int n = m - k;
            for (int j = 0; j <= n; ++j) {
                vrow[off + j] = detail::binomial(n, j) * powt[j] * pown[n - j];
            }
        }
        // U table: w~_nu C(m,k) t2^{m-k} (1-t2)^k at t2 = phi * x~_nu.
        for (int nu = 0; nu < order; ++nu) {
            const double t2 = phi * jac.nodes[nu];
            centers_[mu * order + nu] = {duffy(tstar, tau, t2),
                                         jac_ * wphi2_[mu] * jac.weights[nu]};
            powt[0] = pown[0] = 1.0;
            for (int r = 1; r <= m; ++r) {
                powt[r] = powt[r - 1] * t2;
                pown[r] = pown[r - 1] * (1.0 - t2);
            }
            double* urow = utab_.data() + (mu * order + nu) * (m + 1);
            for (int k = 0; k <= m; ++k) {
                urow[k] = jac.weights[nu] * detail::binomial(m, k) * powt[m - k] * pown[k];
            }
        }
    }
}

std::vector<double> MomentPlan::moments(const std::function<double(Point)>& f) const {
    const int m = m_, q = q_;
    // Inner sums over nu: sigma[mu][k].
    std::vector<double> sigma(q * (m + 1), 0.0);
    for (int mu = 0; mu < q; ++mu) {
        for (int nu = 0; nu < q; ++nu) {
            const double fv = f(centers_[mu * q + nu].x);
            const double* urow = utab_.data() + (mu * q + nu) * (m + 1);
            double* srow = sigma.data() + mu * (m + 1);
            for (int k = 0; k <= m; ++k) srow[k] += urow[k] * fv;
        }
    }
    // Outer sums over mu.
    const int vstride = (m + 1) * (m + 2) / 2;
    std::vector<double> out(bb_size(m), 0.0);
    for (const auto& [i, j, k] : bb_indices(m)) {
        const int off = k * (2 * m - k + 3) / 2;  // row offset of (k, j=0) in vtab
        double acc = 0.0;
        for (int mu = 0; mu < q; ++mu) {
            acc += wphi2_[mu] * vtab_[mu * vstride + off + j] * sigma[mu * (m + 1) + k];
        }
        out[bb_rank(m, i, j)] = jac_ * acc;
    }
    return out;
}

}  // namespace conicfem
