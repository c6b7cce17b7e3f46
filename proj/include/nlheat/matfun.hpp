#pragma once

// phi(z) = (e^z - 1) / z for scalars, small dense symmetric matrices, and
// as an action phi(-tau A) v on large sparse symmetric PSD operators.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "errors.hpp"
#include "grid.hpp"

namespace nlheat {

inline double phi_scalar(double z) {
    if (std::abs(z) < 1e-4) return 1.0 + z * (1.0 / 2 + z * (1.0 / 6 + z * (1.0 / 24 + z / 120)));
    return std::expm1(z) / z;
}

/// tau * phi(-tau * omega); equals tau exactly for omega == 0.
inline double phi_prefactor(double tau, double omega) { return tau * phi_scalar(-tau * omega); }

/// phi(M) for symmetric M through M = Q diag(lambda) Q^T.
inline Eigen::MatrixXd phi_dense(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ContractError("phi_dense needs a square matrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-13 * scale)
        throw ContractError("phi_dense needs a symmetric matrix");
    if (m.rows() == 0) return m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd phis = es.eigenvalues().unaryExpr([](double z) { return phi_scalar(z); });
    return es.eigenvectors() * phis.asDiagonal() * es.eigenvectors().transpose();
}

struct KrylovConfig {
    int max_dim = 30;
    int max_restarts = 200;
    double tol = 1e-1;
    /// Orthogonalize every new Lanczos vector against the whole basis.
    bool full_reorth = false;

    void validate() const {
        if (max_dim < 2) throw ConfigError("Krylov dimension must be at least 2");
        if (!(tol > 0.0)) throw ConfigError("Krylov tolerance must be positive");
        if (max_restarts < 0) throw ConfigError("restart limit must be nonnegative");
    }
};

struct PhiActionResult {
    Vector w;
    std::uint64_t matvecs = 0;
    int restarts = 0;
    double est_error = 0.0;
};

namespace detail {

/// Lanczos tridiagonal T_k in eigen-decomposed form, with the coefficient
/// vector c(h) = phi(-h T_k) e_1.
class ProjectedPhi {
public:
    void compute(const std::vector<double>& alpha, const std::vector<double>& beta, int k) {
        Eigen::VectorXd d(k), e(std::max(k - 1, 0));
        for (int i = 0; i < k; ++i) d[i] = alpha[i];
        for (int i = 0; i + 1 < k; ++i) e[i] = beta[i];
        if (k == 1) {
            theta_ = d;
            q_ = Eigen::MatrixXd::Ones(1, 1);
        } else {
            es_.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
            theta_ = es_.eigenvalues();
            q_ = es_.eigenvectors();
        }
    }

    Eigen::VectorXd coefficients(double h) const {
        Eigen::VectorXd f(theta_.size());
        for (Eigen::Index i = 0; i < theta_.size(); ++i)
            f[i] = phi_scalar(-h * theta_[i]) * q_(0, i);
        return q_ * f;
    }

private:
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
    Eigen::VectorXd theta_;
    Eigen::MatrixXd q_;
};

} // namespace detail

/// w ~ phi(-tau A) v by restarted Lanczos.
///
/// u(s) = s phi(-s A) v solves u' = -A u + v, u(0) = 0, so the interval
/// [0, tau] can be split: each cycle advances u over [s, s + h] with the
/// action h phi(-h A)(v - A u(s)). A cycle that has not met the tolerance at
/// max_dim reuses its basis with h halved until the estimate is met; the
/// next cycle starts from the new u. The per-cycle error estimate is
/// h ||r|| beta_{k+1} |e_k^T phi(-h T_k) e_1| and must stay below tol ||v||.
inline PhiActionResult phi_action(DiscreteOperator& op, const Vector& v, double tau,
                                  const KrylovConfig& cfg) {
    cfg.validate();
    if (!(tau > 0.0)) throw ConfigError("phi_action needs tau > 0");
    const int n = op.size();
    if (v.size() != n) throw DimensionError("phi_action vector length mismatch");

    PhiActionResult res;
    const double vnorm = v.norm();
    if (vnorm == 0.0) {
        res.w = Vector::Zero(n);
        return res;
    }
    const std::uint64_t mv0 = op.matvecs();
    const double target = cfg.tol * vnorm;
    const int m = std::min(cfg.max_dim, n);

    Eigen::MatrixXd basis(n, m + 1);
    std::vector<double> alpha(m), beta(m);
    detail::ProjectedPhi proj;
    Vector u = Vector::Zero(n);
    Vector r = v;
    Vector w(n);
    double s = 0.0;
    double err_accum = 0.0;
    int cycle = 0;

    while (tau - s > 1e-14 * tau) {
        const double rnorm = r.norm();
        if (rnorm == 0.0) break; // u has reached the steady state of u' = -Au + v
        const bool last_chance = cycle >= cfg.max_restarts;
        const double remaining = tau - s;

        basis.col(0) = r / rnorm;
        double tnorm = 0.0;
        int k = 0;
        double h = remaining;
        double est = 0.0;
        Eigen::VectorXd c;
        for (k = 1; k <= m; ++k) {
            op.apply(basis.col(k - 1), w);
            if (k > 1) w -= beta[k - 2] * basis.col(k - 2);
            alpha[k - 1] = basis.col(k - 1).dot(w);
            w -= alpha[k - 1] * basis.col(k - 1);
            if (cfg.full_reorth) {
                for (int pass = 0; pass < 2; ++pass)
                    for (int i = 0; i < k; ++i) w -= basis.col(i).dot(w) * basis.col(i);
            }
            const double b = w.norm();
            tnorm = std::max(tnorm, std::abs(alpha[k - 1]) + b + (k > 1 ? beta[k - 2] : 0.0));
            const bool breakdown = b <= 1e-13 * tnorm;

            proj.compute(alpha, beta, k);
            c = proj.coefficients(h);
            est = breakdown ? 0.0 : rnorm * h * b * std::abs(c[k - 1]);
            if (est <= target) break;
            if (k == m) {
                if (last_chance) break;
                while (est > target && h > 1e-300) {
                    h *= 0.5;
                    c = proj.coefficients(h);
                    est = rnorm * h * b * std::abs(c[k - 1]);
                }
                break;
            }
            beta[k - 1] = b;
            basis.col(k) = w / b;
        }
        k = std::min(k, m);

        const Vector inc = (rnorm * h) * (basis.leftCols(k) * c);
        u += inc;
        s = (h == remaining) ? tau : s + h;
        err_accum += h * est;
        ++cycle;

        if (est > target) {
            throw ConvergenceError("phi action: restart limit reached before tolerance", u / tau,
                                   err_accum / tau);
        }
        if (s < tau) {
            // A * inc from the Lanczos relation A V_k = V_k T_k + w e_k^T.
            Eigen::VectorXd tc(k);
            for (int i = 0; i < k; ++i) {
                tc[i] = alpha[i] * c[i];
                if (i > 0) tc[i] += beta[i - 1] * c[i - 1];
                if (i + 1 < k) tc[i] += beta[i] * c[i + 1];
            }
            r -= (rnorm * h) * (basis.leftCols(k) * tc + w * c[k - 1]);
        }
    }

    res.w = u / tau;
    res.est_error = err_accum / tau;
    res.restarts = std::max(cycle - 1, 0);
    res.matvecs = op.matvecs() - mv0;
    return res;
}

} // namespace nlheat
