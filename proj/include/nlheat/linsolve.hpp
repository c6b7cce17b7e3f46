#pragma once

// Solvers for (I + dt A) x = rhs with A symmetric positive semidefinite.

#include <cmath>
#include <cstdint>

#include "errors.hpp"
#include "grid.hpp"

namespace nlheat {

struct LinSolveReport {
    Vector x;
    int iterations = 0;
    std::uint64_t matvecs = 0;
    double final_residual_norm = 0.0;
};

/// Unpreconditioned conjugate gradients from x0 = 0. Stops when the
/// recursive residual satisfies ||r|| <= rtol ||rhs||.
inline LinSolveReport cg_solve(DiscreteOperator& op, double dt, const Vector& rhs, double rtol,
                               int maxit) {
    if (dt < 0.0) throw ConfigError("cg_solve needs dt >= 0");
    if (rhs.size() != op.size()) throw DimensionError("cg_solve rhs length mismatch");
    LinSolveReport rep;
    if (dt == 0.0) {
        rep.x = rhs;
        return rep;
    }
    const double bnorm = rhs.norm();
    rep.x = Vector::Zero(rhs.size());
    if (bnorm == 0.0) return rep;

    const std::uint64_t mv0 = op.matvecs();
    Vector r = rhs, p = rhs, q(rhs.size());
    double rr = r.squaredNorm();
    const double stop = rtol * bnorm;
    while (std::sqrt(rr) > stop) {
        if (rep.iterations == maxit) {
            throw ConvergenceError("cg_solve: iteration limit reached", rep.x, std::sqrt(rr));
        }
        op.apply(p, q);
        q = p + dt * q;
        const double a = rr / p.dot(q);
        rep.x += a * p;
        r -= a * q;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
        ++rep.iterations;
    }
    rep.final_residual_norm = std::sqrt(rr);
    rep.matvecs = op.matvecs() - mv0;
    return rep;
}

/// Exactly n_iter Chebyshev iterations on the interval [1, 1 + dt ||A||_1].
inline LinSolveReport chebyshev_solve(DiscreteOperator& op, double dt, const Vector& rhs,
                                      int n_iter) {
    if (n_iter < 1) throw ConfigError("chebyshev_solve needs at least one iteration");
    if (dt < 0.0) throw ConfigError("chebyshev_solve needs dt >= 0");
    if (rhs.size() != op.size()) throw DimensionError("chebyshev_solve rhs length mismatch");

    LinSolveReport rep;
    const double lmin = 1.0;
    const double lmax = 1.0 + dt * op.norm1();
    if (lmax == lmin) {
        // I + dt A == I
        rep.x = rhs;
        rep.iterations = 1;
        return rep;
    }

    const std::uint64_t mv0 = op.matvecs();
    const double theta = 0.5 * (lmax + lmin);
    const double delta = 0.5 * (lmax - lmin);
    const double sigma1 = theta / delta;
    double rho = 1.0 / sigma1;
    rep.x = Vector::Zero(rhs.size());
    Vector r = rhs;
    Vector d = r / theta;
    Vector q(rhs.size());
    for (int k = 0; k < n_iter; ++k) {
        rep.x += d;
        op.apply(d, q);
        r -= d + dt * q;
        const double rho_next = 1.0 / (2.0 * sigma1 - rho);
        d = (rho_next * rho) * d + (2.0 * rho_next / delta) * r;
        rho = rho_next;
    }
    rep.iterations = n_iter;
    rep.final_residual_norm = r.norm();
    rep.matvecs = op.matvecs() - mv0;
    return rep;
}

/// Smallest Chebyshev iteration count whose classical bound
/// 2 q^n, q = (sqrt(k) - 1) / (sqrt(k) + 1), reaches rtol for kappa = k.
inline int chebyshev_iterations_for(double kappa, double rtol) {
    if (kappa <= 1.0) return 1;
    const double sk = std::sqrt(kappa);
    const double q = (sk - 1.0) / (sk + 1.0);
    return std::max(1, static_cast<int>(std::ceil(std::log(rtol / 2.0) / std::log(q))));
}

} // namespace nlheat
