#pragma once

// Brute-force references for small problems: explicit time integration of the
// full nonlinear semidiscrete system and dense direct solves.

#include <cmath>

#include <Eigen/Dense>

#include "errors.hpp"
#include "grid.hpp"

namespace nlheat {

/// Classical RK4 for y' = -A(y, t) y + g(y, t), with a stability guard
/// dt * ||A||_1 <= 0.5 checked at every stage.
template <SemidiscreteSystem System>
Vector reference_integrate(const System& sys, double t0, double t_end, double dt_fine,
                           const Vector& y0) {
    if (!(dt_fine > 0.0)) throw ConfigError("dt_fine must be positive");
    if (t_end < t0) throw ConfigError("final time precedes initial time");
    const long n = std::max(1L, static_cast<long>(std::ceil((t_end - t0) / dt_fine - 1e-9)));
    const double h = (t_end - t0) / static_cast<double>(n);
    const double limit = 1e6 * std::max(y0.norm(), 1.0);

    auto rhs = [&](const Vector& y, double t) {
        DiscreteOperator op = sys.assemble(y, t);
        if (h * op.norm1() > 0.5)
            throw StabilityError("reference integration: dt_fine exceeds 0.5 / ||A||_1");
        return Vector(op.bvec() - op.apply(y));
    };

    Vector y = y0;
    if (t_end == t0) return y;
    for (long s = 0; s < n; ++s) {
        const double t = t0 + static_cast<double>(s) * h;
        const Vector k1 = rhs(y, t);
        const Vector k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h);
        const Vector k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h);
        const Vector k4 = rhs(y + h * k3, t + h);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite() || y.norm() > limit)
            throw StabilityError("reference integration blew up; use a smaller dt_fine");
    }
    return y;
}

inline Vector reference_integrate(const ProblemSpec& spec, const Grid& grid, double t0,
                                  double t_end, double dt_fine) {
    Vector y0(grid.n_total);
    for (int i = 0; i < grid.n_total; ++i) y0[i] = spec.initial_fn(grid.coords[i]);
    return reference_integrate(HeatSystem{spec, grid}, t0, t_end, dt_fine, y0);
}

struct ExplicitEulerResult {
    Vector y;
    double min_entry = 0.0;
};

/// Forward Euler y_{n+1} = y_n - dt A(y_n) y_n + dt g_n. Used to check that
/// small explicit steps keep the state nonnegative.
template <SemidiscreteSystem System>
ExplicitEulerResult explicit_euler_integrate(const System& sys, double t0, double t_end, double dt,
                                             const Vector& y0) {
    const long n = std::max(1L, static_cast<long>(std::ceil((t_end - t0) / dt - 1e-9)));
    const double h = (t_end - t0) / static_cast<double>(n);
    ExplicitEulerResult out{y0, y0.minCoeff()};
    for (long s = 0; s < n; ++s) {
        DiscreteOperator op = sys.assemble(out.y, t0 + static_cast<double>(s) * h);
        out.y += h * (op.bvec() - op.apply(out.y));
        out.min_entry = std::min(out.min_entry, out.y.minCoeff());
    }
    return out;
}

/// LU solve with partial pivoting for small dense systems.
inline Vector dense_solve(const Eigen::MatrixXd& m, const Vector& rhs) {
    if (m.rows() != m.cols() || m.rows() != rhs.size())
        throw DimensionError("dense_solve: dimension mismatch");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    if (!(lu.rcond() > 1e-14)) throw SingularMatrixError("dense_solve: matrix is singular");
    return lu.solve(rhs);
}

} // namespace nlheat
