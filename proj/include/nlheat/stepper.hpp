#pragma once

// Time integrators for y' = -A(y) y + g(t):
//  - backward Euler with Picard iterations (I + dt A(y_m)) y_{m+1} = y_n + dt g
//  - nonlinear exponential Euler with the matrix frozen at the end-of-step
//    iterate: y_{m+1} = y_n + dt phi(-dt A_m)(g - A_m y_n)

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "linsolve.hpp"
#include "matfun.hpp"
#include "metrics.hpp"

namespace nlheat {

enum class Scheme { backward_euler, exp_euler };

inline const char* to_string(Scheme s) {
    return s == Scheme::backward_euler ? "backward_euler" : "exp_euler";
}

struct InnerSolver {
    enum class Kind { cg, chebyshev };
    Kind kind = Kind::cg;
    /// CG relative tolerance; nonpositive means 0.1 * tol.
    double cg_rtol = 0.0;
    int cg_maxit = 10000;
    int cheb_iters = 0;
};

struct StepperConfig {
    Scheme scheme = Scheme::exp_euler;
    double dt = 0.0;
    double tol = 1e-2;
    int max_nonlin_iters = 100;
    InnerSolver inner;
    /// Krylov settings; a nonpositive krylov.tol means 10 * tol.
    KrylovConfig krylov{30, 200, 0.0, false};
    bool deviation_check = false;
    double omega = 0.0;
    /// Replace omega by the Gershgorin bound of each frozen matrix.
    bool gershgorin_omega = false;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
        if (!(tol > 0.0)) throw ConfigError("tol must be positive");
        if (!(omega >= 0.0)) throw ConfigError("omega must be nonnegative");
        if (max_nonlin_iters < 1) throw ConfigError("max_nonlin_iters must be at least 1");
        if (inner.kind == InnerSolver::Kind::chebyshev && inner.cheb_iters < 1)
            throw ConfigError("Chebyshev inner solver needs an iteration count");
        effective_krylov().validate();
    }

    double effective_cg_rtol() const { return inner.cg_rtol > 0.0 ? inner.cg_rtol : 0.1 * tol; }

    KrylovConfig effective_krylov() const {
        KrylovConfig k = krylov;
        if (!(k.tol > 0.0)) k.tol = 10.0 * tol;
        return k;
    }
};

struct StepResult {
    Vector y_next;
    int nonlin_iters = 0;
    std::uint64_t matvecs_used = 0;
    double final_residual = 0.0;
    double deviation_estimate = 0.0;
    bool deviation_warning = false;
    /// max over iterations of ||y_{m+1}|| - bound_m; <= 0 when the bound holds.
    double bound_slack = -std::numeric_limits<double>::infinity();
    /// bound_m at the iteration that attained bound_slack.
    double bound_scale = 0.0;
    std::vector<double> residual_history;
    double opnorm1 = 0.0; // ||A(y_next)||_1
};

/// Raised when the nonlinear iteration does not meet its tolerance.
struct NonconvergenceError : ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

namespace detail {

inline void track_bound(StepResult& res, double norm, double bound) {
    if (norm - bound > res.bound_slack) {
        res.bound_slack = norm - bound;
        res.bound_scale = bound;
    }
}

} // namespace detail

template <SemidiscreteSystem System>
StepResult backward_euler_step(const System& sys, const Vector& y_n, double t_n,
                               const StepperConfig& cfg) {
    cfg.validate();
    if (y_n.size() != sys.size()) throw DimensionError("state length does not match system");
    const double t1 = t_n + cfg.dt;
    const double dt = cfg.dt;

    StepResult res;
    DiscreteOperator op = sys.assemble(y_n, t1);
    Vector y = y_n;
    Vector ay(y_n.size());
    for (int m = 0; m < cfg.max_nonlin_iters; ++m) {
        // Solve for the correction from the current iterate so that inner
        // tolerances scale with the change over the step, not with the state.
        op.apply(y, ay);
        const Vector defect = y_n + dt * op.bvec() - y - dt * ay;
        LinSolveReport lin =
            cfg.inner.kind == InnerSolver::Kind::cg
                ? cg_solve(op, dt, defect, cfg.effective_cg_rtol(), cfg.inner.cg_maxit)
                : chebyshev_solve(op, dt, defect, cfg.inner.cheb_iters);
        y += lin.x;
        detail::track_bound(res, y.norm(), y_n.norm() + dt * op.bvec().norm());
        res.matvecs_used += op.matvecs();

        DiscreteOperator next = sys.assemble(y, t1);
        next.apply(y, ay);
        const Vector rhs_next = y_n + dt * next.bvec();
        const double rnorm = (rhs_next - y - dt * ay).norm();
        res.residual_history.push_back(rnorm);
        ++res.nonlin_iters;
        op = std::move(next);
        if (rnorm <= cfg.tol * rhs_next.norm()) {
            res.y_next = std::move(y);
            res.final_residual = rnorm;
            res.matvecs_used += op.matvecs();
            res.opnorm1 = op.norm1();
            return res;
        }
    }
    std::ostringstream msg;
    msg << "backward Euler: no convergence in " << cfg.max_nonlin_iters
        << " iterations at t = " << t1 << " (last residual " << res.residual_history.back()
        << "); reduce dt so that dt * L * (||y_n|| + dt ||g||) < 1";
    throw NonconvergenceError(msg.str(), y, res.residual_history.back());
}

struct DeviationResult {
    double value = 0.0;
    Vector midpoint; // y_{m+1}(t_n + dt/2) on the frozen-matrix path
    /// Products with the path matrix; products with A_m land on its own counter.
    std::uint64_t matvecs = 0;
};

/// Estimate of the distance between the frozen-matrix solution and the
/// solution with the time-dependent matrix A(y_m(t)), evaluated at the step
/// midpoint: (dt/2) phi(-(dt/2) omega) ||[A_m - A(y_m(s))] y_{m+1}(s)||.
/// The path y_m(s) is represented by the midpoint of the previous
/// iteration's frozen path; without one (first iteration) the matrix is
/// constant and the estimate is zero.
template <SemidiscreteSystem System>
DeviationResult deviation_estimate(const System& sys, DiscreteOperator& a_m,
                                   const Vector* previous_midpoint, const Vector& y_n,
                                   double t_n, double dt, double omega,
                                   const KrylovConfig& krylov) {
    DeviationResult out;
    const double half = 0.5 * dt;
    const Vector v = a_m.bvec() - a_m.apply(y_n);
    out.midpoint = y_n + half * phi_action(a_m, v, half, krylov).w;
    if (previous_midpoint != nullptr) {
        DiscreteOperator a_path = sys.assemble(*previous_midpoint, t_n + dt);
        const Vector fm = a_m.apply(out.midpoint) - a_m.bvec();
        const Vector fp = a_path.apply(out.midpoint) - a_path.bvec();
        out.value = phi_prefactor(half, omega) * (fm - fp).norm();
        out.matvecs = a_path.matvecs();
    }
    return out;
}

template <SemidiscreteSystem System>
StepResult exp_euler_step(const System& sys, const Vector& y_n, double t_n,
                          const StepperConfig& cfg) {
    cfg.validate();
    if (y_n.size() != sys.size()) throw DimensionError("state length does not match system");
    const double t1 = t_n + cfg.dt;
    const double dt = cfg.dt;
    const KrylovConfig krylov = cfg.effective_krylov();
    const double yn_norm = y_n.norm();

    StepResult res;
    DiscreteOperator op = sys.assemble(y_n, t1);
    Vector y_end = y_n;
    Vector am_y(y_n.size()), an_y(y_n.size());
    std::optional<Vector> prev_mid;
    for (int m = 0; m < cfg.max_nonlin_iters; ++m) {
        const double omega = cfg.gershgorin_omega ? gershgorin_omega(op) : cfg.omega;
        const Vector v = op.bvec() - op.apply(y_n);
        PhiActionResult phi = phi_action(op, v, dt, krylov);
        y_end = y_n + dt * phi.w;
        detail::track_bound(res, y_end.norm(),
                            std::exp(-dt * omega) * yn_norm +
                                phi_prefactor(dt, omega) * op.bvec().norm());

        if (cfg.deviation_check) {
            DeviationResult dev = deviation_estimate(sys, op, prev_mid ? &*prev_mid : nullptr,
                                                     y_n, t_n, dt, omega, krylov);
            res.deviation_estimate = dev.value;
            res.deviation_warning = res.deviation_warning || dev.value > 0.1 * cfg.tol * y_end.norm();
            res.matvecs_used += dev.matvecs;
            prev_mid = std::move(dev.midpoint);
        }

        DiscreteOperator next = sys.assemble(y_end, t1);
        op.apply(y_end, am_y);
        next.apply(y_end, an_y);
        const double rnorm = ((am_y - op.bvec()) - (an_y - next.bvec())).norm();
        res.residual_history.push_back(rnorm);
        ++res.nonlin_iters;
        res.matvecs_used += op.matvecs();
        op = std::move(next);
        if (rnorm <= cfg.tol * an_y.norm()) {
            res.y_next = std::move(y_end);
            res.final_residual = rnorm;
            res.matvecs_used += op.matvecs();
            res.opnorm1 = op.norm1();
            return res;
        }
    }
    std::ostringstream msg;
    msg << "exponential Euler: no convergence in " << cfg.max_nonlin_iters
        << " iterations at t = " << t1 << " (last residual " << res.residual_history.back()
        << "); reduce dt so that dt phi(-dt omega) L max||y(s)|| < 1";
    throw NonconvergenceError(msg.str(), y_end, res.residual_history.back());
}

template <SemidiscreteSystem System>
StepResult take_step(const System& sys, const Vector& y_n, double t_n, const StepperConfig& cfg) {
    return cfg.scheme == Scheme::backward_euler ? backward_euler_step(sys, y_n, t_n, cfg)
                                                : exp_euler_step(sys, y_n, t_n, cfg);
}

inline StepResult backward_euler_step(const ProblemSpec& spec, const Grid& grid, const Vector& y_n,
                                      double t_n, const StepperConfig& cfg) {
    return backward_euler_step(HeatSystem{spec, grid}, y_n, t_n, cfg);
}

inline StepResult exp_euler_step(const ProblemSpec& spec, const Grid& grid, const Vector& y_n,
                                 double t_n, const StepperConfig& cfg) {
    return exp_euler_step(HeatSystem{spec, grid}, y_n, t_n, cfg);
}

struct StepSummary {
    int nonlin_iters = 0;
    std::uint64_t matvecs = 0;
    double final_residual = 0.0;
    double deviation_estimate = 0.0;
    bool deviation_warning = false;
    double bound_slack = 0.0;
    double bound_scale = 0.0;
    double min_entry = 0.0;
    double opnorm1 = 0.0;
};

struct RunReport {
    bool ok = true;
    std::string message;
    Vector y_final;
    double t_final = 0.0;
    int steps = 0;
    double final_error = std::numeric_limits<double>::quiet_NaN();
    long total_nonlin_iters = 0;
    std::uint64_t total_matvecs = 0;
    double min_entry_over_run = std::numeric_limits<double>::infinity();
    double max_opnorm1 = 0.0;
    int deviation_warnings = 0;
    std::vector<StepSummary> per_step;
    double wall_time = 0.0;

    /// Largest (||y_{m+1}|| - bound) / bound over all steps and iterations.
    double max_relative_bound_slack() const {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& s : per_step) {
            const double scale = s.bound_scale > 0.0 ? s.bound_scale : 1.0;
            worst = std::max(worst, s.bound_slack / scale);
        }
        return worst;
    }
};

/// Number of whole steps covering [t0, T]; rejects fractional counts.
inline long step_count(double t0, double t_end, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (t_end < t0) throw ConfigError("final time precedes initial time");
    const double q = (t_end - t0) / dt;
    const long n = std::lround(q);
    if (std::abs(q - static_cast<double>(n)) > 1e-8)
        throw ConfigError("(T - t0) / dt is not a whole number of steps");
    return n;
}

/// Steps from t0 to T. A failing step ends the run; the report then holds
/// the last accepted state with ok == false.
template <SemidiscreteSystem System>
RunReport run_simulation(const System& sys, const StepperConfig& cfg, double t0, double t_end,
                         const Vector& y0) {
    cfg.validate();
    const long nsteps = step_count(t0, t_end, cfg.dt);
    if (y0.size() != sys.size()) throw DimensionError("initial state length does not match system");

    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.y_final = y0;
    rep.t_final = t0;
    rep.min_entry_over_run = y0.size() ? y0.minCoeff() : 0.0;
    {
        DiscreteOperator a0 = sys.assemble(y0, t0);
        rep.max_opnorm1 = a0.norm1();
    }
    rep.per_step.reserve(static_cast<std::size_t>(nsteps));
    for (long n = 0; n < nsteps; ++n) {
        const double tn = t0 + static_cast<double>(n) * cfg.dt;
        try {
            StepResult s = take_step(sys, rep.y_final, tn, cfg);
            StepSummary sum;
            sum.nonlin_iters = s.nonlin_iters;
            sum.matvecs = s.matvecs_used;
            sum.final_residual = s.final_residual;
            sum.deviation_estimate = s.deviation_estimate;
            sum.deviation_warning = s.deviation_warning;
            sum.bound_slack = s.bound_slack;
            sum.bound_scale = s.bound_scale;
            sum.min_entry = s.y_next.minCoeff();
            sum.opnorm1 = s.opnorm1;
            rep.per_step.push_back(sum);

            rep.total_nonlin_iters += s.nonlin_iters;
            rep.total_matvecs += s.matvecs_used;
            rep.min_entry_over_run = std::min(rep.min_entry_over_run, sum.min_entry);
            rep.max_opnorm1 = std::max(rep.max_opnorm1, s.opnorm1);
            rep.deviation_warnings += s.deviation_warning ? 1 : 0;
            rep.y_final = std::move(s.y_next);
            rep.t_final = t0 + static_cast<double>(n + 1) * cfg.dt;
            ++rep.steps;
        } catch (const Error& e) {
            rep.ok = false;
            rep.message = e.what();
            break;
        }
    }
    if (rep.ok) rep.t_final = t_end;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// Heat-problem run starting from the sampled initial function; fills
/// final_error when an exact solution is available.
inline RunReport run_simulation(const ProblemSpec& spec, const Grid& grid, const StepperConfig& cfg,
                                double t0, double t_end) {
    spec.validate();
    Vector y0(grid.n_total);
    for (int i = 0; i < grid.n_total; ++i) y0[i] = spec.initial_fn(grid.coords[i]);
    RunReport rep = run_simulation(HeatSystem{spec, grid}, cfg, t0, t_end, y0);
    if (spec.exact_fn && rep.ok) rep.final_error = relative_error(rep.y_final, spec, grid, rep.t_final);
    return rep;
}

} // namespace nlheat
