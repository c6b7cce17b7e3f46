#pragma once

// Benchmark problems: a 1D traveling heat wave, a 2D self-similar profile,
// and the single-spike "numerical Green function" monotonicity test.

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "metrics.hpp"
#include "stepper.hpp"

namespace nlheat {

/// Traveling wave of u_t = (k0 u^sigma u_x)_x with front at x = c t.
inline double exact_1d(double x, double t, double c = 1.0, double k0 = 0.5, double sigma = 2.0) {
    const double s = c * t - x;
    if (s <= 0.0) return 0.0;
    return std::pow(sigma * c / k0 * s, 1.0 / sigma);
}

/// Self-similar solution of u_t = div(u^2 grad u) in 2D; singular at t = 0.
inline double exact_2d(double x, double y, double t) {
    if (!(t > 0.0)) throw DomainError("exact_2d is defined for t > 0 only");
    const double tc = std::cbrt(t);
    const double arg = std::max(0.0, 1.3 - (x * x + y * y) / tc);
    return std::sqrt(arg / 6.0) / tc;
}

/// One row of a reference result table.
struct ReferenceRow {
    std::vector<int> grid;
    double dt;
    Scheme scheme;
    double error;
    long iterations;
    long matvecs;
};

struct TestCase {
    std::string name;
    ProblemSpec spec;
    double t0 = 0.0;
    double t_end = 0.0;
    std::vector<std::vector<int>> grids;
    std::vector<double> dts;
    std::vector<ReferenceRow> reference;
};

inline ProblemSpec heat1d_spec() {
    ProblemSpec s;
    s.dim = 1;
    s.face_average = FaceAverage::state_mean;
    s.domain = Box{{0.0, 0.0}, {1.0, 1.0}};
    s.k0 = 0.5;
    s.sigma = 2.0;
    auto exact = [](const Point& p, double t) { return exact_1d(p[0], t); };
    s.exact_fn = exact;
    s.boundary_fn = exact;
    s.source_fn = [](const Point&, double) { return 0.0; };
    s.initial_fn = [exact](const Point& p) { return exact(p, 0.0); };
    return s;
}

inline ProblemSpec heat2d_spec(double t0 = 1e-4) {
    ProblemSpec s;
    s.dim = 2;
    s.face_average = FaceAverage::conductivity_mean;
    s.domain = Box{{0.0, 0.0}, {1.0, 1.0}};
    s.k0 = 1.0;
    s.sigma = 2.0;
    auto exact = [](const Point& p, double t) { return exact_2d(p[0], p[1], t); };
    s.exact_fn = exact;
    s.boundary_fn = exact;
    s.source_fn = [](const Point&, double) { return 0.0; };
    s.initial_fn = [exact, t0](const Point& p) { return exact(p, t0); };
    return s;
}

/// Homogeneous data with the 1D conductivity; the initial spike is set on
/// the state vector directly (see green_initial_state).
inline ProblemSpec green1d_spec() {
    ProblemSpec s;
    s.dim = 1;
    s.face_average = FaceAverage::state_mean;
    s.k0 = 0.5;
    s.sigma = 2.0;
    s.boundary_fn = [](const Point&, double) { return 0.0; };
    s.source_fn = [](const Point&, double) { return 0.0; };
    s.initial_fn = [](const Point&) { return 0.0; };
    return s;
}

/// Unit entry at node n/2, zero elsewhere.
inline Vector green_initial_state(const Grid& grid) {
    Vector y = Vector::Zero(grid.n_total);
    y[grid.n_total / 2] = 1.0;
    return y;
}

inline TestCase heat1d_case() {
    TestCase c;
    c.name = "heat1d";
    c.spec = heat1d_spec();
    c.t0 = 0.0;
    c.t_end = 0.5;
    c.grids = {{128}, {256}};
    c.dts = {5e-5, 1e-4, 5e-4, 1e-3};
    using S = Scheme;
    c.reference = {
        {{128}, 5e-5, S::backward_euler, 4.07e-3, 10000, 35646},
        {{128}, 1e-4, S::backward_euler, 4.49e-3, 5000, 20206},
        {{128}, 5e-4, S::backward_euler, 7.95e-3, 1008, 7098},
        {{128}, 1e-3, S::backward_euler, 1.18e-2, 587, 5102},
        {{128}, 5e-5, S::exp_euler, 5.26e-3, 10039, 10926},
        {{128}, 1e-4, S::exp_euler, 5.63e-3, 5072, 8053},
        {{128}, 5e-4, S::exp_euler, 9.08e-3, 1118, 4247},
        {{128}, 1e-3, S::exp_euler, 1.11e-2, 642, 3473},
        {{256}, 5e-5, S::backward_euler, 2.33e-3, 10000, 50130},
        {{256}, 1e-4, S::backward_euler, 2.84e-3, 5000, 32482},
        {{256}, 5e-4, S::backward_euler, 6.65e-3, 1086, 13276},
        {{256}, 1e-3, S::backward_euler, 1.12e-2, 668, 9980},
        {{256}, 5e-5, S::exp_euler, 3.61e-3, 10073, 20584},
        {{256}, 1e-4, S::exp_euler, 4.66e-3, 5102, 15241},
        {{256}, 5e-4, S::exp_euler, 7.57e-3, 1142, 9318},
        {{256}, 1e-3, S::exp_euler, 1.08e-2, 768, 7526},
    };
    return c;
}

inline TestCase heat2d_case() {
    TestCase c;
    c.name = "heat2d";
    c.t0 = 1e-4;
    c.t_end = 0.0051;
    c.spec = heat2d_spec(c.t0);
    c.grids = {{64, 64}, {128, 128}, {256, 256}};
    c.dts = {1e-6, 5e-6, 1e-5, 5e-5};
    using S = Scheme;
    c.reference = {
        {{64, 64}, 1e-6, S::backward_euler, 1.24e-2, 5000, 12306},
        {{64, 64}, 5e-6, S::backward_euler, 1.18e-2, 1011, 4266},
        {{64, 64}, 1e-5, S::backward_euler, 1.17e-2, 536, 2668},
        {{64, 64}, 5e-5, S::backward_euler, 1.84e-2, 238, 2884},
        {{64, 64}, 1e-6, S::exp_euler, 1.20e-2, 5000, 5079},
        {{64, 64}, 5e-6, S::exp_euler, 1.16e-2, 1038, 1601},
        {{64, 64}, 1e-5, S::exp_euler, 1.17e-2, 613, 1806},
        {{64, 64}, 5e-5, S::exp_euler, 1.75e-2, 479, 4164},
        {{128, 128}, 1e-6, S::backward_euler, 7.44e-3, 5000, 20556},
        {{128, 128}, 5e-6, S::backward_euler, 7.24e-3, 1032, 6654},
        {{128, 128}, 1e-5, S::backward_euler, 7.65e-3, 613, 5814},
        {{128, 128}, 5e-5, S::backward_euler, 1.95e-2, 398, 9688},
        {{128, 128}, 1e-6, S::exp_euler, 7.20e-3, 5000, 6135},
        {{128, 128}, 5e-6, S::exp_euler, 7.51e-3, 1103, 4129},
        {{128, 128}, 1e-5, S::exp_euler, 8.52e-3, 732, 5210},
        {{128, 128}, 5e-5, S::exp_euler, 2.51e-2, 1045, 18403},
        {{256, 256}, 1e-6, S::backward_euler, 3.13e-3, 5000, 27700},
        {{256, 256}, 5e-6, S::backward_euler, 4.44e-3, 1082, 12860},
        {{256, 256}, 1e-5, S::backward_euler, 6.75e-3, 699, 13728},
        {{256, 256}, 5e-5, S::backward_euler, 2.22e-2, 710, 34812},
        {{256, 256}, 1e-6, S::exp_euler, 3.34e-3, 5000, 12746},
        {{256, 256}, 5e-6, S::exp_euler, 5.88e-3, 1202, 10800},
        {{256, 256}, 1e-5, S::exp_euler, 9.51e-3, 1067, 17955},
        {{256, 256}, 5e-5, S::exp_euler, 3.76e-2, 2759, 106906},
    };
    return c;
}

inline TestCase green1d_case() {
    TestCase c;
    c.name = "green1d";
    c.spec = green1d_spec();
    c.t0 = 0.0;
    c.t_end = 0.1;
    c.grids = {{128}};
    c.dts = {0.1, 1e-4};
    return c;
}

inline std::vector<std::string> case_names() { return {"heat1d", "heat2d", "green1d"}; }

/// Registry lookup by name.
inline TestCase make_case(const std::string& name) {
    if (name == "heat1d") return heat1d_case();
    if (name == "heat2d") return heat2d_case();
    if (name == "green1d") return green1d_case();
    throw ConfigError("unknown test case '" + name + "'");
}

struct GreenResult {
    Vector y;
    double min_entry = 0.0;
    RunReport report;
};

/// Runs the spike initial state to T with homogeneous data.
inline GreenResult green_test(const Grid& grid, const StepperConfig& cfg, double t_end,
                              const Vector* initial = nullptr) {
    const ProblemSpec spec = green1d_spec();
    const Vector y0 = initial ? *initial : green_initial_state(grid);
    GreenResult g;
    g.report = run_simulation(HeatSystem{spec, grid}, cfg, 0.0, t_end, y0);
    if (!g.report.ok) throw ConvergenceError(g.report.message, g.report.y_final, 0.0);
    g.y = g.report.y_final;
    g.min_entry = g.y.minCoeff();
    return g;
}

} // namespace nlheat
