#pragma once

// Plumbing for the command-line driver: key=value run configurations,
// parameter sweeps over the benchmark tables, the Green-function data and
// temporal convergence studies. Everything here returns data; file output
// lives in the writers at the bottom.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "oracle.hpp"
#include "problems.hpp"
#include "stepper.hpp"

namespace nlheat {

// ---------------------------------------------------------------- parsing

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

} // namespace detail

inline double parse_double(const std::string& text, const std::string& what) {
    const std::string s = detail::trim(text);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ConfigError("invalid number for " + what + ": '" + text + "'");
    return v;
}

inline int parse_int(const std::string& text, const std::string& what) {
    const std::string s = detail::trim(text);
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ConfigError("invalid integer for " + what + ": '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string& text, const std::string& what) {
    const std::string s = detail::trim(text);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("invalid boolean for " + what + ": '" + text + "'");
}

inline Scheme parse_scheme(const std::string& text) {
    const std::string s = detail::trim(text);
    if (s == "backward_euler" || s == "be") return Scheme::backward_euler;
    if (s == "exp_euler" || s == "ee") return Scheme::exp_euler;
    throw ConfigError("unknown scheme '" + text + "' (backward_euler | exp_euler)");
}

/// "128" or "64x64".
inline std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> out;
    for (const auto& part : detail::split(text, 'x')) out.push_back(parse_int(part, "grid"));
    if (out.empty()) throw ConfigError("empty grid specification");
    return out;
}

inline std::string grid_label(const std::vector<int>& nodes) {
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += (i ? "x" : "") + std::to_string(nodes[i]);
    return s;
}

/// "cg" or "cheb:N".
inline InnerSolver parse_inner(const std::string& text) {
    const std::string s = detail::trim(text);
    InnerSolver in;
    if (s == "cg") return in;
    if (s.rfind("cheb:", 0) == 0) {
        in.kind = InnerSolver::Kind::chebyshev;
        in.cheb_iters = parse_int(s.substr(5), "inner");
        if (in.cheb_iters < 1) throw ConfigError("cheb:N needs N >= 1");
        return in;
    }
    throw ConfigError("unknown inner solver '" + text + "' (cg | cheb:N)");
}

inline std::string inner_label(const InnerSolver& in) {
    return in.kind == InnerSolver::Kind::cg ? "cg" : "cheb:" + std::to_string(in.cheb_iters);
}

/// Flat key=value lines; '#' starts a comment. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

// ---------------------------------------------------------------- runs

struct RunConfig {
    std::string case_name;
    std::vector<int> grid;
    double t0 = 0.0;
    double t_end = 0.0;
    StepperConfig stepper;
};

/// Builds a run configuration from parsed keys. Required: case, dt.
/// Defaults come from the test-case registry.
inline RunConfig make_run_config(const std::map<std::string, std::string>& kv) {
    static const char* known[] = {"case",      "scheme",     "n",          "dt",
                                  "tol",       "t0",         "T",          "inner",
                                  "cg_rtol",   "max_iters",  "krylov_dim", "krylov_tol",
                                  "max_restarts", "full_reorth", "deviation_check", "omega"};
    for (const auto& [k, v] : kv)
        if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw ConfigError("unknown config key '" + k + "'");
    auto get = [&](const char* k) -> std::optional<std::string> {
        auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    RunConfig rc;
    const auto name = get("case");
    if (!name) throw ConfigError("config needs 'case'");
    const TestCase tc = make_case(*name);
    rc.case_name = tc.name;
    rc.grid = get("n") ? parse_grid(*get("n")) : tc.grids.front();
    rc.t0 = get("t0") ? parse_double(*get("t0"), "t0") : tc.t0;
    rc.t_end = get("T") ? parse_double(*get("T"), "T") : tc.t_end;

    StepperConfig& s = rc.stepper;
    if (auto v = get("scheme")) s.scheme = parse_scheme(*v);
    const auto dt = get("dt");
    if (!dt) throw ConfigError("config needs 'dt'");
    s.dt = parse_double(*dt, "dt");
    if (auto v = get("tol")) s.tol = parse_double(*v, "tol");
    if (auto v = get("inner")) s.inner = parse_inner(*v);
    if (auto v = get("cg_rtol")) s.inner.cg_rtol = parse_double(*v, "cg_rtol");
    if (auto v = get("max_iters")) s.max_nonlin_iters = parse_int(*v, "max_iters");
    if (auto v = get("krylov_dim")) s.krylov.max_dim = parse_int(*v, "krylov_dim");
    if (auto v = get("krylov_tol")) s.krylov.tol = parse_double(*v, "krylov_tol");
    if (auto v = get("max_restarts")) s.krylov.max_restarts = parse_int(*v, "max_restarts");
    if (auto v = get("full_reorth")) s.krylov.full_reorth = parse_bool(*v, "full_reorth");
    if (auto v = get("deviation_check")) s.deviation_check = parse_bool(*v, "deviation_check");
    if (auto v = get("omega")) s.omega = parse_double(*v, "omega");

    s.validate();
    if (tc.name == "heat2d" && !(rc.t0 > 0.0)) throw ConfigError("heat2d needs t0 > 0");
    step_count(rc.t0, rc.t_end, s.dt);
    build_grid(tc.spec, rc.grid); // validates node counts
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return make_run_config(parse_key_values(in));
}

struct RunOutcome {
    RunConfig config;
    Grid grid;
    RunReport report;
    bool has_error = false;
};

/// Executes one configured run. green1d starts from the unit spike.
inline RunOutcome execute(const RunConfig& rc) {
    RunOutcome out;
    out.config = rc;
    TestCase tc = make_case(rc.case_name);
    if (rc.case_name == "heat2d") tc.spec = heat2d_spec(rc.t0);
    out.grid = build_grid(tc.spec, rc.grid);
    if (rc.case_name == "green1d") {
        out.report = run_simulation(HeatSystem{tc.spec, out.grid}, rc.stepper, rc.t0, rc.t_end,
                                    green_initial_state(out.grid));
    } else {
        out.report = run_simulation(tc.spec, out.grid, rc.stepper, rc.t0, rc.t_end);
        out.has_error = std::isfinite(out.report.final_error);
    }
    return out;
}

// ---------------------------------------------------------------- sweeps

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn> void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

struct TableRow {
    double dt = 0.0;
    Scheme scheme = Scheme::backward_euler;
    std::vector<int> grid;
    bool ok = false;
    std::string message;
    double error = 0.0;
    long nonlin_iters = 0;
    std::uint64_t matvecs = 0;
    double max_opnorm1 = 0.0;
    double wall_time = 0.0;
    bool min_matvecs = false;
};

struct SweepOptions {
    double tol = 1e-2;
    InnerSolver inner;
    int threads = 1;
    std::optional<std::vector<std::vector<int>>> grids; // override registry grids
    std::optional<std::vector<double>> dts;
};

/// Grid x scheme x dt sweep in table order. Failures become rows with ok == false.
inline std::vector<TableRow> run_table(const std::string& case_name, const SweepOptions& opt) {
    const TestCase tc = make_case(case_name);
    if (tc.reference.empty()) throw ConfigError("case '" + case_name + "' has no table");
    const auto grids = opt.grids ? *opt.grids : tc.grids;
    const auto dts = opt.dts ? *opt.dts : tc.dts;

    std::vector<TableRow> rows;
    for (const auto& g : grids)
        for (Scheme s : {Scheme::backward_euler, Scheme::exp_euler})
            for (double dt : dts) rows.push_back({dt, s, g});

    parallel_for(rows.size(), opt.threads, [&](std::size_t i) {
        TableRow& row = rows[i];
        try {
            RunConfig rc;
            rc.case_name = case_name;
            rc.grid = row.grid;
            rc.t0 = tc.t0;
            rc.t_end = tc.t_end;
            rc.stepper.scheme = row.scheme;
            rc.stepper.dt = row.dt;
            rc.stepper.tol = opt.tol;
            rc.stepper.inner = opt.inner;
            RunOutcome o = execute(rc);
            row.ok = o.report.ok && o.has_error;
            row.message = o.report.ok ? "" : o.report.message;
            row.error = o.report.final_error;
            row.nonlin_iters = o.report.total_nonlin_iters;
            row.matvecs = o.report.total_matvecs;
            row.max_opnorm1 = o.report.max_opnorm1;
            row.wall_time = o.report.wall_time;
        } catch (const Error& e) {
            row.ok = false;
            row.message = e.what();
        }
    });

    // Mark the smallest matvec count per (grid, scheme).
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].ok) continue;
        bool smallest = true;
        for (std::size_t j = 0; j < rows.size(); ++j)
            if (j != i && rows[j].ok && rows[j].grid == rows[i].grid &&
                rows[j].scheme == rows[i].scheme &&
                (rows[j].matvecs < rows[i].matvecs || (rows[j].matvecs == rows[i].matvecs && j < i)))
                smallest = false;
        rows[i].min_matvecs = smallest;
    }
    return rows;
}

struct GreenRun {
    Scheme scheme;
    double dt;
    std::string tag; // "dtT" or "dtT1000"
    Grid grid;
    Vector y;
    double min_entry = 0.0;
    RunReport report;
};

/// Both schemes at dt = T and dt = T/1000 from the unit spike. Unless told
/// otherwise, CG solves to 1e-12 so the mirror symmetry of the single-step
/// solution survives to round-off.
inline std::vector<GreenRun> run_green(int n = 128, double t_end = 0.1, double tol = 1e-2,
                                       InnerSolver inner = {}, int threads = 1) {
    if (inner.kind == InnerSolver::Kind::cg && inner.cg_rtol <= 0.0) inner.cg_rtol = 1e-12;
    const Grid grid = build_grid(green1d_spec(), {n});
    std::vector<GreenRun> runs;
    for (Scheme s : {Scheme::backward_euler, Scheme::exp_euler}) {
        runs.push_back({s, t_end, "dtT", grid});
        runs.push_back({s, t_end / 1000.0, "dtT1000", grid});
    }
    parallel_for(runs.size(), threads, [&](std::size_t i) {
        StepperConfig cfg;
        cfg.scheme = runs[i].scheme;
        cfg.dt = runs[i].dt;
        cfg.tol = tol;
        cfg.inner = inner;
        GreenResult g = green_test(grid, cfg, t_end);
        runs[i].y = std::move(g.y);
        runs[i].min_entry = g.min_entry;
        runs[i].report = std::move(g.report);
    });
    return runs;
}

struct ConvergenceRow {
    Scheme scheme;
    double dt = 0.0;
    double temporal_error = 0.0;
    double ratio = 0.0; // previous / current; 0 for the first row
};

struct ConvergenceStudy {
    std::string case_name;
    std::vector<int> grid;
    double dt_fine = 0.0;
    double spatial_floor = 0.0; // ||ref - exact|| / ||exact||, NaN without exact solution
    std::vector<ConvergenceRow> rows;
};

struct ConvergenceOptions {
    std::optional<std::vector<int>> grid;
    std::optional<std::vector<double>> dts;
    double tol = 1e-6;
    InnerSolver inner;
    double dt_fine = 0.0; // 0: min(dt) / 250
    int threads = 1;
};

/// Temporal errors of both schemes against an RK4 reference on a small grid.
inline ConvergenceStudy run_convergence(const std::string& case_name, const ConvergenceOptions& opt) {
    const TestCase tc = make_case(case_name);
    ConvergenceStudy st;
    st.case_name = tc.name;
    if (opt.grid) st.grid = *opt.grid;
    else st.grid = tc.spec.dim == 2 ? std::vector<int>{16, 16} : std::vector<int>{32};
    std::vector<double> dts;
    if (opt.dts) dts = *opt.dts;
    else if (tc.name == "heat2d") dts = {5e-5, 2.5e-5, 1.25e-5};
    else dts = {1e-3, 5e-4, 2.5e-4};
    if (dts.empty()) return st;

    const Grid grid = build_grid(tc.spec, st.grid);
    const HeatSystem sys{tc.spec, grid};
    Vector y0(grid.n_total);
    if (tc.name == "green1d") y0 = green_initial_state(grid);
    else
        for (int i = 0; i < grid.n_total; ++i) y0[i] = tc.spec.initial_fn(grid.coords[i]);

    st.dt_fine = opt.dt_fine > 0.0 ? opt.dt_fine : *std::min_element(dts.begin(), dts.end()) / 250.0;
    const Vector ref = reference_integrate(sys, tc.t0, tc.t_end, st.dt_fine, y0);
    st.spatial_floor = tc.spec.exact_fn ? relative_error(ref, tc.spec, grid, tc.t_end)
                                        : std::numeric_limits<double>::quiet_NaN();

    for (Scheme s : {Scheme::backward_euler, Scheme::exp_euler})
        for (double dt : dts) st.rows.push_back({s, dt});
    std::vector<std::string> failures(st.rows.size());
    parallel_for(st.rows.size(), opt.threads, [&](std::size_t i) {
        StepperConfig cfg;
        cfg.scheme = st.rows[i].scheme;
        cfg.dt = st.rows[i].dt;
        cfg.tol = opt.tol;
        cfg.inner = opt.inner;
        if (cfg.inner.kind == InnerSolver::Kind::cg && cfg.inner.cg_rtol <= 0.0)
            cfg.inner.cg_rtol = 1e-2 * opt.tol;
        RunReport r = run_simulation(sys, cfg, tc.t0, tc.t_end, y0);
        if (!r.ok) failures[i] = r.message;
        else st.rows[i].temporal_error = (r.y_final - ref).norm() / ref.norm();
    });
    for (const auto& f : failures)
        if (!f.empty()) throw ConvergenceError("convergence study: " + f, Vector(), 0.0);
    for (std::size_t i = 1; i < st.rows.size(); ++i)
        if (st.rows[i].scheme == st.rows[i - 1].scheme)
            st.rows[i].ratio = st.rows[i - 1].temporal_error / st.rows[i].temporal_error;
    return st;
}

// ---------------------------------------------------------------- writers

/// Scientific notation with six significant digits.
inline std::string fmt_sci(double v) {
    if (!std::isfinite(v)) throw MetricError("refusing to write a non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return buf;
}

namespace detail {
inline std::string csv_text(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}
} // namespace detail

inline const char* table_header() {
    return "dt,scheme,grid,error,nonlin_iters,matvecs,max_opnorm1,wall_time,min_matvecs,status";
}

inline void write_table(std::ostream& os, const std::vector<TableRow>& rows) {
    os << table_header() << '\n';
    for (const auto& r : rows) {
        os << fmt_sci(r.dt) << ',' << to_string(r.scheme) << ',' << grid_label(r.grid) << ',';
        if (r.ok) {
            os << fmt_sci(r.error) << ',' << r.nonlin_iters << ',' << r.matvecs << ','
               << fmt_sci(r.max_opnorm1) << ',' << fmt_sci(r.wall_time) << ','
               << (r.min_matvecs ? "*" : "") << ",ok\n";
        } else {
            os << ",,,,,,failed: " << detail::csv_text(r.message) << '\n';
        }
    }
}

/// Two-column key,value report preceded by a '#' header echoing the config.
inline void write_run_report(std::ostream& os, const RunOutcome& o) {
    const RunConfig& c = o.config;
    const StepperConfig& s = c.stepper;
    const KrylovConfig k = s.effective_krylov();
    os << "# case = " << c.case_name << '\n'
       << "# scheme = " << to_string(s.scheme) << '\n'
       << "# grid = " << grid_label(c.grid) << '\n'
       << "# t0 = " << fmt_sci(c.t0) << '\n'
       << "# T = " << fmt_sci(c.t_end) << '\n'
       << "# dt = " << fmt_sci(s.dt) << '\n'
       << "# tol = " << fmt_sci(s.tol) << '\n'
       << "# inner = " << inner_label(s.inner) << '\n'
       << "# cg_rtol = " << fmt_sci(s.effective_cg_rtol()) << '\n'
       << "# krylov_dim = " << k.max_dim << '\n'
       << "# krylov_tol = " << fmt_sci(k.tol) << '\n'
       << "# max_restarts = " << k.max_restarts << '\n'
       << "# max_iters = " << s.max_nonlin_iters << '\n'
       << "# omega = " << fmt_sci(s.omega) << '\n'
       << "# seed = none\n";
    const RunReport& r = o.report;
    os << "key,value\n"
       << "status," << (r.ok ? "ok" : "failed") << '\n';
    if (!r.ok) os << "message," << detail::csv_text(r.message) << '\n';
    os << "steps," << r.steps << '\n' << "t_final," << fmt_sci(r.t_final) << '\n';
    if (o.has_error) os << "final_error," << fmt_sci(r.final_error) << '\n';
    os << "total_nonlin_iters," << r.total_nonlin_iters << '\n'
       << "total_matvecs," << r.total_matvecs << '\n'
       << "min_entry," << fmt_sci(r.min_entry_over_run) << '\n'
       << "max_opnorm1," << fmt_sci(r.max_opnorm1) << '\n'
       << "deviation_warnings," << r.deviation_warnings << '\n';
    if (!r.per_step.empty()) os << "max_bound_slack," << fmt_sci(r.max_relative_bound_slack()) << '\n';
}

/// Whitespace-separated "x [y] u" rows, one per interior node.
inline void write_solution(std::ostream& os, const Grid& grid, const Vector& y) {
    char buf[96];
    for (int i = 0; i < grid.n_total; ++i) {
        const auto& p = grid.coords[i];
        if (!std::isfinite(y[i])) throw MetricError("refusing to write a non-finite value");
        if (grid.dim == 2) std::snprintf(buf, sizeof buf, "%.10e %.10e %.10e\n", p[0], p[1], y[i]);
        else std::snprintf(buf, sizeof buf, "%.10e %.10e\n", p[0], y[i]);
        os << buf;
    }
}

inline void write_convergence(std::ostream& os, const ConvergenceStudy& st) {
    os << "# case = " << st.case_name << '\n'
       << "# grid = " << grid_label(st.grid) << '\n'
       << "# dt_fine = " << fmt_sci(st.dt_fine) << '\n';
    if (std::isfinite(st.spatial_floor)) os << "# spatial_floor = " << fmt_sci(st.spatial_floor) << '\n';
    os << "scheme,dt,temporal_error,ratio\n";
    for (const auto& r : st.rows)
        os << to_string(r.scheme) << ',' << fmt_sci(r.dt) << ',' << fmt_sci(r.temporal_error) << ','
           << (r.ratio > 0.0 ? fmt_sci(r.ratio) : "") << '\n';
}

} // namespace nlheat
