// nlheat: command-line driver for the nonlinear heat benchmarks.
//
//   nlheat run <config>
//   nlheat table <heat1d|heat2d>
//   nlheat green
//   nlheat convergence <case>
//
// Exit status: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <nlheat/harness.hpp>

namespace fs = std::filesystem;
using namespace nlheat;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Common {
    std::string out = ".";
    int threads = 1;
    std::optional<double> tol;
    std::optional<std::string> inner;
};

std::ofstream open_out(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    const fs::path p = fs::path(c.out) / name;
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    return f;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    for (const auto& part : detail::split(s, ','))
        if (!part.empty()) v.push_back(parse_double(part, "dt list"));
    return v;
}

std::vector<std::vector<int>> parse_grid_list(const std::string& s) {
    std::vector<std::vector<int>> v;
    for (const auto& part : detail::split(s, ','))
        if (!part.empty()) v.push_back(parse_grid(part));
    return v;
}

int cmd_run(const Common& c, const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config '" + config_path + "'");
    auto kv = parse_key_values(in);
    if (c.tol) {
        std::ostringstream t;
        t << std::setprecision(17) << *c.tol;
        kv["tol"] = t.str();
    }
    if (c.inner) kv["inner"] = *c.inner;
    const RunConfig rc = make_run_config(kv);
    const RunOutcome o = execute(rc);

    std::ostringstream report;
    write_run_report(report, o);
    open_out(c, "report.csv") << report.str();
    std::ofstream sol = open_out(c, "solution.dat");
    write_solution(sol, o.grid, o.report.y_final);
    std::cout << report.str();
    if (!o.report.ok) {
        std::cerr << "nlheat: " << o.report.message << '\n';
        return kNumericalError;
    }
    return 0;
}

int cmd_table(const Common& c, const std::string& name, const std::optional<std::string>& grids,
              const std::optional<std::string>& dts) {
    SweepOptions opt;
    if (c.tol) opt.tol = *c.tol;
    if (c.inner) opt.inner = parse_inner(*c.inner);
    opt.threads = c.threads;
    if (grids) opt.grids = parse_grid_list(*grids);
    if (dts) opt.dts = parse_list(*dts);
    const auto rows = run_table(name, opt);

    std::ostringstream csv;
    write_table(csv, rows);
    open_out(c, "table_" + name + ".csv") << csv.str();
    std::cout << csv.str();
    for (const auto& r : rows)
        if (!r.ok) return kNumericalError;
    return 0;
}

int cmd_green(const Common& c) {
    InnerSolver inner;
    if (c.inner) inner = parse_inner(*c.inner);
    const auto runs = run_green(128, 0.1, c.tol.value_or(1e-2), inner, c.threads);
    std::ostringstream summary;
    summary << "scheme,dt,min_entry,norm,file\n";
    for (const auto& g : runs) {
        const std::string file = std::string("green_") + to_string(g.scheme) + "_" + g.tag + ".dat";
        std::ofstream data = open_out(c, file);
        write_solution(data, g.grid, g.y);
        summary << to_string(g.scheme) << ',' << fmt_sci(g.dt) << ',' << fmt_sci(g.min_entry) << ','
                << fmt_sci(g.y.norm()) << ',' << file << '\n';
    }
    open_out(c, "green_summary.csv") << summary.str();
    std::cout << summary.str();
    return 0;
}

int cmd_convergence(const Common& c, const std::string& name, const std::optional<std::string>& grid,
                    const std::optional<std::string>& dts) {
    ConvergenceOptions opt;
    if (c.tol) opt.tol = *c.tol;
    if (c.inner) opt.inner = parse_inner(*c.inner);
    opt.threads = c.threads;
    if (grid) opt.grid = parse_grid(*grid);
    if (dts) opt.dts = parse_list(*dts);
    const ConvergenceStudy st = run_convergence(name, opt);
    std::ostringstream csv;
    write_convergence(csv, st);
    open_out(c, "convergence_" + name + ".csv") << csv.str();
    std::cout << csv.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear heat conduction: backward Euler vs exponential Euler"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--out", common.out, "Output directory")->capture_default_str();
    app.add_option("--threads", common.threads, "Worker threads for sweeps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--tol", common.tol, "Nonlinear stopping tolerance");
    app.add_option("--inner", common.inner, "Backward Euler inner solver: cg | cheb:N");

    std::string config_path, table_case, conv_case;
    std::optional<std::string> grids, dts, conv_grid, conv_dts;

    auto* run = app.add_subcommand("run", "Run one simulation from a key=value config");
    run->add_option("config", config_path)->required();
    auto* table = app.add_subcommand("table", "Sweep grid x dt x scheme for a benchmark table");
    table->add_option("case", table_case)->required()->check(CLI::IsMember({"heat1d", "heat2d"}));
    table->add_option("--grids", grids, "Comma-separated grids, e.g. 64x64,128x128");
    table->add_option("--dts", dts, "Comma-separated step sizes");
    auto* green = app.add_subcommand("green", "Green-function monotonicity data");
    auto* conv = app.add_subcommand("convergence", "Temporal convergence against an RK4 reference");
    conv->add_option("case", conv_case)->required();
    conv->add_option("--grid", conv_grid, "Grid, e.g. 32 or 16x16");
    conv->add_option("--dts", conv_dts, "Comma-separated step sizes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*run) return cmd_run(common, config_path);
        if (*table) return cmd_table(common, table_case, grids, dts);
        if (*green) return cmd_green(common);
        if (*conv) return cmd_convergence(common, conv_case, conv_grid, conv_dts);
    } catch (const ConfigError& e) {
        std::cerr << "nlheat: configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "nlheat: " << e.what() << '\n';
        return kNumericalError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "nlheat: " << e.what() << '\n';
        return kConfigError;
    }
    return 0;
}
