#include <gtest/gtest.h>

#include <sstream>

#include <nlheat/harness.hpp>

using namespace nlheat;

namespace {

std::map<std::string, std::string> kv_of(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

} // namespace

TEST(KeyValues, CommentsBlanksAndOverrides) {
    const auto kv = kv_of("# header\n\ncase = heat1d  # trailing\n dt=1e-3\ndt = 5e-4\n");
    EXPECT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv.at("case"), "heat1d");
    EXPECT_EQ(kv.at("dt"), "5e-4");
    EXPECT_THROW(kv_of("case heat1d\n"), ConfigError);
    EXPECT_THROW(kv_of("= 3\n"), ConfigError);
}

TEST(RunConfigParse, Defaults) {
    const RunConfig rc = make_run_config(kv_of("case = heat2d\ndt = 5e-6\n"));
    EXPECT_EQ(rc.case_name, "heat2d");
    EXPECT_EQ(rc.grid, (std::vector<int>{64, 64}));
    EXPECT_DOUBLE_EQ(rc.t0, 1e-4);
    EXPECT_DOUBLE_EQ(rc.t_end, 0.0051);
    EXPECT_EQ(rc.stepper.scheme, Scheme::exp_euler);
    EXPECT_DOUBLE_EQ(rc.stepper.tol, 1e-2);
}

TEST(RunConfigParse, AllKeys) {
    const RunConfig rc = make_run_config(kv_of(
        "case=heat1d\nscheme=be\nn=32\ndt=1e-3\ntol=1e-4\ninner=cheb:12\nmax_iters=7\n"
        "krylov_dim=10\nkrylov_tol=1e-5\nmax_restarts=3\nfull_reorth=yes\ndeviation_check=1\nomega=0.5\nT=0.1\n"));
    EXPECT_EQ(rc.stepper.scheme, Scheme::backward_euler);
    EXPECT_EQ(rc.grid, std::vector<int>{32});
    EXPECT_EQ(rc.stepper.inner.kind, InnerSolver::Kind::chebyshev);
    EXPECT_EQ(rc.stepper.inner.cheb_iters, 12);
    EXPECT_EQ(rc.stepper.max_nonlin_iters, 7);
    EXPECT_EQ(rc.stepper.krylov.max_dim, 10);
    EXPECT_DOUBLE_EQ(rc.stepper.krylov.tol, 1e-5);
    EXPECT_EQ(rc.stepper.krylov.max_restarts, 3);
    EXPECT_TRUE(rc.stepper.krylov.full_reorth);
    EXPECT_TRUE(rc.stepper.deviation_check);
    EXPECT_DOUBLE_EQ(rc.stepper.omega, 0.5);
    EXPECT_DOUBLE_EQ(rc.t_end, 0.1);
}

TEST(RunConfigParse, Rejections) {
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=0\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("dt=1e-3\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat9d\ndt=1e-3\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=1e-3\ncolour=red\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=3e-1\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=abc\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=1e-3\nn=1\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=1e-3\ninner=gmres\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat1d\ndt=1e-3\nscheme=rk4\n")), ConfigError);
    EXPECT_THROW(make_run_config(kv_of("case=heat2d\ndt=1e-4\nt0=0\nT=0.001\n")), ConfigError);
}

TEST(Format, ScientificSixDigits) {
    EXPECT_EQ(fmt_sci(4.07e-3), "4.07000e-03");
    EXPECT_EQ(fmt_sci(10000.0), "1.00000e+04");
    EXPECT_THROW(fmt_sci(std::nan("")), MetricError);
    EXPECT_THROW(fmt_sci(INFINITY), MetricError);
    EXPECT_EQ(grid_label({64, 64}), "64x64");
    EXPECT_EQ(parse_grid("128"), std::vector<int>{128});
}

TEST(Table, EmptySweepIsHeaderOnly) {
    SweepOptions opt;
    opt.grids = std::vector<std::vector<int>>{};
    const auto rows = run_table("heat1d", opt);
    EXPECT_TRUE(rows.empty());
    std::ostringstream os;
    write_table(os, rows);
    EXPECT_EQ(os.str(), std::string(table_header()) + "\n");
    EXPECT_THROW(run_table("green1d", opt), ConfigError);
}

TEST(Table, SmallSweepOrderAndMarkers) {
    SweepOptions opt;
    opt.grids = std::vector<std::vector<int>>{{32}, {48}};
    opt.dts = std::vector<double>{5e-3, 1e-3};
    opt.threads = 3;
    const auto rows = run_table("heat1d", opt);
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_EQ(rows[0].grid, std::vector<int>{32});
    EXPECT_EQ(rows[0].scheme, Scheme::backward_euler);
    EXPECT_EQ(rows[1].dt, 1e-3);
    EXPECT_EQ(rows[2].scheme, Scheme::exp_euler);
    EXPECT_EQ(rows[4].grid, std::vector<int>{48});
    int markers = 0;
    for (const auto& r : rows) {
        EXPECT_TRUE(r.ok) << r.message;
        markers += r.min_matvecs;
    }
    EXPECT_EQ(markers, 4);

    // Same numbers sequentially.
    opt.threads = 1;
    const auto seq = run_table("heat1d", opt);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].error, seq[i].error);
        EXPECT_EQ(rows[i].matvecs, seq[i].matvecs);
        EXPECT_EQ(rows[i].nonlin_iters, seq[i].nonlin_iters);
    }

    std::ostringstream os;
    write_table(os, rows);
    std::istringstream in(os.str());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        if (n++ == 0) continue;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9) << line;
    }
    EXPECT_EQ(n, 9);
}

TEST(Table, FailedRowsAreRecorded) {
    SweepOptions opt;
    opt.grids = std::vector<std::vector<int>>{{32}};
    opt.dts = std::vector<double>{0.3, 5e-3};
    const auto rows = run_table("heat1d", opt);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_FALSE(rows[0].ok);
    EXPECT_TRUE(rows[1].ok);
    std::ostringstream os;
    write_table(os, rows);
    EXPECT_NE(os.str().find("failed:"), std::string::npos);
}

TEST(RunReportWriter, DeterministicWithoutWallTime) {
    const RunConfig rc = make_run_config(kv_of("case=heat1d\nn=32\ndt=5e-3\n"));
    std::ostringstream a, b;
    write_run_report(a, execute(rc));
    write_run_report(b, execute(rc));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str().find("final_error,"), std::string::npos);
    EXPECT_EQ(a.str().find("wall"), std::string::npos);
}

TEST(RunReportWriter, GreenHasNoErrorLine) {
    const RunConfig rc = make_run_config(kv_of("case=green1d\nscheme=backward_euler\ndt=0.1\n"));
    const RunOutcome o = execute(rc);
    EXPECT_FALSE(o.has_error);
    std::ostringstream os;
    write_run_report(os, o);
    EXPECT_EQ(os.str().find("final_error"), std::string::npos);
    EXPECT_NE(os.str().find("min_entry,"), std::string::npos);
    EXPECT_GE(o.report.min_entry_over_run, -1e-12);
}

TEST(Green, FourRunsWith128Rows) {
    const auto runs = run_green(128, 0.1, 1e-2, {}, 4);
    ASSERT_EQ(runs.size(), 4u);
    for (const auto& r : runs) {
        EXPECT_GE(r.min_entry, -1e-12);
        std::ostringstream os;
        write_solution(os, r.grid, r.y);
        const std::string s = os.str();
        EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 128);
    }
    EXPECT_EQ(runs[0].tag, "dtT");
    EXPECT_DOUBLE_EQ(runs[1].dt, 1e-4);
}

TEST(Convergence, SmallStudy) {
    ConvergenceOptions opt;
    opt.grid = std::vector<int>{16};
    opt.dts = std::vector<double>{2e-3, 1e-3};
    opt.dt_fine = 1e-5;
    const ConvergenceStudy st = run_convergence("heat1d", opt);
    ASSERT_EQ(st.rows.size(), 4u);
    EXPECT_EQ(st.rows[0].ratio, 0.0);
    EXPECT_GT(st.rows[1].ratio, 1.5);
    EXPECT_GT(st.spatial_floor, 0.0);
    std::ostringstream os;
    write_convergence(os, st);
    EXPECT_NE(os.str().find("scheme,dt,temporal_error,ratio"), std::string::npos);

    opt.dts = std::vector<double>{};
    EXPECT_TRUE(run_convergence("heat1d", opt).rows.empty());
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 7, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
    parallel_for(0, 4, [&](std::size_t) { FAIL(); });
}
