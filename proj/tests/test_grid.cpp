#include <gtest/gtest.h>

#include <nlheat/grid.hpp>
#include <nlheat/oracle.hpp>

#include "support.hpp"

using namespace nlheat;
using nlheat::testing::busy_spec;
using nlheat::testing::random_state;
using nlheat::testing::small_spec;

TEST(BuildGrid, Uniform1D) {
    const Grid g = build_grid(small_spec(0.0), {128});
    EXPECT_EQ(g.n_total, 128);
    EXPECT_DOUBLE_EQ(g.h[0], 1.0 / 129.0);
    for (const auto& p : g.coords) {
        EXPECT_GT(p[0], 0.0);
        EXPECT_LT(p[0], 1.0);
    }
    EXPECT_DOUBLE_EQ(g.coords.front()[0], 1.0 / 129.0);
}

TEST(BuildGrid, Product2D) {
    const Grid g = build_grid(busy_spec(2, FaceAverage::conductivity_mean), {64, 64});
    EXPECT_EQ(g.n_total, 4096);
    EXPECT_DOUBLE_EQ(g.h[1], 1.0 / 65.0);
    const Grid r = build_grid(busy_spec(2, FaceAverage::conductivity_mean), {5, 3});
    EXPECT_EQ(r.n_total, 15);
    EXPECT_DOUBLE_EQ(r.coords[r.index(4, 2)][0], 5.0 / 6.0);
    EXPECT_DOUBLE_EQ(r.coords[r.index(4, 2)][1], 3.0 / 4.0);
}

TEST(BuildGrid, RejectsBadCounts) {
    const ProblemSpec s2 = busy_spec(2, FaceAverage::conductivity_mean);
    EXPECT_THROW(build_grid(s2, {0, 64}), ConfigError);
    EXPECT_THROW(build_grid(s2, {64}), ConfigError);
    EXPECT_THROW(build_grid(small_spec(0.0), {1}), ConfigError);
    EXPECT_THROW(build_grid(small_spec(0.0), {-3}), ConfigError);
}

class ThreeNode : public ::testing::TestWithParam<FaceAverage> {};

TEST_P(ThreeNode, InteriorStencil) {
    const ProblemSpec s = small_spec(0.0, GetParam());
    const Grid g = build_grid(s, {3});
    ASSERT_DOUBLE_EQ(g.h[0], 0.25);
    const DiscreteOperator op = assemble(s, g, Vector::Ones(3), 0.0);
    const Eigen::MatrixXd a = op.dense();
    EXPECT_DOUBLE_EQ(a(1, 0), -8.0);
    EXPECT_DOUBLE_EQ(a(1, 1), 16.0);
    EXPECT_DOUBLE_EQ(a(1, 2), -8.0);
    EXPECT_EQ(op.bvec(), Vector::Zero(3));
}

TEST_P(ThreeNode, DirichletContribution) {
    const ProblemSpec s = small_spec(1.0, GetParam());
    const Grid g = build_grid(s, {3});
    DiscreteOperator op = assemble(s, g, Vector::Ones(3), 0.0);
    EXPECT_DOUBLE_EQ(op.bvec()[0], 8.0);
    EXPECT_DOUBLE_EQ(op.bvec()[1], 0.0);
    EXPECT_DOUBLE_EQ(op.bvec()[2], 8.0);
    Eigen::MatrixXd expected(3, 3);
    expected << 16, -8, 0, -8, 16, -8, 0, -8, 16;
    EXPECT_EQ(op.dense(), expected);
}

TEST_P(ThreeNode, ApplyRowSums) {
    const ProblemSpec s = small_spec(1.0, GetParam());
    const Grid g = build_grid(s, {3});
    DiscreteOperator op = assemble(s, g, Vector::Ones(3), 0.0);
    const std::uint64_t before = op.matvecs();
    const Vector r = op.apply(Vector::Ones(3));
    EXPECT_EQ(op.matvecs(), before + 1);
    EXPECT_DOUBLE_EQ(r[0], 8.0);
    EXPECT_DOUBLE_EQ(r[1], 0.0);
    EXPECT_DOUBLE_EQ(r[2], 8.0);
}

INSTANTIATE_TEST_SUITE_P(Averages, ThreeNode,
                         ::testing::Values(FaceAverage::conductivity_mean, FaceAverage::state_mean));

TEST(Assemble, ZeroStateGivesZeroOperator) {
    const ProblemSpec s = small_spec(0.0);
    const Grid g = build_grid(s, {7});
    DiscreteOperator op = assemble(s, g, Vector::Zero(7), 0.3);
    EXPECT_EQ(op.dense(), Eigen::MatrixXd::Zero(7, 7));
    EXPECT_EQ(op.bvec(), Vector::Zero(7));
    EXPECT_EQ(op.apply(random_state(7, 3)), Vector::Zero(7));
    EXPECT_EQ(op.norm1(), 0.0);
}

TEST(Assemble, ClampsNegativeStateInsideConductivity) {
    const ProblemSpec s = small_spec(0.0);
    const Grid g = build_grid(s, {4});
    Vector y(4);
    y << -1.0, -2.0, 0.0, -0.5;
    EXPECT_EQ(assemble(s, g, y, 0.0).dense(), Eigen::MatrixXd::Zero(4, 4));
    EXPECT_EQ(s.conductivity(-3.0), 0.0);
}

TEST(Assemble, FaceAverageFormulas) {
    ProblemSpec s = small_spec(0.0);
    s.face_average = FaceAverage::conductivity_mean;
    EXPECT_DOUBLE_EQ(s.face_conductivity(1.0, 3.0), 0.5 * (0.5 + 4.5));
    s.face_average = FaceAverage::state_mean;
    EXPECT_DOUBLE_EQ(s.face_conductivity(1.0, 3.0), 0.5 * 4.0);
    s.sigma = 0.5;
    EXPECT_DOUBLE_EQ(s.conductivity(4.0), 0.5 * 2.0);
}

TEST(Assemble, LengthMismatch) {
    const ProblemSpec s = small_spec(0.0);
    const Grid g = build_grid(s, {5});
    EXPECT_THROW(assemble(s, g, Vector::Zero(4), 0.0), DimensionError);
    DiscreteOperator op = assemble(s, g, Vector::Ones(5), 0.0);
    EXPECT_THROW(op.apply(Vector::Ones(6)), DimensionError);
}

TEST(ProblemSpecValidate, RejectsBadConstants) {
    ProblemSpec s = small_spec(0.0);
    EXPECT_NO_THROW(s.validate());
    s.k0 = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s.k0 = 1.0;
    s.sigma = -1.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s.sigma = 1.0;
    s.dim = 3;
    EXPECT_THROW(s.validate(), ConfigError);
}

struct ScanCase {
    int dim;
    std::vector<int> nodes;
    FaceAverage avg;
    double sigma;
};

class OperatorProperties : public ::testing::TestWithParam<ScanCase> {};

TEST_P(OperatorProperties, SignSymmetryAndDefiniteness) {
    const ScanCase c = GetParam();
    const ProblemSpec s = busy_spec(c.dim, c.avg, c.sigma);
    const Grid g = build_grid(s, c.nodes);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Vector y = random_state(g.n_total, seed);
        DiscreteOperator op = assemble(s, g, y, 0.1 * seed);
        const Eigen::MatrixXd a = op.dense();
        for (int i = 0; i < g.n_total; ++i) {
            EXPECT_GE(a(i, i), 0.0);
            for (int j = 0; j < g.n_total; ++j) {
                if (i != j) EXPECT_LE(a(i, j), 0.0);
                EXPECT_EQ(a(i, j), a(j, i));
            }
        }
        EXPECT_GE(op.bvec().minCoeff(), 0.0);

        const double eps = 1e-12 * op.norm1();
        for (std::uint64_t probe = 0; probe < 10; ++probe) {
            const Vector x = random_state(g.n_total, 100 + probe, -1.0, 1.0);
            EXPECT_GE(x.dot(op.apply(x)), -eps * x.squaredNorm());
        }
    }
}

TEST_P(OperatorProperties, RowSums) {
    const ScanCase c = GetParam();
    const ProblemSpec s = busy_spec(c.dim, c.avg, c.sigma);
    const Grid g = build_grid(s, c.nodes);
    const Vector y = random_state(g.n_total, 9);
    const Eigen::MatrixXd a = assemble(s, g, y, 0.0).dense();
    std::vector<bool> touches_boundary(g.n_total, false);
    for (const Face& f : g.faces)
        if (f.on_boundary()) touches_boundary[f.left] = true;
    const double scale = a.cwiseAbs().maxCoeff();
    for (int i = 0; i < g.n_total; ++i) {
        const double rs = a.row(i).sum();
        if (touches_boundary[i]) EXPECT_GE(rs, -1e-14 * scale);
        else EXPECT_NEAR(rs, 0.0, 1e-14 * scale);
    }
}

TEST_P(OperatorProperties, ShiftedInverseIsNonnegative) {
    const ScanCase c = GetParam();
    const ProblemSpec s = busy_spec(c.dim, c.avg, c.sigma);
    const Grid g = build_grid(s, c.nodes);
    const Eigen::MatrixXd a = assemble(s, g, random_state(g.n_total, 4), 0.0).dense();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(g.n_total, g.n_total);
    for (double dt : {1e-4, 1e-2, 1.0}) {
        for (std::uint64_t seed = 20; seed < 23; ++seed) {
            const Vector rhs = random_state(g.n_total, seed, 0.0, 1.0);
            EXPECT_GE(dense_solve(id + dt * a, rhs).minCoeff(), -1e-10);
        }
        // Columns of the inverse.
        const Eigen::MatrixXd inv = (id + dt * a).inverse();
        EXPECT_GE(inv.minCoeff(), -1e-10);
    }
}

TEST_P(OperatorProperties, Norm1IsMaxColumnSum) {
    const ScanCase c = GetParam();
    const ProblemSpec s = busy_spec(c.dim, c.avg, c.sigma);
    const Grid g = build_grid(s, c.nodes);
    const DiscreteOperator op = assemble(s, g, random_state(g.n_total, 2), 0.0);
    EXPECT_NEAR(op.norm1(), op.dense().cwiseAbs().colwise().sum().maxCoeff(), 1e-12 * op.norm1());
}

INSTANTIATE_TEST_SUITE_P(
    Grids, OperatorProperties,
    ::testing::Values(ScanCase{1, {12}, FaceAverage::conductivity_mean, 2.0},
                      ScanCase{1, {12}, FaceAverage::state_mean, 2.0},
                      ScanCase{1, {9}, FaceAverage::conductivity_mean, 0.5},
                      ScanCase{2, {5, 4}, FaceAverage::conductivity_mean, 2.0},
                      ScanCase{2, {4, 6}, FaceAverage::state_mean, 1.5}));

TEST(Lipschitz, SampledConstantBoundsFreshPairs) {
    const ProblemSpec s = busy_spec(1, FaceAverage::conductivity_mean);
    const Grid g = build_grid(s, {10});
    const HeatSystem sys{s, g};
    const double lhat = estimate_lipschitz(sys, 0.0, 400, 11);
    ASSERT_TRUE(std::isfinite(lhat));
    ASSERT_GT(lhat, 0.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Vector y = random_state(g.n_total, 1000 + seed);
        const Vector v = random_state(g.n_total, 2000 + seed);
        const double lhs = norm1_difference(sys.assemble(y, 0.0).matrix(), sys.assemble(v, 0.0).matrix());
        EXPECT_LE(lhs, 2.0 * lhat * (y - v).lpNorm<Eigen::Infinity>());
    }
}

TEST(Lipschitz, LinearSystemHasZeroConstant) {
    const LinearSystem sys{nlheat::testing::random_m_matrix(6, 1), Vector::Ones(6)};
    EXPECT_EQ(estimate_lipschitz(sys, 0.0, 20, 1), 0.0);
}

TEST(Gershgorin, LowerBoundOnSpectrum) {
    const Eigen::MatrixXd a = nlheat::testing::random_m_matrix(30, 5);
    const DiscreteOperator op = DiscreteOperator::from_dense(a, Vector::Zero(30));
    const double w = gershgorin_omega(op);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, es.eigenvalues().minCoeff() + 1e-12);
}
