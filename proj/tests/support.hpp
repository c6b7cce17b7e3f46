#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include <nlheat/grid.hpp>

namespace nlheat::testing {

/// 1D, k0 = 0.5, sigma = 2 on [0, 1] with constant boundary value b.
inline ProblemSpec small_spec(double b, FaceAverage avg = FaceAverage::conductivity_mean) {
    ProblemSpec s;
    s.dim = 1;
    s.face_average = avg;
    s.k0 = 0.5;
    s.sigma = 2.0;
    s.boundary_fn = [b](const Point&, double) { return b; };
    s.source_fn = [](const Point&, double) { return 0.0; };
    s.initial_fn = [](const Point&) { return 0.0; };
    return s;
}

/// Positive data everywhere, for property scans.
inline ProblemSpec busy_spec(int dim, FaceAverage avg, double sigma = 2.0) {
    ProblemSpec s;
    s.dim = dim;
    s.face_average = avg;
    s.k0 = 0.7;
    s.sigma = sigma;
    s.boundary_fn = [](const Point& p, double t) { return 1.0 + p[0] * p[1] + t; };
    s.source_fn = [](const Point& p, double) { return p[0]; };
    s.initial_fn = [](const Point&) { return 0.5; };
    return s;
}

inline Vector random_state(int n, std::uint64_t seed, double lo = 0.0, double hi = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = d(rng);
    return y;
}

/// Dense symmetric M-matrix: random nonpositive off-diagonals, diagonal
/// equal to the off-diagonal row sum plus a nonnegative excess.
inline Eigen::MatrixXd random_m_matrix(int n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (d(rng) < 0.1) a(i, j) = a(j, i) = -scale * d(rng);
    for (int i = 0; i < n; ++i) a(i, i) = -a.row(i).sum() + scale * 0.1 * d(rng);
    return a;
}

/// phi(M) by Taylor series on M / 2^s followed by s doublings
/// phi(2X) = phi(X) (e^X + I) / 2 with e^X = I + X phi(X).
inline Eigen::MatrixXd phi_series(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const double nrm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while (nrm / std::ldexp(1.0, s) > 0.5) ++s;
    const Eigen::MatrixXd x = m / std::ldexp(1.0, s);
    Eigen::MatrixXd term = id, sum = id;
    for (int k = 1; k < 30; ++k) {
        term = term * x / static_cast<double>(k + 1);
        sum += term;
    }
    for (int i = 0; i < s; ++i) {
        const Eigen::MatrixXd e = id + (x * std::ldexp(1.0, i)) * sum;
        sum = 0.5 * sum * (e + id);
    }
    return sum;
}

} // namespace nlheat::testing
