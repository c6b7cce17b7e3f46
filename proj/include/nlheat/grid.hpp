#pragma once

// Uniform-grid finite differences for div(k(u) grad u) with Dirichlet data.
//
// Unknowns live on interior nodes only; boundary values are eliminated into
// the right-hand side vector. The discrete system is y' = -A(y) y + g(t).

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"

namespace nlheat {

using Vector = Eigen::VectorXd;
using Point = std::array<double, 2>;

struct Box {
    Point lower{0.0, 0.0};
    Point upper{1.0, 1.0};
};

/// How the conductivity on a face between two nodal values is formed.
enum class FaceAverage {
    conductivity_mean, ///< (k(u_i) + k(u_j)) / 2
    state_mean,        ///< k((u_i + u_j) / 2)
};

/// Nonlinear heat conduction problem u_t = div(k0 u^sigma grad u) + g.
struct ProblemSpec {
    int dim = 1;
    FaceAverage face_average = FaceAverage::conductivity_mean;
    Box domain;
    double k0 = 1.0;
    double sigma = 1.0;
    std::function<double(const Point&, double)> boundary_fn;
    std::function<double(const Point&, double)> source_fn;
    std::function<double(const Point&)> initial_fn;
    std::function<double(const Point&, double)> exact_fn; // optional

    /// k(u) = k0 u^sigma, with negative u clamped to zero.
    double conductivity(double u) const {
        u = std::max(u, 0.0);
        if (sigma == 2.0) return k0 * u * u;
        if (sigma == 1.0) return k0 * u;
        return k0 * std::pow(u, sigma);
    }

    double face_conductivity(double ul, double ur) const {
        if (face_average == FaceAverage::state_mean)
            return conductivity(0.5 * (std::max(ul, 0.0) + std::max(ur, 0.0)));
        return 0.5 * (conductivity(ul) + conductivity(ur));
    }

    void validate() const {
        if (dim != 1 && dim != 2) throw ConfigError("dimension must be 1 or 2");
        if (!(k0 > 0.0)) throw ConfigError("k0 must be positive");
        if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
        for (int a = 0; a < dim; ++a)
            if (!(domain.upper[a] > domain.lower[a]))
                throw ConfigError("domain extents must be positive");
        if (!boundary_fn || !source_fn || !initial_fn)
            throw ConfigError("boundary, source and initial functions are required");
    }
};

/// Compressed-row sparsity pattern shared by every operator on one grid.
struct CsrPattern {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<int> diag; // position of a_ii in col/values
};

/// A face between interior node `left` and either interior node `right`
/// or a boundary point (right < 0).
struct Face {
    int left = 0;
    int right = -1;
    Point boundary_point{0.0, 0.0};
    double inv_h2 = 0.0;
    int pos_ll = 0, pos_rr = 0, pos_lr = 0, pos_rl = 0;

    bool on_boundary() const { return right < 0; }
};

struct Grid {
    int dim = 1;
    std::array<int, 2> nodes{0, 1};
    std::array<double, 2> h{0.0, 0.0};
    std::vector<Point> coords;
    int n_total = 0;
    std::vector<Face> faces;
    std::shared_ptr<const CsrPattern> pattern;

    int index(int i, int j = 0) const { return j * nodes[0] + i; }
};

namespace detail {

inline int find_position(const CsrPattern& p, int row, int column) {
    for (int k = p.row_ptr[row]; k < p.row_ptr[row + 1]; ++k)
        if (p.col[k] == column) return k;
    throw ContractError("entry not in sparsity pattern");
}

} // namespace detail

/// Builds a uniform grid of interior nodes: h = extent / (nodes + 1).
inline Grid build_grid(const ProblemSpec& spec, const std::vector<int>& nodes_per_axis) {
    if (static_cast<int>(nodes_per_axis.size()) != spec.dim)
        throw ConfigError("need one node count per axis");
    for (int n : nodes_per_axis)
        if (n < 2) throw ConfigError("each axis needs at least 2 interior nodes");

    Grid g;
    g.dim = spec.dim;
    g.nodes = {nodes_per_axis[0], spec.dim == 2 ? nodes_per_axis[1] : 1};
    for (int a = 0; a < spec.dim; ++a)
        g.h[a] = (spec.domain.upper[a] - spec.domain.lower[a]) / (g.nodes[a] + 1);
    g.n_total = g.nodes[0] * g.nodes[1];

    const auto& lo = spec.domain.lower;
    const auto& hi = spec.domain.upper;
    g.coords.resize(g.n_total);
    for (int j = 0; j < g.nodes[1]; ++j)
        for (int i = 0; i < g.nodes[0]; ++i)
            g.coords[g.index(i, j)] = {lo[0] + (i + 1) * g.h[0],
                                       spec.dim == 2 ? lo[1] + (j + 1) * g.h[1] : 0.0};

    // Faces in a fixed order: x-faces row by row, then y-faces.
    const double ix2 = 1.0 / (g.h[0] * g.h[0]);
    for (int j = 0; j < g.nodes[1]; ++j) {
        const double yj = g.coords[g.index(0, j)][1];
        g.faces.push_back({g.index(0, j), -1, {lo[0], yj}, ix2});
        for (int i = 0; i + 1 < g.nodes[0]; ++i)
            g.faces.push_back({g.index(i, j), g.index(i + 1, j), {}, ix2});
        g.faces.push_back({g.index(g.nodes[0] - 1, j), -1, {hi[0], yj}, ix2});
    }
    if (spec.dim == 2) {
        const double iy2 = 1.0 / (g.h[1] * g.h[1]);
        for (int i = 0; i < g.nodes[0]; ++i) {
            const double xi = g.coords[g.index(i, 0)][0];
            g.faces.push_back({g.index(i, 0), -1, {xi, lo[1]}, iy2});
            for (int j = 0; j + 1 < g.nodes[1]; ++j)
                g.faces.push_back({g.index(i, j), g.index(i, j + 1), {}, iy2});
            g.faces.push_back({g.index(i, g.nodes[1] - 1), -1, {xi, hi[1]}, iy2});
        }
    }

    auto pat = std::make_shared<CsrPattern>();
    pat->n = g.n_total;
    std::vector<std::vector<int>> cols(g.n_total);
    for (int r = 0; r < g.n_total; ++r) cols[r].push_back(r);
    for (const Face& f : g.faces) {
        if (f.on_boundary()) continue;
        cols[f.left].push_back(f.right);
        cols[f.right].push_back(f.left);
    }
    pat->row_ptr.push_back(0);
    for (int r = 0; r < g.n_total; ++r) {
        std::sort(cols[r].begin(), cols[r].end());
        for (int c : cols[r]) {
            if (c == r) pat->diag.push_back(static_cast<int>(pat->col.size()));
            pat->col.push_back(c);
        }
        pat->row_ptr.push_back(static_cast<int>(pat->col.size()));
    }
    for (Face& f : g.faces) {
        f.pos_ll = pat->diag[f.left];
        if (f.on_boundary()) continue;
        f.pos_rr = pat->diag[f.right];
        f.pos_lr = detail::find_position(*pat, f.left, f.right);
        f.pos_rl = detail::find_position(*pat, f.right, f.left);
    }
    g.pattern = std::move(pat);
    return g;
}

/// Square sparse matrix with a shared compressed-row pattern.
struct SparseMatrix {
    std::shared_ptr<const CsrPattern> pattern;
    std::vector<double> values;

    int size() const { return pattern ? pattern->n : 0; }

    void multiply(const Vector& x, Vector& y) const {
        const auto& p = *pattern;
        y.resize(p.n);
        for (int r = 0; r < p.n; ++r) {
            double s = 0.0;
            for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) s += values[k] * x[p.col[k]];
            y[r] = s;
        }
    }

    /// Maximum absolute column sum.
    double norm1() const {
        const auto& p = *pattern;
        std::vector<double> colsum(p.n, 0.0);
        for (int r = 0; r < p.n; ++r)
            for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k)
                colsum[p.col[k]] += std::abs(values[k]);
        return colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
    }

    Eigen::MatrixXd dense() const {
        const auto& p = *pattern;
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p.n, p.n);
        for (int r = 0; r < p.n; ++r)
            for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) m(r, p.col[k]) += values[k];
        return m;
    }

    template <class Fn> void for_each_entry(Fn&& fn) const {
        const auto& p = *pattern;
        for (int r = 0; r < p.n; ++r)
            for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) fn(r, p.col[k], values[k]);
    }
};

/// ||A - B||_1 for two matrices on the same pattern.
inline double norm1_difference(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.pattern != b.pattern &&
        (!a.pattern || !b.pattern || a.pattern->row_ptr != b.pattern->row_ptr || a.pattern->col != b.pattern->col))
        throw DimensionError("matrices do not share a pattern");
    SparseMatrix d{a.pattern, a.values};
    for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= b.values[k];
    return d.norm1();
}

/// The pair (A(y), g(t)) together with a count of products with A.
class DiscreteOperator {
public:
    DiscreteOperator() = default;
    DiscreteOperator(SparseMatrix matrix, Vector bvec)
        : matrix_(std::move(matrix)), bvec_(std::move(bvec)) {}

    /// Wraps a dense matrix; entries that are exactly zero are not stored.
    static DiscreteOperator from_dense(const Eigen::MatrixXd& m, Vector b) {
        if (m.rows() != m.cols() || m.rows() != b.size())
            throw DimensionError("dense operator must be square and match bvec");
        auto pat = std::make_shared<CsrPattern>();
        const int n = static_cast<int>(m.rows());
        pat->n = n;
        pat->row_ptr.push_back(0);
        std::vector<double> vals;
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                if (c == r) pat->diag.push_back(static_cast<int>(pat->col.size()));
                if (m(r, c) != 0.0 || c == r) {
                    pat->col.push_back(c);
                    vals.push_back(m(r, c));
                }
            }
            pat->row_ptr.push_back(static_cast<int>(pat->col.size()));
        }
        return DiscreteOperator(SparseMatrix{std::move(pat), std::move(vals)}, std::move(b));
    }

    int size() const { return matrix_.size(); }
    const SparseMatrix& matrix() const { return matrix_; }
    const Vector& bvec() const { return bvec_; }
    std::uint64_t matvecs() const { return matvecs_; }

    /// y = A v; counts one matvec.
    void apply(const Vector& v, Vector& y) {
        if (v.size() != size()) throw DimensionError("matvec length mismatch");
        matrix_.multiply(v, y);
        ++matvecs_;
    }

    Vector apply(const Vector& v) {
        Vector y;
        apply(v, y);
        return y;
    }

    double norm1() const { return matrix_.norm1(); }
    Eigen::MatrixXd dense() const { return matrix_.dense(); }

private:
    SparseMatrix matrix_;
    Vector bvec_;
    std::uint64_t matvecs_ = 0;
};

inline Vector apply(DiscreteOperator& op, const Vector& v) { return op.apply(v); }

/// Assembles A(y) and g(t) with the conservative 3-/5-point stencil. Face
/// conductivities follow spec.face_average; boundary faces use the Dirichlet
/// value b(x, t) as the outer nodal value.
inline DiscreteOperator assemble(const ProblemSpec& spec, const Grid& grid, const Vector& y,
                                 double t) {
    if (y.size() != grid.n_total) throw DimensionError("state length does not match grid");
    SparseMatrix m{grid.pattern, std::vector<double>(grid.pattern->col.size(), 0.0)};
    Vector b(grid.n_total);
    for (int i = 0; i < grid.n_total; ++i) b[i] = spec.source_fn(grid.coords[i], t);

    auto& v = m.values;
    for (const Face& f : grid.faces) {
        if (f.on_boundary()) {
            const double bval = spec.boundary_fn(f.boundary_point, t);
            const double kf = spec.face_conductivity(y[f.left], bval) * f.inv_h2;
            v[f.pos_ll] += kf;
            b[f.left] += kf * bval;
        } else {
            const double kf = spec.face_conductivity(y[f.left], y[f.right]) * f.inv_h2;
            v[f.pos_ll] += kf;
            v[f.pos_rr] += kf;
            v[f.pos_lr] = -kf;
            v[f.pos_rl] = -kf;
        }
    }
    return DiscreteOperator(std::move(m), std::move(b));
}

/// Anything that can produce the operator pair (A(y), g(t)).
template <class S>
concept SemidiscreteSystem = requires(const S& s, const Vector& y, double t) {
    { s.size() } -> std::convertible_to<int>;
    { s.assemble(y, t) } -> std::same_as<DiscreteOperator>;
};

/// The heat problem on a grid, viewed as a semidiscrete system.
struct HeatSystem {
    ProblemSpec spec;
    Grid grid;

    int size() const { return grid.n_total; }
    DiscreteOperator assemble(const Vector& y, double t) const {
        return nlheat::assemble(spec, grid, y, t);
    }
};

/// Fixed matrix and source; used for linear model problems.
struct LinearSystem {
    Eigen::MatrixXd matrix;
    Vector source;

    int size() const { return static_cast<int>(matrix.rows()); }
    DiscreteOperator assemble(const Vector&, double) const {
        return DiscreteOperator::from_dense(matrix, source);
    }
};

/// Gershgorin lower bound on the smallest eigenvalue, clamped at zero.
inline double gershgorin_omega(const DiscreteOperator& op) {
    const int n = op.size();
    std::vector<double> diag(n, 0.0), off(n, 0.0);
    op.matrix().for_each_entry([&](int r, int c, double a) {
        if (r == c) diag[r] += a;
        else off[r] += std::abs(a);
    });
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) lo = std::min(lo, diag[i] - off[i]);
    return n == 0 ? 0.0 : std::max(lo, 0.0);
}

/// Sampled estimate of L in ||A(y) - A(v)||_1 <= L ||y - v||_inf for states
/// with entries drawn uniformly from [lo, hi]. Diagnostic only.
template <SemidiscreteSystem System>
double estimate_lipschitz(const System& sys, double t, int samples, std::uint64_t seed,
                          double lo = 0.0, double hi = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    const int n = sys.size();
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vector y(n), v(n);
        for (int i = 0; i < n; ++i) {
            y[i] = dist(rng);
            v[i] = dist(rng);
        }
        const double dy = (y - v).lpNorm<Eigen::Infinity>();
        if (dy == 0.0) continue;
        const auto ay = sys.assemble(y, t);
        const auto av = sys.assemble(v, t);
        best = std::max(best, norm1_difference(ay.matrix(), av.matrix()) / dy);
    }
    return best;
}

} // namespace nlheat
