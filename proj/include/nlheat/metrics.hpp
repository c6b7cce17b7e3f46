#pragma once

#include "errors.hpp"
#include "grid.hpp"

namespace nlheat {

/// Exact solution sampled at the interior nodes.
inline Vector sample_exact(const ProblemSpec& spec, const Grid& grid, double t) {
    if (!spec.exact_fn) throw MetricError("problem has no exact solution");
    Vector e(grid.n_total);
    for (int i = 0; i < grid.n_total; ++i) e[i] = spec.exact_fn(grid.coords[i], t);
    return e;
}

/// ||y - y_exact(t)|| / ||y_exact(t)|| in the Euclidean norm.
inline double relative_error(const Vector& y, const ProblemSpec& spec, const Grid& grid, double t) {
    if (y.size() != grid.n_total) throw DimensionError("state length does not match grid");
    const Vector e = sample_exact(spec, grid, t);
    const double en = e.norm();
    if (en == 0.0) throw MetricError("exact solution vanishes; relative error undefined");
    return (y - e).norm() / en;
}

} // namespace nlheat
