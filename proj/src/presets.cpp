#include "levybridge/schroedinger.hpp"

#include <cmath>

namespace levy {

// Cell averages of the exact law; tails make every node mass equal the exact
// mass of its cell, so the total is one to rounding.
GridFn cauchy_cells(const Grid1D& grid, double loc, double scale) {
    require(scale > 0.0, "cauchy_cells: scale must be positive");
    const std::size_t n = grid.n();
    const double dx = grid.dx();
    const double h = 0.5 * dx;
    GridFn f(grid);
    for (std::size_t i = 0; i < n; ++i)
        f.values[i] = cauchy_interval(grid.x(i) - h, grid.x(i) + h, loc, scale) / dx;
    f.tail_lo = std::max(0.0, cauchy_cdf(grid.x(0) + h, loc, scale) - 0.5 * dx * f.values.front());
    f.tail_hi = std::max(0.0, cauchy_sf(grid.x(n - 1) - h, loc, scale) - 0.5 * dx * f.values.back());
    return f;
}

GridFn cauchy_mixture_cells(const Grid1D& grid, const std::vector<double>& weights,
                            const std::vector<double>& locs, const std::vector<double>& scales) {
    require(!weights.empty() && weights.size() == locs.size() && weights.size() == scales.size(),
            "cauchy_mixture_cells: parameter lists must match");
    GridFn out(grid);
    for (std::size_t k = 0; k < weights.size(); ++k) {
        require(weights[k] >= 0.0, "cauchy_mixture_cells: weights must be >= 0");
        GridFn c = cauchy_cells(grid, locs[k], scales[k]);
        for (std::size_t i = 0; i < grid.n(); ++i) out.values[i] += weights[k] * c.values[i];
        out.tail_lo += weights[k] * c.tail_lo;
        out.tail_hi += weights[k] * c.tail_hi;
    }
    return out;
}

BoundaryData free_preset(const Grid1D& grid, double T, const KernelSpec& kernel) {
    require(T > 0.0, "free_preset: T must be positive");
    BoundaryData b;
    b.T = T;
    b.rho0 = cauchy_cells(grid, 0.0, 1.0);
    // propagate with the discrete kernel itself so that g = 1 solves the
    // discrete system exactly
    auto op = make_operator(kernel, grid, T);
    b.rhoT = op->push_density(b.rho0);
    return b;
}

BoundaryData bimodal_preset(const Grid1D& grid, double T) {
    BoundaryData b;
    b.T = T;
    b.rho0 = cauchy_cells(grid, 0.0, 1.0);
    b.rhoT = cauchy_mixture_cells(grid, {0.5, 0.5}, {-3.0, 3.0}, {0.5, 0.5});
    return b;
}

BoundaryData pinned_preset(const Grid1D& grid, double T, double y0, double zT, double scale) {
    BoundaryData b;
    b.T = T;
    b.rho0 = cauchy_cells(grid, y0, scale);
    b.rhoT = cauchy_cells(grid, zT, scale);
    return b;
}

} // namespace levy
