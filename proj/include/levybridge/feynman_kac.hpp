#pragma once

#include "levybridge/stepsim.hpp"

#include <cstdint>
#include <vector>

namespace levy {

// exp(-int_s^t V(Y_u) du) along a step path, evaluated segment by segment.
double path_fk_weight(const StepPath& path, const Potential& v);
double path_fk_weight(const StepPath& path, const Potential& v, double s, double t);

struct FKKernelEstimate {
    double epsilon = 0.0;
    double t = 0.0;
    double x_source = 0.0;
    std::vector<double> bin_edges;       // bins [e_k, e_{k+1})
    std::vector<double> weights_mean;    // one per bin
    std::vector<double> weights_stderr;
    double total_mean = 0.0;             // E[weight] over all paths
    double total_stderr = 0.0;
    std::size_t n_paths = 0;
    double min_weight = 1.0;
    double max_weight = 0.0;
};

FKKernelEstimate fk_kernel_mc(double epsilon, double x, double t, const Potential& v,
                              const std::vector<double>& bin_edges, std::size_t n_paths, std::uint64_t seed);

struct SymmetryResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double stderr_ = 0.0;  // pooled
};

// int f(x) E_x[g(Y_t) w] dx against the same with f and g swapped. f and g
// vanish outside their own grid windows; start points are uniform there.
SymmetryResult fk_symmetry_check(double epsilon, double t, const Potential& v, const GridFn& f, const GridFn& g,
                                 std::size_t n_paths, std::uint64_t seed);

struct LowerBoundRow {
    double bin_lo = 0.0, bin_hi = 0.0;
    double estimate = 0.0, stderr_ = 0.0;
    double stay_mass = 0.0, stay_stderr = 0.0;  // paths inside [-n, n] throughout
    double cauchy_mass = 0.0;
    double floor = 0.0;                         // exp(-c_n t) cauchy_mass / 2
    bool pass = false;
};

// Per-bin check of k^V >= exp(-c_n t) k / 2. Raises when the stay-in-window
// mass of a bin falls short of half its Cauchy mass (window too small).
std::vector<LowerBoundRow> fk_lower_bound_check(double epsilon, double x, const std::vector<double>& bin_edges,
                                                double t, const Potential& v, double window_n, std::size_t n_paths,
                                                std::uint64_t seed);

enum class Direction { forward, backward };

// Grid propagation with Strang splitting over a step base. backward:
// theta(., t_k) from data given at t_grid.back(); forward: theta_*(., t_k)
// from data given at t_grid.front(). Raises when dt breaks the stability
// bound, with the largest admissible dt attached.
std::vector<GridFn> evolve_theta_perturbed(double epsilon, const GridFn& data, const Potential& v,
                                           const std::vector<double>& t_grid, Direction direction, double dt);

// Grid bin masses of k^V from x over t (atom placed in its bin).
std::vector<double> fk_grid_bins(double epsilon, double x, double t, const Potential& v,
                                 const std::vector<double>& bin_edges, const Grid1D& grid, double dt);

struct CrossCheckRow {
    double bin_lo = 0.0, bin_hi = 0.0;
    double mc = 0.0, mc_stderr = 0.0;
    double grid = 0.0;
    double bias_bound = 0.0;  // |dt-halving| + |dx-halving| differences
    bool pass = false;
};

std::vector<CrossCheckRow> fk_cross_check(const FKKernelEstimate& mc, const Potential& v, const Grid1D& grid,
                                          double dt);

double perturbed_transition_density(const SchroedingerSolution& sol, double y, double s, double x, double t);

SchroedingerSolution solve_perturbed_schroedinger(const BoundaryData& boundary, double epsilon, const Potential& v,
                                                  const SolveOptions& opts = {}, double dt_max = 1.0 / 64.0);

} // namespace levy
