#pragma once

#include "levybridge/transition.hpp"

#include <string>
#include <vector>

namespace levy {

struct BoundaryData {
    GridFn rho0;
    GridFn rhoT;
    double T = 1.0;

    // Checks positivity, unit mass within tol_mass and a shared grid.
    void validate(double tol_mass = Tolerances{}.tol_mass) const;
};

struct SolveOptions {
    double tol_fit = 1e-8;
    int max_iter = 1000;
    double tol_mass = 1e-4;
};

struct SchroedingerSolution {
    GridFn f;
    GridFn g;
    KernelSpec kernel;
    BoundaryData boundary;  // empty grids when loaded from JSON
    double T = 1.0;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;

    const Grid1D& grid() const { return f.grid; }
};

// Iterative proportional fitting on node masses, starting from g = 1.
SchroedingerSolution solve_system(const BoundaryData& boundary, const KernelSpec& kernel,
                                  const SolveOptions& opts = {});

// (f, g) -> (c f, g / c).
SchroedingerSolution rescale_gauge(const SchroedingerSolution& sol, double c);

// Marginal L1 misfit of m = f k g against the given boundary data.
double marginal_residual(const SchroedingerSolution& sol, const BoundaryData& boundary);

// theta(., t) on the grid; theta(., T) = g.
std::vector<double> theta_values(const SchroedingerSolution& sol, double t);
// Same, with theta on the two tail states.
TailField theta_tail_values(const SchroedingerSolution& sol, double t);
double theta(const SchroedingerSolution& sol, double x, double t);

// theta_*(., s) as a density-like GridFn; theta_*(., 0) = f.
GridFn theta_star_field(const SchroedingerSolution& sol, double s);
double theta_star(const SchroedingerSolution& sol, double y, double s);

// rho(., t) = theta theta_*.
GridFn interpolating_density(const SchroedingerSolution& sol, double t);

// p(y,s,., t) over the grid with the atom at y (step-based kernels) separate.
struct TransitionRow {
    GridFn density;
    double atom_weight = 0.0;
    double atom_at = 0.0;
};
TransitionRow transition_row(const SchroedingerSolution& sol, double y, double s, double t);

// Absolutely continuous part of p(y,s,x,t).
double transition_density(const SchroedingerSolution& sol, double y, double s, double x, double t);

// Cauchy bridge pinned at (y0,t0) and (zT,T).
double bridge_density(double y0, double t0, double zT, double T, double x, double t);

// Time-indexed theta on a uniform time grid of the solution horizon.
struct ThetaField {
    Grid1D grid;
    std::vector<double> times;
    std::vector<std::vector<double>> values;

    double at(double x, double t) const;
    GridFn slice(double t) const;
    // min over the time nodes bracketing each value of t, i.e. a lower
    // envelope valid for every t in [times.front(), times.back()].
    double min_over_time(double x) const;
    double max_value() const;
};
ThetaField theta_time_field(const SchroedingerSolution& sol, std::size_t time_steps);

// Boundary presets.
GridFn cauchy_cells(const Grid1D& grid, double loc, double scale);
GridFn cauchy_mixture_cells(const Grid1D& grid, const std::vector<double>& weights,
                            const std::vector<double>& locs, const std::vector<double>& scales);
// rho0 = Cauchy(0,1); rhoT = rho0 propagated by the kernel over T.
BoundaryData free_preset(const Grid1D& grid, double T, const KernelSpec& kernel = KernelSpec::cauchy());
// rho0 = Cauchy(0,1); rhoT = (Cauchy(-3,1/2) + Cauchy(3,1/2))/2.
BoundaryData bimodal_preset(const Grid1D& grid, double T);
// Spikes Cauchy(y0, scale) and Cauchy(zT, scale).
BoundaryData pinned_preset(const Grid1D& grid, double T, double y0, double zT, double scale = 0.01);

// JSON document: version, grid, f, g, kernel, residual, iterations.
std::string solution_to_json(const SchroedingerSolution& sol);
SchroedingerSolution solution_from_json(const std::string& text);

} // namespace levy
