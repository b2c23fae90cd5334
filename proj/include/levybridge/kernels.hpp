#pragma once

// Closed-form and series kernels of the Cauchy process and of its
// epsilon-truncated (compound Poisson) approximant.

#include "levybridge/numerics.hpp"

namespace levy {

// k(y,s,x,t) = (1/pi) (t-s) / ((t-s)^2 + (x-y)^2). Requires t > s.
double cauchy_kernel(double y, double s, double x, double t);

// Mass the Cauchy kernel of elapsed time tau puts on (lo, hi] relative to the
// start point. tau == 0 degenerates to the unit atom at 0.
double cauchy_kernel_mass(double tau, double lo, double hi);

// Levy density of the Cauchy process, 1/(pi y^2).
inline double cauchy_levy_density(double y) { return 1.0 / (kPi * y * y); }

// q_eps(x) = 1/(pi x^2) for |x| > eps, else 0.
double q_eps(double epsilon, double x);

// Total mass of q_eps, 2/(pi eps).
double q_eps_mass(double epsilon);

// lambda_eps(p) = (2/pi) [ (1 - cos p eps)/eps + |p| (pi/2 - Si(|p| eps)) ].
double truncated_exponent(double epsilon, double p);

// Phi_eps(p,t) = exp(-t lambda_eps(p)).
double char_fn_step(double epsilon, double p, double t);

// psi(p,t) = exp(-t|p|).
double char_fn_cauchy(double p, double t);

// int_lo^hi (alpha + beta z)/z^2 dz over the part of [lo,hi] with |z| > eps.
// hi may be +inf and lo -inf only when beta == 0.
double linear_over_square(double alpha, double beta, double lo, double hi, double epsilon);

// int_{|z|>eps} f(y+z)/z^2 dz with f the piecewise-linear interpolant of the
// grid values, extended by its boundary values outside the window.
double truncated_jump_integral(double epsilon, const GridFn& f, double y);
// Same integral restricted to z in [lo, hi].
double truncated_jump_integral(double epsilon, const GridFn& f, double y, double lo, double hi);

// |grad|_eps f(x) = -(1/pi) int_{|y|>eps} [f(x+y) - f(x)] dy/y^2 on the grid
// (same extension as truncated_jump_integral). Requires eps >= 2 dx.
GridFn nabla_eps_apply(double epsilon, const GridFn& f);

// q_eps on a lattice containing the origin, averaged against the hat
// function of each node. Trapezoid sum plus tails reproduces the mass
// 2/(pi eps) exactly; the tails hold what lies beyond the end nodes.
GridFn q_eps_lattice(double epsilon, const Grid1D& grid);

struct StepKernel {
    double epsilon = 0.0;
    double t = 0.0;
    double atom_weight = 1.0;  // coefficient of delta_0
    GridFn ac_part;            // absolutely continuous density
    int terms = 0;             // number of convolution powers summed
};

// Poisson transition kernel of the truncated process:
// exp(-lambda) [delta_0 + t q + t^2/2! q*q + ...], lambda = 2t/(pi eps),
// summed until the Poisson tail beyond the last term is below tol_series.
// The grid must contain the origin.
StepKernel step_kernel(double epsilon, double t, const Grid1D& grid, double tol_series = 1e-12);

// Bound on sum_{m > M} Poisson(lambda) pmf given pmf(M+1); valid for M+2 > lambda.
double poisson_tail_bound(double pmf_next, double lambda, int m_next);

} // namespace levy
