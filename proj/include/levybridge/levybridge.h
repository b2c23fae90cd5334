#ifndef LEVYBRIDGE_H
#define LEVYBRIDGE_H

/* C interface of the levybridge library. Every call returns an lb_status;
 * on failure lb_last_error() holds a message for the calling thread and
 * lb_last_error_value() a diagnostic number (last residual, suggested dt). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef LB_BUILDING_LIBRARY
#    define LB_API __declspec(dllexport)
#  else
#    define LB_API __declspec(dllimport)
#  endif
#else
#  define LB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    LB_OK = 0,
    LB_ERR_INVALID_ARGUMENT = 1,
    LB_ERR_DOMAIN = 2,
    LB_ERR_NOT_CONVERGED = 3,
    LB_ERR_NUMERICAL = 4,
    LB_ERR_IO = 5,
    LB_ERR_BUFFER_TOO_SMALL = 6,
    LB_ERR_INTERNAL = 7
} lb_status;

typedef struct lb_potential lb_potential;
typedef struct lb_kernel lb_kernel;
typedef struct lb_boundary lb_boundary;
typedef struct lb_solution lb_solution;
typedef struct lb_path lb_path;

typedef struct {
    double x_min;
    double x_max;
    size_t n;
} lb_grid;

typedef struct {
    double tol_fit;
    int max_iter;
    double tol_mass;
} lb_solve_options;

LB_API const char* lb_version(void);
LB_API const char* lb_last_error(void);
LB_API double lb_last_error_value(void);
LB_API const char* lb_status_name(lb_status s);
LB_API lb_solve_options lb_default_solve_options(void);

/* Closed forms. */
LB_API lb_status lb_cauchy_kernel(double y, double s, double x, double t, double* out);
LB_API lb_status lb_step_atom_weight(double epsilon, double t, double* out);
LB_API lb_status lb_truncated_exponent(double epsilon, double p, double* out);
LB_API lb_status lb_char_fn_step(double epsilon, double p, double t, double* out);
LB_API lb_status lb_bridge_density(double y0, double t0, double zT, double T, double x, double t, double* out);

/* Potentials: "const:c", "box:a,b,h", "harmonic:cap", "table:x1,v1,...". */
LB_API lb_status lb_potential_parse(const char* spec, lb_potential** out);
LB_API void lb_potential_free(lb_potential* v);
LB_API lb_status lb_potential_eval(const lb_potential* v, double x, double* out);
LB_API lb_status lb_potential_compact_bound(const lb_potential* v, double n, double* out);

/* Transition kernels. */
LB_API lb_status lb_kernel_cauchy(lb_kernel** out);
LB_API lb_status lb_kernel_step(double epsilon, double tol_series, lb_kernel** out);
LB_API lb_status lb_kernel_perturbed(const lb_kernel* base, const lb_potential* v, double dt_max, lb_kernel** out);
LB_API void lb_kernel_free(lb_kernel* k);
LB_API lb_status lb_kernel_has_atom(const lb_kernel* k, int* out);
/* Largest stable splitting step for a perturbed kernel on the grid. */
LB_API lb_status lb_kernel_stable_dt(const lb_kernel* k, const lb_grid* grid, double* out);
/* Row from y over tau: density at the n grid nodes (buffer of grid->n),
 * atom weight at the (snapped) start point, tail masses. Any output
 * pointer may be NULL. */
LB_API lb_status lb_kernel_row(const lb_kernel* k, const lb_grid* grid, double y, double tau, double* density,
                               double* atom_weight, double* atom_at, double* tail_lo, double* tail_hi);
/* Total mass of the row: trapezoid + tails + atom. */
LB_API lb_status lb_kernel_row_mass(const lb_kernel* k, const lb_grid* grid, double y, double tau, double* out);

/* Boundary data. Presets: "free" (uses kernel, may be NULL for Cauchy),
 * "bimodal", "pinned" (params: y0, zT, scale). */
LB_API lb_status lb_boundary_preset(const char* name, const lb_grid* grid, double T, const lb_kernel* kernel,
                                    const double* params, size_t n_params, lb_boundary** out);
LB_API lb_status lb_boundary_from_values(const lb_grid* grid, const double* rho0, const double* rhoT, double T,
                                         lb_boundary** out);
LB_API void lb_boundary_free(lb_boundary* b);

/* Schroedinger system. */
LB_API lb_status lb_solve(const lb_boundary* b, const lb_kernel* k, const lb_solve_options* opts, lb_solution** out);
LB_API void lb_solution_free(lb_solution* s);
LB_API lb_status lb_solution_grid(const lb_solution* s, lb_grid* out);
LB_API lb_status lb_solution_horizon(const lb_solution* s, double* out);
LB_API lb_status lb_solution_residual(const lb_solution* s, double* residual, int* iterations);
/* Residual after each iteration; *len receives the count. */
LB_API lb_status lb_solution_residual_history(const lb_solution* s, double* buf, size_t cap, size_t* len);
LB_API lb_status lb_solution_f(const lb_solution* s, double* values, double* tail_lo, double* tail_hi);
LB_API lb_status lb_solution_g(const lb_solution* s, double* values);
LB_API lb_status lb_solution_rescale(const lb_solution* s, double c, lb_solution** out);
LB_API lb_status lb_solution_marginal_residual(const lb_solution* s, const lb_boundary* b, double* out);
LB_API lb_status lb_solution_density(const lb_solution* s, double t, double* values, double* tail_lo,
                                     double* tail_hi);
LB_API lb_status lb_solution_theta(const lb_solution* s, double x, double t, double* out);
LB_API lb_status lb_solution_theta_star(const lb_solution* s, double y, double t, double* out);
LB_API lb_status lb_solution_transition_density(const lb_solution* s, double y, double s0, double x, double t,
                                                double* out);
LB_API lb_status lb_solution_transition_mass(const lb_solution* s, double y, double s0, double t, double* out);
LB_API lb_status lb_solution_kolmogorov_residual(const lb_solution* s, double y, double s0, double t, double ds,
                                                 double* ac, double* atom);
/* JSON text; *needed receives the length without the terminator. */
LB_API lb_status lb_solution_to_json(const lb_solution* s, char* buf, size_t cap, size_t* needed);
LB_API lb_status lb_solution_from_json(const char* text, lb_solution** out);

/* Step processes. */
typedef struct {
    double mean_jumps;
    double var_jumps;
    double zero_fraction;
} lb_free_stats;

LB_API lb_status lb_free_path_stats(double epsilon, double t, size_t n_paths, uint64_t seed, const double* p,
                                    size_t n_p, lb_free_stats* stats, double* cf_mean, double* cf_stderr);
LB_API lb_status lb_sample_free_path(double epsilon, double x0, double t0, double t1, uint64_t seed,
                                     uint64_t stream, lb_path** out);
LB_API lb_status lb_sample_conditioned_path(const lb_solution* s, double x0, double t0, double t1,
                                            size_t time_steps, uint64_t seed, uint64_t stream, lb_path** out);
LB_API void lb_path_free(lb_path* p);
LB_API lb_status lb_path_jumps(const lb_path* p, size_t* out);
LB_API lb_status lb_path_terminal(const lb_path* p, double* out);
LB_API lb_status lb_path_csv(const lb_path* p, char* buf, size_t cap, size_t* needed);
LB_API lb_status lb_path_fk_weight(const lb_path* p, const lb_potential* v, double* out);

/* counts and expected hold `bins` entries (interior bins only). */
LB_API lb_status lb_conditioned_occupation(const lb_solution* s, double t_eval, size_t n_paths, uint64_t seed,
                                           double lo, double hi, size_t bins, size_t time_steps, double* l1,
                                           double* frequencies, double* expected);

typedef struct {
    double y, s, x, t;
} lb_probe;

typedef struct {
    double eps;
    double cf_sup_err;
    double rho_l1_sup;
    double p_max_err;
    int iterations;
} lb_convergence_row;

LB_API lb_status lb_convergence_report(const lb_boundary* b, const double* eps, size_t n_eps, const double* p,
                                       size_t n_p, const double* t, size_t n_t, const lb_probe* probes,
                                       size_t n_probes, const lb_solve_options* opts, lb_convergence_row* rows,
                                       int* monotone);

typedef struct {
    double n;
    double empirical;
    double stderr_;
    double bound;
    int pass;
} lb_maximal_row;

LB_API lb_status lb_maximal_check(const double* n_values, size_t count, double t, double epsilon, size_t n_paths,
                                  uint64_t seed, lb_maximal_row* rows);

/* Feynman-Kac. Bins are [e_k, e_{k+1}); mean/stderr hold n_edges-1 values. */
typedef struct {
    double total_mean;
    double total_stderr;
    double min_weight;
    double max_weight;
} lb_fk_summary;

LB_API lb_status lb_fk_kernel_mc(double epsilon, double x, double t, const lb_potential* v, const double* edges,
                                 size_t n_edges, size_t n_paths, uint64_t seed, double* mean, double* stderr_,
                                 lb_fk_summary* summary);
LB_API lb_status lb_fk_grid_bins(double epsilon, double x, double t, const lb_potential* v, const double* edges,
                                 size_t n_edges, const lb_grid* grid, double dt, double* out);

typedef struct {
    double bin_lo, bin_hi;
    double mc, mc_stderr;
    double grid;
    double bias_bound;
    int pass;
} lb_cross_check_row;

/* Runs the MC estimate and the grid propagator and compares them per bin. */
LB_API lb_status lb_fk_cross_check(double epsilon, double x, double t, const lb_potential* v, const double* edges,
                                   size_t n_edges, size_t n_paths, uint64_t seed, const lb_grid* grid, double dt,
                                   lb_cross_check_row* rows);

LB_API lb_status lb_fk_symmetry(double epsilon, double t, const lb_potential* v, const lb_grid* f_grid,
                                const double* f, const lb_grid* g_grid, const double* g, size_t n_paths,
                                uint64_t seed, double* lhs, double* rhs, double* stderr_);

typedef struct {
    double bin_lo, bin_hi;
    double estimate, stderr_;
    double stay_mass, stay_stderr;
    double cauchy_mass;
    double floor;
    int pass;
} lb_lower_bound_row;

LB_API lb_status lb_fk_lower_bound(double epsilon, double x, const double* edges, size_t n_edges, double t,
                                   const lb_potential* v, double window_n, size_t n_paths, uint64_t seed,
                                   lb_lower_bound_row* rows);

/* LEVY_BRIDGE_THREADS caps this. */
LB_API unsigned lb_worker_count(void);

#ifdef __cplusplus
}
#endif

#endif
