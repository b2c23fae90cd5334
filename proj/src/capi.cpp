#include "levybridge/levybridge.h"

#include "levybridge/feynman_kac.hpp"
#include "levybridge/kernels.hpp"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

struct lb_potential {
    levy::Potential v;
};
struct lb_kernel {
    levy::KernelSpec spec;
};
struct lb_boundary {
    levy::BoundaryData data;
};
struct lb_solution {
    levy::SchroedingerSolution sol;
};
struct lb_path {
    levy::StepPath path;
};

namespace {

thread_local std::string g_error;
thread_local double g_error_value = 0.0;

lb_status set_error(lb_status s, const std::string& what, double value = 0.0) {
    g_error = what;
    g_error_value = value;
    return s;
}

template <class F>
lb_status guard(F&& f) {
    try {
        f();
        g_error.clear();
        g_error_value = 0.0;
        return LB_OK;
    } catch (const levy::Error& e) {
        return set_error(static_cast<lb_status>(static_cast<int>(e.code())), e.what(), e.value());
    } catch (const std::bad_alloc&) {
        return set_error(LB_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(LB_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(LB_ERR_INTERNAL, "unknown failure");
    }
}

template <class T>
void need(const T* p, const char* name) {
    if (!p) levy::fail(levy::ErrorCode::invalid_argument, std::string(name) + " must not be NULL");
}

levy::Grid1D to_grid(const lb_grid* g) {
    need(g, "grid");
    return levy::Grid1D(g->x_min, g->x_max, g->n);
}

levy::SolveOptions to_opts(const lb_solve_options* o) {
    levy::SolveOptions out;
    if (o) {
        out.tol_fit = o->tol_fit;
        out.max_iter = o->max_iter;
        out.tol_mass = o->tol_mass;
    }
    return out;
}

std::vector<double> edges_of(const double* e, std::size_t n) {
    need(e, "edges");
    return std::vector<double>(e, e + n);
}

lb_status write_text(const std::string& text, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = text.size();
    if (!buf || cap < text.size() + 1)
        return set_error(LB_ERR_BUFFER_TOO_SMALL, "buffer too small: need " + std::to_string(text.size() + 1) +
                                                      " bytes", static_cast<double>(text.size() + 1));
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';
    return LB_OK;
}

void copy_grid_fn(const levy::GridFn& f, double* values, double* tail_lo, double* tail_hi) {
    if (values) std::copy(f.values.begin(), f.values.end(), values);
    if (tail_lo) *tail_lo = f.tail_lo;
    if (tail_hi) *tail_hi = f.tail_hi;
}

} // namespace

extern "C" {

const char* lb_version(void) { return "0.1.0"; }
const char* lb_last_error(void) { return g_error.c_str(); }
double lb_last_error_value(void) { return g_error_value; }

const char* lb_status_name(lb_status s) {
    switch (s) {
    case LB_OK: return "ok";
    case LB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LB_ERR_DOMAIN: return "domain error";
    case LB_ERR_NOT_CONVERGED: return "not converged";
    case LB_ERR_NUMERICAL: return "numerical failure";
    case LB_ERR_IO: return "i/o error";
    case LB_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case LB_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

lb_solve_options lb_default_solve_options(void) {
    levy::SolveOptions o;
    return lb_solve_options{o.tol_fit, o.max_iter, o.tol_mass};
}

unsigned lb_worker_count(void) { return levy::worker_count(); }

lb_status lb_cauchy_kernel(double y, double s, double x, double t, double* out) {
    return guard([&] {
        need(out, "out");
        *out = levy::cauchy_kernel(y, s, x, t);
    });
}

lb_status lb_step_atom_weight(double epsilon, double t, double* out) {
    return guard([&] {
        need(out, "out");
        levy::require(epsilon > 0.0 && t >= 0.0, "step atom: need epsilon > 0 and t >= 0");
        *out = std::exp(-levy::q_eps_mass(epsilon) * t);
    });
}

lb_status lb_truncated_exponent(double epsilon, double p, double* out) {
    return guard([&] {
        need(out, "out");
        *out = levy::truncated_exponent(epsilon, p);
    });
}

lb_status lb_char_fn_step(double epsilon, double p, double t, double* out) {
    return guard([&] {
        need(out, "out");
        *out = levy::char_fn_step(epsilon, p, t);
    });
}

lb_status lb_bridge_density(double y0, double t0, double zT, double T, double x, double t, double* out) {
    return guard([&] {
        need(out, "out");
        *out = levy::bridge_density(y0, t0, zT, T, x, t);
    });
}

lb_status lb_potential_parse(const char* spec, lb_potential** out) {
    return guard([&] {
        need(spec, "spec");
        need(out, "out");
        *out = new lb_potential{levy::Potential::parse(spec)};
    });
}

void lb_potential_free(lb_potential* v) { delete v; }

lb_status lb_potential_eval(const lb_potential* v, double x, double* out) {
    return guard([&] {
        need(v, "potential");
        need(out, "out");
        *out = v->v(x);
    });
}

lb_status lb_potential_compact_bound(const lb_potential* v, double n, double* out) {
    return guard([&] {
        need(v, "potential");
        need(out, "out");
        *out = v->v.compact_bound(n);
    });
}

lb_status lb_kernel_cauchy(lb_kernel** out) {
    return guard([&] {
        need(out, "out");
        *out = new lb_kernel{levy::KernelSpec::cauchy()};
    });
}

lb_status lb_kernel_step(double epsilon, double tol_series, lb_kernel** out) {
    return guard([&] {
        need(out, "out");
        auto spec = levy::KernelSpec::step(epsilon, tol_series);
        spec.validate();
        *out = new lb_kernel{spec};
    });
}

lb_status lb_kernel_perturbed(const lb_kernel* base, const lb_potential* v, double dt_max, lb_kernel** out) {
    return guard([&] {
        need(base, "base");
        need(v, "potential");
        need(out, "out");
        auto spec = levy::KernelSpec::perturbed(base->spec, v->v, dt_max);
        spec.validate();
        *out = new lb_kernel{spec};
    });
}

void lb_kernel_free(lb_kernel* k) { delete k; }

lb_status lb_kernel_has_atom(const lb_kernel* k, int* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        *out = k->spec.has_atom() ? 1 : 0;
    });
}

lb_status lb_kernel_stable_dt(const lb_kernel* k, const lb_grid* grid, double* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        *out = levy::stable_dt(k->spec, to_grid(grid));
    });
}

lb_status lb_kernel_row(const lb_kernel* k, const lb_grid* grid, double y, double tau, double* density,
                        double* atom_weight, double* atom_at, double* tail_lo, double* tail_hi) {
    return guard([&] {
        need(k, "kernel");
        levy::Grid1D g = to_grid(grid);
        levy::KernelRow row = levy::kernel_row(k->spec, g, y, tau);
        copy_grid_fn(row.density, density, tail_lo, tail_hi);
        if (atom_weight) *atom_weight = row.atom_weight;
        if (atom_at) *atom_at = row.atom_weight > 0.0 ? g.x(row.atom_index) : y;
    });
}

lb_status lb_kernel_row_mass(const lb_kernel* k, const lb_grid* grid, double y, double tau, double* out) {
    return guard([&] {
        need(k, "kernel");
        need(out, "out");
        levy::KernelRow row = levy::kernel_row(k->spec, to_grid(grid), y, tau);
        *out = levy::integrate(row.density) + row.atom_weight;
    });
}

lb_status lb_boundary_preset(const char* name, const lb_grid* grid, double T, const lb_kernel* kernel,
                             const double* params, size_t n_params, lb_boundary** out) {
    return guard([&] {
        need(name, "name");
        need(out, "out");
        levy::Grid1D g = to_grid(grid);
        std::string n(name);
        levy::BoundaryData b;
        if (n == "free") {
            b = levy::free_preset(g, T, kernel ? kernel->spec : levy::KernelSpec::cauchy());
        } else if (n == "bimodal") {
            b = levy::bimodal_preset(g, T);
        } else if (n == "pinned") {
            levy::require(n_params >= 2 && params, "pinned preset: params y0, zT[, scale]");
            b = levy::pinned_preset(g, T, params[0], params[1], n_params >= 3 ? params[2] : 0.01);
        } else {
            levy::fail(levy::ErrorCode::invalid_argument, "unknown boundary preset '" + n + "'");
        }
        *out = new lb_boundary{std::move(b)};
    });
}

lb_status lb_boundary_from_values(const lb_grid* grid, const double* rho0, const double* rhoT, double T,
                                  lb_boundary** out) {
    return guard([&] {
        need(rho0, "rho0");
        need(rhoT, "rhoT");
        need(out, "out");
        levy::Grid1D g = to_grid(grid);
        levy::BoundaryData b;
        b.rho0 = levy::GridFn(g, std::vector<double>(rho0, rho0 + g.n()));
        b.rhoT = levy::GridFn(g, std::vector<double>(rhoT, rhoT + g.n()));
        b.T = T;
        *out = new lb_boundary{std::move(b)};
    });
}

void lb_boundary_free(lb_boundary* b) { delete b; }

lb_status lb_solve(const lb_boundary* b, const lb_kernel* k, const lb_solve_options* opts, lb_solution** out) {
    return guard([&] {
        need(b, "boundary");
        need(k, "kernel");
        need(out, "out");
        *out = new lb_solution{levy::solve_system(b->data, k->spec, to_opts(opts))};
    });
}

void lb_solution_free(lb_solution* s) { delete s; }

lb_status lb_solution_grid(const lb_solution* s, lb_grid* out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        const auto& g = s->sol.grid();
        *out = lb_grid{g.x_min(), g.x_max(), g.n()};
    });
}

lb_status lb_solution_horizon(const lb_solution* s, double* out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        *out = s->sol.T;
    });
}

lb_status lb_solution_residual(const lb_solution* s, double* residual, int* iterations) {
    return guard([&] {
        need(s, "solution");
        if (residual) *residual = s->sol.residual;
        if (iterations) *iterations = s->sol.iterations;
    });
}

lb_status lb_solution_residual_history(const lb_solution* s, double* buf, size_t cap, size_t* len) {
    lb_status st = guard([&] {
        need(s, "solution");
        need(len, "len");
        *len = s->sol.residual_history.size();
    });
    if (st != LB_OK) return st;
    if (!buf || cap < *len) return set_error(LB_ERR_BUFFER_TOO_SMALL, "residual history buffer too small");
    std::copy(s->sol.residual_history.begin(), s->sol.residual_history.end(), buf);
    return LB_OK;
}

lb_status lb_solution_f(const lb_solution* s, double* values, double* tail_lo, double* tail_hi) {
    return guard([&] {
        need(s, "solution");
        copy_grid_fn(s->sol.f, values, tail_lo, tail_hi);
    });
}

lb_status lb_solution_g(const lb_solution* s, double* values) {
    return guard([&] {
        need(s, "solution");
        copy_grid_fn(s->sol.g, values, nullptr, nullptr);
    });
}

lb_status lb_solution_rescale(const lb_solution* s, double c, lb_solution** out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        *out = new lb_solution{levy::rescale_gauge(s->sol, c)};
    });
}

lb_status lb_solution_marginal_residual(const lb_solution* s, const lb_boundary* b, double* out) {
    return guard([&] {
        need(s, "solution");
        need(b, "boundary");
        need(out, "out");
        *out = levy::marginal_residual(s->sol, b->data);
    });
}

lb_status lb_solution_density(const lb_solution* s, double t, double* values, double* tail_lo, double* tail_hi) {
    return guard([&] {
        need(s, "solution");
        copy_grid_fn(levy::interpolating_density(s->sol, t), values, tail_lo, tail_hi);
    });
}

lb_status lb_solution_theta(const lb_solution* s, double x, double t, double* out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        *out = levy::theta(s->sol, x, t);
    });
}

lb_status lb_solution_theta_star(const lb_solution* s, double y, double t, double* out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        *out = levy::theta_star(s->sol, y, t);
    });
}

lb_status lb_solution_transition_density(const lb_solution* s, double y, double s0, double x, double t,
                                         double* out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        *out = levy::transition_density(s->sol, y, s0, x, t);
    });
}

lb_status lb_solution_transition_mass(const lb_solution* s, double y, double s0, double t, double* out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        *out = levy::transition_mass(s->sol, y, s0, t);
    });
}

lb_status lb_solution_kolmogorov_residual(const lb_solution* s, double y, double s0, double t, double ds,
                                          double* ac, double* atom) {
    return guard([&] {
        need(s, "solution");
        auto r = levy::kolmogorov_residual(s->sol, y, s0, t, ds);
        if (ac) *ac = r.ac;
        if (atom) *atom = r.atom;
    });
}

lb_status lb_solution_to_json(const lb_solution* s, char* buf, size_t cap, size_t* needed) {
    std::string text;
    lb_status st = guard([&] {
        need(s, "solution");
        text = levy::solution_to_json(s->sol);
    });
    if (st != LB_OK) return st;
    return write_text(text, buf, cap, needed);
}

lb_status lb_solution_from_json(const char* text, lb_solution** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new lb_solution{levy::solution_from_json(text)};
    });
}

lb_status lb_free_path_stats(double epsilon, double t, size_t n_paths, uint64_t seed, const double* p, size_t n_p,
                             lb_free_stats* stats, double* cf_mean, double* cf_stderr) {
    return guard([&] {
        std::vector<double> pv;
        if (n_p) {
            need(p, "p");
            pv.assign(p, p + n_p);
        }
        auto fs = levy::free_path_stats(epsilon, t, n_paths, seed, pv);
        if (stats) *stats = lb_free_stats{fs.mean_jumps, fs.var_jumps, fs.zero_fraction};
        if (cf_mean) std::copy(fs.cf_mean.begin(), fs.cf_mean.end(), cf_mean);
        if (cf_stderr) std::copy(fs.cf_stderr.begin(), fs.cf_stderr.end(), cf_stderr);
    });
}

lb_status lb_sample_free_path(double epsilon, double x0, double t0, double t1, uint64_t seed, uint64_t stream,
                              lb_path** out) {
    return guard([&] {
        need(out, "out");
        levy::RandomStream rng(seed, stream);
        *out = new lb_path{levy::sample_free_path(epsilon, x0, t0, t1, rng)};
    });
}

lb_status lb_sample_conditioned_path(const lb_solution* s, double x0, double t0, double t1, size_t time_steps,
                                     uint64_t seed, uint64_t stream, lb_path** out) {
    return guard([&] {
        need(s, "solution");
        need(out, "out");
        levy::require(s->sol.kernel.kind == levy::KernelKind::truncated_step,
                      "conditioned paths need a truncated step kernel");
        auto field = levy::theta_time_field(s->sol, time_steps);
        levy::RandomStream rng(seed, stream);
        *out = new lb_path{levy::sample_conditioned_path(s->sol.kernel.epsilon, field, x0, t0, t1, rng)};
    });
}

void lb_path_free(lb_path* p) { delete p; }

lb_status lb_path_jumps(const lb_path* p, size_t* out) {
    return guard([&] {
        need(p, "path");
        need(out, "out");
        *out = p->path.jump_times.size();
    });
}

lb_status lb_path_terminal(const lb_path* p, double* out) {
    return guard([&] {
        need(p, "path");
        need(out, "out");
        *out = p->path.terminal();
    });
}

lb_status lb_path_csv(const lb_path* p, char* buf, size_t cap, size_t* needed) {
    std::string text;
    lb_status st = guard([&] {
        need(p, "path");
        text = p->path.to_csv();
    });
    if (st != LB_OK) return st;
    return write_text(text, buf, cap, needed);
}

lb_status lb_path_fk_weight(const lb_path* p, const lb_potential* v, double* out) {
    return guard([&] {
        need(p, "path");
        need(v, "potential");
        need(out, "out");
        *out = levy::path_fk_weight(p->path, v->v);
    });
}

lb_status lb_conditioned_occupation(const lb_solution* s, double t_eval, size_t n_paths, uint64_t seed, double lo,
                                    double hi, size_t bins, size_t time_steps, double* l1, double* frequencies,
                                    double* expected) {
    return guard([&] {
        need(s, "solution");
        auto r = levy::conditioned_occupation(s->sol, t_eval, n_paths, seed, lo, hi, bins, time_steps);
        if (l1) *l1 = r.l1;
        if (frequencies) {
            auto fr = r.histogram.frequencies();
            std::copy(fr.begin() + 1, fr.begin() + 1 + static_cast<std::ptrdiff_t>(bins), frequencies);
        }
        if (expected) std::copy(r.expected.begin() + 1, r.expected.begin() + 1 + static_cast<std::ptrdiff_t>(bins),
                                expected);
    });
}

lb_status lb_convergence_report(const lb_boundary* b, const double* eps, size_t n_eps, const double* p, size_t n_p,
                                const double* t, size_t n_t, const lb_probe* probes, size_t n_probes,
                                const lb_solve_options* opts, lb_convergence_row* rows, int* monotone) {
    return guard([&] {
        need(b, "boundary");
        need(eps, "eps");
        need(p, "p");
        need(t, "t");
        need(rows, "rows");
        levy::ConvergenceSetup setup;
        setup.boundary = b->data;
        setup.p_grid.assign(p, p + n_p);
        setup.t_grid.assign(t, t + n_t);
        if (n_probes) need(probes, "probes");
        for (size_t i = 0; i < n_probes; ++i)
            setup.probes.push_back(levy::Probe{probes[i].y, probes[i].s, probes[i].x, probes[i].t});
        setup.opts = to_opts(opts);
        auto r = levy::convergence_report(std::vector<double>(eps, eps + n_eps), setup);
        for (size_t i = 0; i < r.size(); ++i)
            rows[i] = lb_convergence_row{r[i].eps, r[i].cf_sup_err, r[i].rho_l1_sup, r[i].p_max_err, r[i].iterations};
        if (monotone) *monotone = levy::report_monotone(r) ? 1 : 0;
    });
}

lb_status lb_maximal_check(const double* n_values, size_t count, double t, double epsilon, size_t n_paths,
                           uint64_t seed, lb_maximal_row* rows) {
    return guard([&] {
        need(n_values, "n_values");
        need(rows, "rows");
        auto r = levy::maximal_inequality_check(std::vector<double>(n_values, n_values + count), t, epsilon, n_paths,
                                                seed);
        for (size_t i = 0; i < r.size(); ++i)
            rows[i] = lb_maximal_row{r[i].n, r[i].empirical, r[i].stderr_, r[i].bound, r[i].pass ? 1 : 0};
    });
}

lb_status lb_fk_kernel_mc(double epsilon, double x, double t, const lb_potential* v, const double* edges,
                          size_t n_edges, size_t n_paths, uint64_t seed, double* mean, double* stderr_,
                          lb_fk_summary* summary) {
    return guard([&] {
        need(v, "potential");
        auto est = levy::fk_kernel_mc(epsilon, x, t, v->v, edges_of(edges, n_edges), n_paths, seed);
        if (mean) std::copy(est.weights_mean.begin(), est.weights_mean.end(), mean);
        if (stderr_) std::copy(est.weights_stderr.begin(), est.weights_stderr.end(), stderr_);
        if (summary) *summary = lb_fk_summary{est.total_mean, est.total_stderr, est.min_weight, est.max_weight};
    });
}

lb_status lb_fk_grid_bins(double epsilon, double x, double t, const lb_potential* v, const double* edges,
                          size_t n_edges, const lb_grid* grid, double dt, double* out) {
    return guard([&] {
        need(v, "potential");
        need(out, "out");
        auto b = levy::fk_grid_bins(epsilon, x, t, v->v, edges_of(edges, n_edges), to_grid(grid), dt);
        std::copy(b.begin(), b.end(), out);
    });
}

lb_status lb_fk_cross_check(double epsilon, double x, double t, const lb_potential* v, const double* edges,
                            size_t n_edges, size_t n_paths, uint64_t seed, const lb_grid* grid, double dt,
                            lb_cross_check_row* rows) {
    return guard([&] {
        need(v, "potential");
        need(rows, "rows");
        levy::Grid1D g = to_grid(grid);
        auto est = levy::fk_kernel_mc(epsilon, x, t, v->v, edges_of(edges, n_edges), n_paths, seed);
        auto r = levy::fk_cross_check(est, v->v, g, dt);
        for (size_t i = 0; i < r.size(); ++i)
            rows[i] = lb_cross_check_row{r[i].bin_lo, r[i].bin_hi, r[i].mc,         r[i].mc_stderr,
                                         r[i].grid,   r[i].bias_bound, r[i].pass ? 1 : 0};
    });
}

lb_status lb_fk_symmetry(double epsilon, double t, const lb_potential* v, const lb_grid* f_grid, const double* f,
                         const lb_grid* g_grid, const double* g, size_t n_paths, uint64_t seed, double* lhs,
                         double* rhs, double* stderr_) {
    return guard([&] {
        need(v, "potential");
        need(f, "f");
        need(g, "g");
        levy::Grid1D fg = to_grid(f_grid), gg = to_grid(g_grid);
        levy::GridFn ff(fg, std::vector<double>(f, f + fg.n()));
        levy::GridFn gf(gg, std::vector<double>(g, g + gg.n()));
        auto r = levy::fk_symmetry_check(epsilon, t, v->v, ff, gf, n_paths, seed);
        if (lhs) *lhs = r.lhs;
        if (rhs) *rhs = r.rhs;
        if (stderr_) *stderr_ = r.stderr_;
    });
}

lb_status lb_fk_lower_bound(double epsilon, double x, const double* edges, size_t n_edges, double t,
                            const lb_potential* v, double window_n, size_t n_paths, uint64_t seed,
                            lb_lower_bound_row* rows) {
    return guard([&] {
        need(v, "potential");
        need(rows, "rows");
        auto r = levy::fk_lower_bound_check(epsilon, x, edges_of(edges, n_edges), t, v->v, window_n, n_paths, seed);
        for (size_t i = 0; i < r.size(); ++i)
            rows[i] = lb_lower_bound_row{r[i].bin_lo,    r[i].bin_hi,      r[i].estimate,
                                         r[i].stderr_,   r[i].stay_mass,   r[i].stay_stderr,
                                         r[i].cauchy_mass, r[i].floor, r[i].pass ? 1 : 0};
    });
}

} // extern "C"
