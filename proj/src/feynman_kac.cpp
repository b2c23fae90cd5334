#include "levybridge/feynman_kac.hpp"

#include "levybridge/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace levy {

namespace {

constexpr std::size_t kChunk = 512;

void check_edges(const std::vector<double>& edges) {
    require(edges.size() >= 2, "bin edges: need at least one bin");
    for (std::size_t k = 1; k < edges.size(); ++k) require(edges[k] > edges[k - 1], "bin edges must increase");
}

// Bin index of x in [e_k, e_{k+1}), or -1.
std::ptrdiff_t bin_of(const std::vector<double>& edges, double x) {
    if (x < edges.front() || x >= edges.back()) return -1;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
}

double compact_at(const GridFn& f, double x) {
    if (x < f.grid.x_min() || x > f.grid.x_max()) return 0.0;
    return f.at(x);
}

struct WeightedEnd {
    double y;
    double weight;
    double sup_abs;
};

// One free path from x over [0, t] with its FK weight.
WeightedEnd run_path(double epsilon, double rate, double x, double t, const Potential& v, RandomStream& rng) {
    double y = x, s = 0.0, integral = 0.0, sup = std::abs(x);
    while (true) {
        double next = s + rng.exponential(rate);
        if (next > t) {
            integral += v(y) * (t - s);
            break;
        }
        integral += v(y) * (next - s);
        y += sample_jump(epsilon, rng);
        sup = std::max(sup, std::abs(y));
        s = next;
    }
    return {y, std::exp(-integral), sup};
}

} // namespace

double path_fk_weight(const StepPath& path, const Potential& v, double s, double t) {
    require(s >= path.t_start && t <= path.t_end && s <= t, "path_fk_weight: [s,t] must lie in the path span");
    double integral = 0.0;
    double seg_start = path.t_start;
    double state = path.x0;
    for (std::size_t i = 0; i <= path.jump_times.size(); ++i) {
        double seg_end = i < path.jump_times.size() ? path.jump_times[i] : path.t_end;
        double lo = std::max(seg_start, s), hi = std::min(seg_end, t);
        if (hi > lo) integral += v(state) * (hi - lo);
        if (i < path.states.size()) state = path.states[i];
        seg_start = seg_end;
    }
    return std::exp(-integral);
}

double path_fk_weight(const StepPath& path, const Potential& v) {
    return path_fk_weight(path, v, path.t_start, path.t_end);
}

FKKernelEstimate fk_kernel_mc(double epsilon, double x, double t, const Potential& v,
                              const std::vector<double>& bin_edges, std::size_t n_paths, std::uint64_t seed) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "fk_kernel_mc: epsilon must be positive");
    if (!(t >= 0.0)) fail(ErrorCode::invalid_argument, "fk_kernel_mc: t must be nonnegative");
    require(n_paths >= 2, "fk_kernel_mc: need at least two paths");
    check_edges(bin_edges);
    const std::size_t nb = bin_edges.size() - 1;
    const double rate = q_eps_mass(epsilon);
    struct Acc {
        std::vector<double> w, w2;
        double tw = 0, tw2 = 0, wmin = 1.0, wmax = 0.0;
    };
    std::vector<Acc> acc(chunk_count(n_paths, kChunk));
    parallel_chunks(n_paths, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Acc a;
        a.w.assign(nb, 0.0);
        a.w2.assign(nb, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream rng(seed, i);
            WeightedEnd e = t > 0.0 ? run_path(epsilon, rate, x, t, v, rng) : WeightedEnd{x, 1.0, std::abs(x)};
            a.tw += e.weight;
            a.tw2 += e.weight * e.weight;
            a.wmin = std::min(a.wmin, e.weight);
            a.wmax = std::max(a.wmax, e.weight);
            auto k = bin_of(bin_edges, e.y);
            if (k >= 0) {
                a.w[static_cast<std::size_t>(k)] += e.weight;
                a.w2[static_cast<std::size_t>(k)] += e.weight * e.weight;
            }
        }
        acc[chunk] = std::move(a);
    });
    FKKernelEstimate est;
    est.epsilon = epsilon;
    est.t = t;
    est.x_source = x;
    est.bin_edges = bin_edges;
    est.n_paths = n_paths;
    const double n = static_cast<double>(n_paths);
    std::vector<double> w(nb, 0.0), w2(nb, 0.0);
    double tw = 0.0, tw2 = 0.0;
    for (const auto& a : acc) {
        for (std::size_t k = 0; k < nb; ++k) {
            w[k] += a.w[k];
            w2[k] += a.w2[k];
        }
        tw += a.tw;
        tw2 += a.tw2;
        est.min_weight = std::min(est.min_weight, a.wmin);
        est.max_weight = std::max(est.max_weight, a.wmax);
    }
    auto se = [n](double s1, double s2) {
        double m = s1 / n;
        return std::sqrt(std::max(0.0, (s2 - n * m * m) / (n - 1.0)) / n);
    };
    for (std::size_t k = 0; k < nb; ++k) {
        est.weights_mean.push_back(w[k] / n);
        est.weights_stderr.push_back(se(w[k], w2[k]));
    }
    est.total_mean = tw / n;
    est.total_stderr = se(tw, tw2);
    return est;
}

SymmetryResult fk_symmetry_check(double epsilon, double t, const Potential& v, const GridFn& f, const GridFn& g,
                                 std::size_t n_paths, std::uint64_t seed) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "fk_symmetry_check: epsilon must be positive");
    require(t > 0.0 && n_paths >= 2, "fk_symmetry_check: need t > 0 and at least two paths");
    const double rate = q_eps_mass(epsilon);
    struct Acc {
        double l = 0, l2 = 0, r = 0, r2 = 0;
    };
    std::vector<Acc> acc(chunk_count(n_paths, kChunk));
    // side 0: start under f, test g at the end; side 1: swapped
    auto sample_side = [&](const GridFn& start, const GridFn& end_fn, RandomStream& rng) {
        double width = start.grid.x_max() - start.grid.x_min();
        double x = start.grid.x_min() + width * rng.uniform();
        WeightedEnd e = run_path(epsilon, rate, x, t, v, rng);
        return width * start.at(x) * compact_at(end_fn, e.y) * e.weight;
    };
    parallel_chunks(n_paths, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Acc a;
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream rl(seed, 2 * i);
            RandomStream rr(seed, 2 * i + 1);
            double l = sample_side(f, g, rl);
            double r = sample_side(g, f, rr);
            a.l += l;
            a.l2 += l * l;
            a.r += r;
            a.r2 += r * r;
        }
        acc[chunk] = a;
    });
    double l = 0, l2 = 0, r = 0, r2 = 0;
    for (const auto& a : acc) {
        l += a.l;
        l2 += a.l2;
        r += a.r;
        r2 += a.r2;
    }
    const double n = static_cast<double>(n_paths);
    SymmetryResult out;
    out.lhs = l / n;
    out.rhs = r / n;
    double vl = std::max(0.0, (l2 - n * out.lhs * out.lhs) / (n - 1.0)) / n;
    double vr = std::max(0.0, (r2 - n * out.rhs * out.rhs) / (n - 1.0)) / n;
    out.stderr_ = std::sqrt(vl + vr);
    return out;
}

std::vector<LowerBoundRow> fk_lower_bound_check(double epsilon, double x, const std::vector<double>& bin_edges,
                                                double t, const Potential& v, double window_n, std::size_t n_paths,
                                                std::uint64_t seed) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "fk_lower_bound_check: epsilon must be positive");
    require(t > 0.0 && n_paths >= 2, "fk_lower_bound_check: need t > 0 and at least two paths");
    require(window_n > std::abs(x), "fk_lower_bound_check: start point must lie inside [-n, n]");
    check_edges(bin_edges);
    require(bin_edges.front() >= -window_n && bin_edges.back() <= window_n,
            "fk_lower_bound_check: bins must lie inside [-n, n]");
    const std::size_t nb = bin_edges.size() - 1;
    const double rate = q_eps_mass(epsilon);
    struct Acc {
        std::vector<double> w, w2, s;
    };
    std::vector<Acc> acc(chunk_count(n_paths, kChunk));
    parallel_chunks(n_paths, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Acc a;
        a.w.assign(nb, 0.0);
        a.w2.assign(nb, 0.0);
        a.s.assign(nb, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream rng(seed, i);
            WeightedEnd e = run_path(epsilon, rate, x, t, v, rng);
            auto k = bin_of(bin_edges, e.y);
            if (k < 0) continue;
            auto kk = static_cast<std::size_t>(k);
            a.w[kk] += e.weight;
            a.w2[kk] += e.weight * e.weight;
            if (e.sup_abs <= window_n) a.s[kk] += 1.0;
        }
        acc[chunk] = std::move(a);
    });
    const double n = static_cast<double>(n_paths);
    const double cn = v.compact_bound(window_n);
    std::vector<LowerBoundRow> rows(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        double w = 0, w2 = 0, s = 0;
        for (const auto& a : acc) {
            w += a.w[k];
            w2 += a.w2[k];
            s += a.s[k];
        }
        LowerBoundRow& r = rows[k];
        r.bin_lo = bin_edges[k];
        r.bin_hi = bin_edges[k + 1];
        r.estimate = w / n;
        r.stderr_ = std::sqrt(std::max(0.0, (w2 - n * r.estimate * r.estimate) / (n - 1.0)) / n);
        r.stay_mass = s / n;
        r.stay_stderr = std::sqrt(r.stay_mass * (1.0 - r.stay_mass) / n);
        r.cauchy_mass = cauchy_interval(r.bin_lo, r.bin_hi, x, t);
        r.floor = 0.5 * std::exp(-cn * t) * r.cauchy_mass;
        if (r.stay_mass + 3.0 * r.stay_stderr < 0.5 * r.cauchy_mass)
            fail(ErrorCode::domain,
                 "fk_lower_bound_check: window [-n, n] too small for bin [" + std::to_string(r.bin_lo) + ", " +
                     std::to_string(r.bin_hi) + "): paths staying inside carry less than half the kernel mass; "
                     "enlarge n",
                 window_n);
        r.pass = r.estimate + 3.0 * r.stderr_ >= r.floor;
    }
    return rows;
}

std::vector<GridFn> evolve_theta_perturbed(double epsilon, const GridFn& data, const Potential& v,
                                           const std::vector<double>& t_grid, Direction direction, double dt) {
    require(!t_grid.empty(), "evolve_theta_perturbed: empty time grid");
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        require(t_grid[k] > t_grid[k - 1], "evolve_theta_perturbed: time grid must increase");
    require(dt > 0.0, "evolve_theta_perturbed: dt must be positive");
    KernelSpec spec = KernelSpec::perturbed(KernelSpec::step(epsilon), v, dt);
    const Grid1D& grid = data.grid;
    double limit = stable_dt(spec, grid);
    if (dt > limit * (1.0 + 1e-12))
        fail(ErrorCode::invalid_argument,
             "evolve_theta_perturbed: dt=" + std::to_string(dt) +
                 " violates dt*(2/(pi eps) + sup V) <= 1/2; use dt <= " + std::to_string(limit),
             limit);
    const std::size_t m = t_grid.size();
    std::vector<GridFn> out(m);
    if (direction == Direction::backward) {
        out[m - 1] = data;
        for (std::size_t k = m - 1; k-- > 0;) {
            auto op = make_operator(spec, grid, t_grid[k + 1] - t_grid[k]);
            out[k] = GridFn(grid, op->pull(out[k + 1].values));
        }
    } else {
        out[0] = data;
        for (std::size_t k = 0; k + 1 < m; ++k) {
            auto op = make_operator(spec, grid, t_grid[k + 1] - t_grid[k]);
            out[k + 1] = op->push_density(out[k]);
        }
    }
    return out;
}

std::vector<double> fk_grid_bins(double epsilon, double x, double t, const Potential& v,
                                 const std::vector<double>& bin_edges, const Grid1D& grid, double dt) {
    check_edges(bin_edges);
    KernelSpec spec = KernelSpec::perturbed(KernelSpec::step(epsilon), v, dt);
    KernelRow row = kernel_row(spec, grid, x, t);
    std::vector<double> out(bin_edges.size() - 1);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = integrate_range(row.density, bin_edges[k], bin_edges[k + 1]);
    auto k = bin_of(bin_edges, grid.x(row.atom_index));
    if (k >= 0) out[static_cast<std::size_t>(k)] += row.atom_weight;
    return out;
}

std::vector<CrossCheckRow> fk_cross_check(const FKKernelEstimate& mc, const Potential& v, const Grid1D& grid,
                                          double dt) {
    auto base = fk_grid_bins(mc.epsilon, mc.x_source, mc.t, v, mc.bin_edges, grid, dt);
    auto half_dt = fk_grid_bins(mc.epsilon, mc.x_source, mc.t, v, mc.bin_edges, grid, 0.5 * dt);
    Grid1D fine(grid.x_min(), grid.x_max(), 2 * grid.n() - 1);
    auto half_dx = fk_grid_bins(mc.epsilon, mc.x_source, mc.t, v, mc.bin_edges, fine, dt);
    std::vector<CrossCheckRow> rows(base.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CrossCheckRow& r = rows[k];
        r.bin_lo = mc.bin_edges[k];
        r.bin_hi = mc.bin_edges[k + 1];
        r.mc = mc.weights_mean[k];
        r.mc_stderr = mc.weights_stderr[k];
        r.grid = base[k];
        r.bias_bound = std::abs(base[k] - half_dt[k]) + std::abs(base[k] - half_dx[k]);
        r.pass = std::abs(r.mc - r.grid) <= 3.0 * r.mc_stderr + r.bias_bound;
    }
    return rows;
}

double perturbed_transition_density(const SchroedingerSolution& sol, double y, double s, double x, double t) {
    require(sol.kernel.kind == KernelKind::perturbed, "perturbed_transition_density: solution kernel is not perturbed");
    return transition_density(sol, y, s, x, t);
}

SchroedingerSolution solve_perturbed_schroedinger(const BoundaryData& boundary, double epsilon, const Potential& v,
                                                  const SolveOptions& opts, double dt_max) {
    return solve_system(boundary, KernelSpec::perturbed(KernelSpec::step(epsilon), v, dt_max), opts);
}

} // namespace levy
