#include "levybridge/stepsim.hpp"

#include "levybridge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace levy {

namespace {

constexpr std::size_t kChunk = 512;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double StepPath::state_at(double t) const {
    require(t >= t_start && t <= t_end, "StepPath::state_at: time outside the path span");
    auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return x0;
    return states[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

double StepPath::sup_abs() const {
    double m = std::abs(x0);
    for (double s : states) m = std::max(m, std::abs(s));
    return m;
}

void StepPath::validate() const {
    require(t_end > t_start, "StepPath: empty time span");
    require(jump_times.size() == states.size(), "StepPath: one state per jump");
    double prev = t_start;
    for (double t : jump_times) {
        require(t > prev && t <= t_end, "StepPath: jump times must increase within (t_start, t_end]");
        prev = t;
    }
    require(std::isfinite(x0), "StepPath: non-finite start");
    for (double s : states) require(std::isfinite(s), "StepPath: non-finite state");
}

std::string StepPath::to_csv() const {
    std::ostringstream os;
    os << "time,state\n" << fmt(t_start) << ',' << fmt(x0) << '\n';
    for (std::size_t i = 0; i < jump_times.size(); ++i) os << fmt(jump_times[i]) << ',' << fmt(states[i]) << '\n';
    os << fmt(t_end) << ',' << fmt(terminal()) << '\n';
    return os.str();
}

double sample_jump(double epsilon, RandomStream& rng) {
    double mag = epsilon / rng.uniform_pos();
    return rng.uniform() < 0.5 ? -mag : mag;
}

StepPath sample_free_path(double epsilon, double x0, double t_start, double t_end, RandomStream& rng) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "sample_free_path: epsilon must be positive");
    require(t_end > t_start, "sample_free_path: empty time span");
    const double rate = q_eps_mass(epsilon);
    StepPath p;
    p.t_start = t_start;
    p.t_end = t_end;
    p.x0 = x0;
    double y = x0;
    for (double t = t_start + rng.exponential(rate); t <= t_end; t += rng.exponential(rate)) {
        y += sample_jump(epsilon, rng);
        p.jump_times.push_back(t);
        p.states.push_back(y);
    }
    return p;
}

namespace {

double theta_at_checked(const ThetaField& theta, double y, double t) {
    double v = theta.at(y, t);
    if (!(v > 0.0)) fail(ErrorCode::numerical, "jump intensity: theta(y, t) is not positive");
    return v;
}

} // namespace

double jump_intensity_density(double epsilon, const ThetaField& theta, double t, double y, double x) {
    double ty = theta_at_checked(theta, y, t);
    return theta.at(x, t) / ty * q_eps(epsilon, x - y);
}

double jump_intensity_mass(double epsilon, const ThetaField& theta, double t, double y, double a, double b) {
    double ty = theta_at_checked(theta, y, t);
    GridFn slice = theta.slice(t);
    return truncated_jump_integral(epsilon, slice, y, a - y, b - y) / (kPi * ty);
}

double jump_intensity_rate(double epsilon, const ThetaField& theta, double t, double y) {
    return jump_intensity_mass(epsilon, theta, t, y, -INFINITY, INFINITY);
}

double charge_mass(double epsilon, const ThetaField& theta, double t, double y, double a, double b) {
    double m = jump_intensity_mass(epsilon, theta, t, y, a, b);
    if (y >= a && y <= b) m -= jump_intensity_rate(epsilon, theta, t, y);
    return m;
}

ConditionedSampler::ConditionedSampler(double epsilon, ThetaField theta)
    : epsilon_(epsilon), theta_(std::move(theta)) {
    require(epsilon > 0.0, "ConditionedSampler: epsilon must be positive");
    require(!theta_.values.empty(), "ConditionedSampler: empty theta field");
    // Node-wise minimum over time; its interpolant bounds the interpolated
    // field from below at every (x, t).
    theta_min_ = GridFn(theta_.grid, theta_.values.front());
    for (const auto& v : theta_.values)
        for (std::size_t i = 0; i < v.size(); ++i) theta_min_.values[i] = std::min(theta_min_.values[i], v[i]);
    theta_max_ = theta_.max_value();
    for (double v : theta_min_.values)
        if (!(v > 0.0))
            fail(ErrorCode::numerical,
                 "ConditionedSampler: theta underflows on the window; dominating rate is unbounded");
}

double ConditionedSampler::dominating_rate(double y) const {
    return q_eps_mass(epsilon_) * theta_max_ / theta_min_.at(y);
}

StepPath ConditionedSampler::sample(double x0, double t_start, double t_end, RandomStream& rng) const {
    require(t_end > t_start, "ConditionedSampler: empty time span");
    require(t_start >= theta_.times.front() - 1e-12 && t_end <= theta_.times.back() + 1e-12,
            "ConditionedSampler: time span outside the theta field");
    StepPath p;
    p.t_start = t_start;
    p.t_end = t_end;
    p.x0 = x0;
    double y = x0;
    double t = t_start;
    while (true) {
        double tmin = theta_min_.at(y);
        double rate = q_eps_mass(epsilon_) * theta_max_ / tmin;
        if (!std::isfinite(rate)) fail(ErrorCode::numerical, "ConditionedSampler: unbounded dominating rate");
        t += rng.exponential(rate);
        if (t > t_end) break;
        double x = y + sample_jump(epsilon_, rng);
        double accept = theta_.at(x, t) / theta_.at(y, t) * tmin / theta_max_;
        if (rng.uniform() < accept) {
            y = x;
            p.jump_times.push_back(t);
            p.states.push_back(y);
        }
    }
    return p;
}

StepPath sample_conditioned_path(double epsilon, const ThetaField& theta, double x0, double t_start, double t_end,
                                 RandomStream& rng) {
    return ConditionedSampler(epsilon, theta).sample(x0, t_start, t_end, rng);
}

MassSampler::MassSampler(const GridFn& density) : grid_(density.grid) {
    auto m = node_masses(density);
    cumulative_.resize(m.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        require(m[i] >= 0.0, "MassSampler: negative mass");
        acc += m[i];
        cumulative_[i] = acc;
    }
    require(acc > 0.0, "MassSampler: zero total mass");
}

double MassSampler::draw(RandomStream& rng) const {
    double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    double v = rng.uniform();
    if (i == 0 || i + 1 == cumulative_.size()) return grid_.x(i);
    return grid_.x(i) + (v - 0.5) * grid_.dx();
}

Histogram::Histogram(double lo_, double hi_, std::size_t bins_) : lo(lo_), hi(hi_), bins(bins_), counts(bins_ + 2, 0.0) {
    require(hi > lo && bins >= 1, "Histogram: bad layout");
}

void Histogram::add(double x, double w) {
    std::size_t k;
    if (x < lo)
        k = 0;
    else if (x >= hi)
        k = bins + 1;
    else
        k = 1 + std::min(bins - 1, static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins)));
    counts[k] += w;
    total += w;
}

void Histogram::merge(const Histogram& o) {
    require(o.counts.size() == counts.size(), "Histogram::merge: layout mismatch");
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += o.counts[k];
    total += o.total;
}

std::vector<double> Histogram::frequencies() const {
    std::vector<double> f(counts.size(), 0.0);
    if (total > 0.0)
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = counts[k] / total;
    return f;
}

double Histogram::edge(std::size_t k) const { return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins); }

std::vector<double> expected_bins(const GridFn& density, double lo, double hi, std::size_t bins) {
    Histogram layout(lo, hi, bins);
    std::vector<double> e(bins + 2);
    e[0] = integrate_range(density, -INFINITY, lo);
    for (std::size_t k = 0; k < bins; ++k) e[k + 1] = integrate_range(density, layout.edge(k), layout.edge(k + 1));
    e[bins + 1] = integrate_range(density, hi, INFINITY);
    return e;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "l1_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double ks_statistic(std::vector<double>& samples, const std::function<double(double)>& cdf) {
    require(!samples.empty(), "ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_critical_99(std::size_t n) { return 1.62762 / std::sqrt(static_cast<double>(n)); }

FreeStats free_path_stats(double epsilon, double t, std::size_t n_paths, std::uint64_t seed,
                          const std::vector<double>& p_values, bool keep_terminal) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "free_path_stats: epsilon must be positive");
    require(t > 0.0 && n_paths >= 2, "free_path_stats: need t > 0 and at least two paths");
    const std::size_t np = p_values.size();
    struct Acc {
        double jumps = 0, jumps2 = 0, zeros = 0;
        std::vector<double> c, c2;
    };
    std::vector<Acc> acc(chunk_count(n_paths, kChunk));
    FreeStats out;
    out.n_paths = n_paths;
    out.p = p_values;
    if (keep_terminal) out.terminal.resize(n_paths);
    const double rate = q_eps_mass(epsilon);
    parallel_chunks(n_paths, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Acc a;
        a.c.assign(np, 0.0);
        a.c2.assign(np, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream rng(seed, i);
            double y = 0.0;
            std::size_t k = 0;
            for (double s = rng.exponential(rate); s <= t; s += rng.exponential(rate)) {
                y += sample_jump(epsilon, rng);
                ++k;
            }
            a.jumps += static_cast<double>(k);
            a.jumps2 += static_cast<double>(k) * static_cast<double>(k);
            if (k == 0) a.zeros += 1.0;
            for (std::size_t j = 0; j < np; ++j) {
                double c = std::cos(p_values[j] * y);
                a.c[j] += c;
                a.c2[j] += c * c;
            }
            if (keep_terminal) out.terminal[i] = y;
        }
        acc[chunk] = std::move(a);
    });
    const double n = static_cast<double>(n_paths);
    double j1 = 0, j2 = 0, z = 0;
    std::vector<double> c(np, 0.0), c2(np, 0.0);
    for (const auto& a : acc) {
        j1 += a.jumps;
        j2 += a.jumps2;
        z += a.zeros;
        for (std::size_t j = 0; j < np; ++j) {
            c[j] += a.c[j];
            c2[j] += a.c2[j];
        }
    }
    out.mean_jumps = j1 / n;
    out.var_jumps = (j2 - n * out.mean_jumps * out.mean_jumps) / (n - 1.0);
    out.zero_fraction = z / n;
    for (std::size_t j = 0; j < np; ++j) {
        double m = c[j] / n;
        double var = std::max(0.0, (c2[j] - n * m * m) / (n - 1.0));
        out.cf_mean.push_back(m);
        out.cf_stderr.push_back(std::sqrt(var / n));
    }
    return out;
}

OccupationResult conditioned_occupation(const SchroedingerSolution& sol, double t_eval, std::size_t n_paths,
                                        std::uint64_t seed, double lo, double hi, std::size_t bins,
                                        std::size_t time_steps) {
    require(sol.kernel.kind == KernelKind::truncated_step, "conditioned_occupation: needs a step-kernel solution");
    require(!sol.boundary.rho0.values.empty(), "conditioned_occupation: solution carries no boundary data");
    require(t_eval > 0.0 && t_eval <= sol.T, "conditioned_occupation: t_eval outside (0, T]");
    require(n_paths >= 1, "conditioned_occupation: need paths");
    ConditionedSampler sampler(sol.kernel.epsilon, theta_time_field(sol, time_steps));
    MassSampler start(sol.boundary.rho0);
    std::vector<Histogram> parts(chunk_count(n_paths, kChunk));
    std::vector<double> jumps(parts.size(), 0.0);
    parallel_chunks(n_paths, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Histogram h(lo, hi, bins);
        double nj = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream rng(seed, i);
            double x0 = start.draw(rng);
            StepPath p = sampler.sample(x0, 0.0, t_eval, rng);
            nj += static_cast<double>(p.jump_times.size());
            h.add(p.terminal());
        }
        parts[chunk] = std::move(h);
        jumps[chunk] = nj;
    });
    OccupationResult r;
    r.histogram = Histogram(lo, hi, bins);
    for (std::size_t c = 0; c < parts.size(); ++c) {
        r.histogram.merge(parts[c]);
        r.mean_jumps += jumps[c];
    }
    r.n_paths = n_paths;
    r.mean_jumps /= static_cast<double>(n_paths);
    r.expected = expected_bins(interpolating_density(sol, t_eval), lo, hi, bins);
    r.l1 = l1_distance(r.histogram.frequencies(), r.expected);
    return r;
}

KolmogorovResidual kolmogorov_residual(const SchroedingerSolution& sol, double y, double s, double t, double ds) {
    require(sol.kernel.kind == KernelKind::truncated_step, "kolmogorov_residual: needs a step-kernel solution");
    require(ds > 0.0, "kolmogorov_residual: ds must be positive");
    if (s - ds < 0.0 || s + ds > t || t > sol.T)
        fail(ErrorCode::domain, "kolmogorov_residual: need 0 <= s - ds and s + ds <= t <= T");
    const Grid1D& grid = sol.grid();
    const std::size_t n = grid.n();
    const double dx = grid.dx();
    const double eps = sol.kernel.epsilon;
    const double lambda = q_eps_mass(eps);
    auto jump = jump_operator(grid, eps);
    const std::size_t iy = grid.nearest(y);

    auto th_t = theta_values(sol, t);
    TailField tf_s = theta_tail_values(sol, s);
    const auto& th_s = tf_s.values;
    auto th_m = theta_values(sol, s - ds);
    auto th_p = theta_values(sol, s + ds);

    std::vector<double> unit(n, 0.0);
    unit[iy] = 1.0;
    auto row = [&](double tau) {
        return PoissonSeriesOperator(grid, tau, jump, lambda, sol.kernel.tol_series).push(unit);
    };
    const PushResult r0_full = row(t - s);
    const auto& r0 = r0_full.mass;
    auto rm = row(t - s + ds).mass;  // at s - ds
    auto rp = row(t - s - ds).mass;  // at s + ds
    auto qw = jump->push(r0_full).mass;
    const double h = lambda * jump->pull(tf_s).values[iy] / th_s[iy];

    auto atom = [&](double tau, double theta_y) { return std::exp(-lambda * tau) * th_t[iy] / theta_y; };
    const double a0 = atom(t - s, th_s[iy]);
    const double lhs_atom = (atom(t - s - ds, th_p[iy]) - atom(t - s + ds, th_m[iy])) / (2.0 * ds);
    const double rhs_atom = h * a0;

    KolmogorovResidual res;
    res.atom = std::abs(lhs_atom - rhs_atom);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        double pp = rp[j] * th_t[j] / th_p[iy];
        double pm = rm[j] * th_t[j] / th_m[iy];
        double p0 = r0[j] * th_t[j] / th_s[iy];
        double lhs = (pp - pm) / (2.0 * ds);
        double rhs = -(th_t[j] / th_s[iy] * lambda * qw[j] - h * p0);
        if (j == iy) {
            lhs -= lhs_atom;
            rhs -= rhs_atom;
        }
        res.ac = std::max(res.ac, std::abs(lhs - rhs) / dx);
    }
    return res;
}

double transition_mass(const SchroedingerSolution& sol, double y, double s, double t) {
    TransitionRow row = transition_row(sol, y, s, t);
    return integrate(row.density) + row.atom_weight;
}

std::vector<ConvergenceRow> convergence_report(const std::vector<double>& eps_list, const ConvergenceSetup& setup) {
    require(!eps_list.empty(), "convergence_report: empty eps list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        require(eps_list[i] > 0.0, "convergence_report: eps must be positive");
        if (i) require(eps_list[i] < eps_list[i - 1], "convergence_report: eps list must decrease");
    }
    const BoundaryData& b = setup.boundary;
    SchroedingerSolution ref = solve_system(b, KernelSpec::cauchy(), setup.opts);
    std::vector<GridFn> rho_ref;
    for (double t : setup.t_grid) rho_ref.push_back(interpolating_density(ref, t));
    std::vector<double> p_ref;
    for (const Probe& pr : setup.probes) p_ref.push_back(transition_density(ref, pr.y, pr.s, pr.x, pr.t));

    std::vector<ConvergenceRow> rows;
    for (double eps : eps_list) {
        ConvergenceRow row;
        row.eps = eps;
        for (double p : setup.p_grid)
            for (double t : setup.t_grid)
                row.cf_sup_err = std::max(row.cf_sup_err, std::abs(char_fn_step(eps, p, t) - char_fn_cauchy(p, t)));
        SchroedingerSolution sol = solve_system(b, KernelSpec::step(eps, ref.kernel.tol_series), setup.opts);
        if (!sol.grid().same_as(ref.grid())) fail(ErrorCode::invalid_argument, "convergence_report: grid mismatch");
        row.iterations = sol.iterations;
        for (std::size_t k = 0; k < setup.t_grid.size(); ++k) {
            GridFn r = interpolating_density(sol, setup.t_grid[k]);
            const GridFn& q = rho_ref[k];
            double d = std::abs(r.tail_lo - q.tail_lo) + std::abs(r.tail_hi - q.tail_hi);
            for (std::size_t i = 0; i < r.values.size(); ++i)
                d += r.grid.weight(i) * std::abs(r.values[i] - q.values[i]);
            row.rho_l1_sup = std::max(row.rho_l1_sup, d);
        }
        for (std::size_t k = 0; k < setup.probes.size(); ++k) {
            const Probe& pr = setup.probes[k];
            double pe = transition_density(sol, pr.y, pr.s, pr.x, pr.t);
            row.p_max_err = std::max(row.p_max_err, std::abs(pe - p_ref[k]));
        }
        rows.push_back(row);
    }
    return rows;
}

bool report_monotone(const std::vector<ConvergenceRow>& rows, double slack) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i - 1];
        const auto& b = rows[i];
        if (b.cf_sup_err > a.cf_sup_err * (1.0 + slack)) return false;
        if (b.rho_l1_sup > a.rho_l1_sup * (1.0 + slack)) return false;
        if (b.p_max_err > a.p_max_err * (1.0 + slack)) return false;
    }
    return true;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
    std::ostringstream os;
    os << "eps,cf_sup_err,rho_l1_sup,p_max_err\n";
    for (const auto& r : rows)
        os << fmt(r.eps) << ',' << fmt(r.cf_sup_err) << ',' << fmt(r.rho_l1_sup) << ',' << fmt(r.p_max_err) << '\n';
    return os.str();
}

double maximal_bound(double n, double t) {
    require(n > 0.0 && t > 0.0, "maximal_bound: n and t must be positive");
    return 3.0 * (1.0 - (2.0 / kPi) * std::atan(n / (3.0 * t)));
}

std::vector<MaximalRow> maximal_inequality_check(const std::vector<double>& n_values, double t, double epsilon,
                                                 std::size_t n_paths, std::uint64_t seed) {
    require(!n_values.empty(), "maximal_inequality_check: no levels");
    for (double v : n_values) require(v > 0.0, "maximal_inequality_check: levels must be positive");
    require(t > 0.0 && n_paths >= 2, "maximal_inequality_check: need t > 0 and at least two paths");
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "maximal_inequality_check: epsilon must be positive");
    const double rate = q_eps_mass(epsilon);
    const std::size_t nl = n_values.size();
    std::vector<std::vector<double>> hits(chunk_count(n_paths, kChunk));
    parallel_chunks(n_paths, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::vector<double> h(nl, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream rng(seed, i);
            double y = 0.0, sup = 0.0;
            for (double s = rng.exponential(rate); s <= t; s += rng.exponential(rate)) {
                y += sample_jump(epsilon, rng);
                sup = std::max(sup, std::abs(y));
            }
            for (std::size_t k = 0; k < nl; ++k)
                if (sup > n_values[k]) h[k] += 1.0;
        }
        hits[chunk] = std::move(h);
    });
    std::vector<MaximalRow> rows;
    const double n = static_cast<double>(n_paths);
    for (std::size_t k = 0; k < nl; ++k) {
        double c = 0.0;
        for (const auto& h : hits) c += h[k];
        MaximalRow r;
        r.n = n_values[k];
        r.empirical = c / n;
        r.stderr_ = std::sqrt(r.empirical * (1.0 - r.empirical) / n);
        r.bound = maximal_bound(r.n, t);
        r.pass = r.empirical <= r.bound + 3.0 * r.stderr_;
        rows.push_back(r);
    }
    return rows;
}

} // namespace levy
