#include "levybridge/schroedinger.hpp"

#include "levybridge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace levy {

void BoundaryData::validate(double tol_mass) const {
    require(T > 0.0 && std::isfinite(T), "boundary: horizon T must be positive");
    require(rho0.grid.same_as(rhoT.grid), "boundary: rho0 and rhoT must share a grid");
    const GridFn* fns[] = {&rho0, &rhoT};
    const char* names[] = {"rho0", "rhoT"};
    for (int k = 0; k < 2; ++k) {
        const GridFn& r = *fns[k];
        require(r.values.size() == r.grid.n(), std::string("boundary: ") + names[k] + " size mismatch");
        for (double v : r.values)
            if (!(v > 0.0) || !std::isfinite(v))
                fail(ErrorCode::domain, std::string("boundary: ") + names[k] + " must be strictly positive on the grid");
        require(r.tail_lo >= 0.0 && r.tail_hi >= 0.0, std::string("boundary: ") + names[k] + " tails must be >= 0");
        double m = integrate(r);
        if (std::abs(m - 1.0) > tol_mass)
            fail(ErrorCode::domain, std::string("boundary: ") + names[k] + " integrates to " + std::to_string(m) +
                                        " (expected 1 within tol_mass)", m);
    }
}

namespace {

void check_positive(const std::vector<double>& v, const char* what, int iteration) {
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x))
            fail(ErrorCode::numerical, std::string("solve_system: nonpositive ") + what + " at iteration " +
                                           std::to_string(iteration) +
                                           " (kernel mass lost outside the window; enlarge the grid)");
}

double l1_misfit(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& target) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i] - target[i]);
    return s;
}

void check_time(const SchroedingerSolution& sol, double t, const char* what) {
    double slack = 1e-12 * std::max(1.0, sol.T);
    if (!(t >= -slack && t <= sol.T + slack))
        fail(ErrorCode::domain, std::string(what) + ": time outside [0, T]");
}

bool lattice_kernel(const KernelSpec& k) { return k.kind != KernelKind::exact_cauchy; }

} // namespace

SchroedingerSolution solve_system(const BoundaryData& boundary, const KernelSpec& kernel, const SolveOptions& opts) {
    boundary.validate(opts.tol_mass);
    kernel.validate();
    require(opts.tol_fit > 0.0, "solve_system: tol_fit must be positive");
    require(opts.max_iter >= 1, "solve_system: max_iter must be >= 1");

    const Grid1D& grid = boundary.rho0.grid;
    const std::size_t n = grid.n();
    const PushResult in0 = density_masses(boundary.rho0);
    const auto& mu0 = in0.mass;
    auto muT = node_masses(boundary.rhoT);
    double s0 = 0.0, sT = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s0 += mu0[i];
        sT += muT[i];
    }
    // Both marginals of m carry the same total, so a mass gap on the window
    // is a floor for the residual.
    if (std::abs(s0 - sT) > 0.5 * opts.tol_fit)
        fail(ErrorCode::domain,
             "solve_system: boundary masses on the window differ by " + std::to_string(std::abs(s0 - sT)) +
                 "; marginals cannot be fitted to tol_fit (assign tail mass analytically or widen the grid)",
             std::abs(s0 - sT));

    const double tail_lo = mu0.front() - in0.edge_lo, tail_hi = mu0.back() - in0.edge_hi;
    auto op = make_operator(kernel, grid, boundary.T);
    std::vector<double> g(n, 1.0), m(n), theta_used(n), fitted(n);
    PushResult a;
    a.mass.resize(n);
    double th_lo = 1.0, th_hi = 1.0;
    SchroedingerSolution sol;
    double residual = INFINITY;
    int it = 0;
    for (;; ++it) {
        TailField pulled = op->pull(TailField{g, g.front(), g.back()});
        const auto& theta0 = pulled.values;
        check_positive(theta0, "theta(., 0)", it);
        check_positive({pulled.lo, pulled.hi}, "theta(tail, 0)", it);
        if (it > 0) {
            for (std::size_t i = 0; i < n; ++i) fitted[i] = a.mass[i] * theta0[i];
            fitted.front() = a.edge_lo * theta0.front() + (a.mass.front() - a.edge_lo) * pulled.lo;
            fitted.back() = a.edge_hi * theta0.back() + (a.mass.back() - a.edge_hi) * pulled.hi;
            std::vector<double> ones(n, 1.0);
            residual = l1_misfit(fitted, ones, mu0) + l1_misfit(g, m, muT);
            sol.residual_history.push_back(residual);
            if (residual <= opts.tol_fit) break;
        }
        if (it >= opts.max_iter)
            fail(ErrorCode::not_converged,
                 "solve_system: no convergence in " + std::to_string(opts.max_iter) +
                     " iterations, last residual " + std::to_string(residual),
                 residual);
        for (std::size_t i = 0; i < n; ++i) a.mass[i] = mu0[i] / theta0[i];
        a.edge_lo = in0.edge_lo / theta0.front();
        a.edge_hi = in0.edge_hi / theta0.back();
        a.mass.front() = a.edge_lo + tail_lo / pulled.lo;
        a.mass.back() = a.edge_hi + tail_hi / pulled.hi;
        theta_used = theta0;
        th_lo = pulled.lo;
        th_hi = pulled.hi;
        m = op->push(a).mass;
        check_positive(m, "column mass", it);
        for (std::size_t j = 0; j < n; ++j) g[j] = muT[j] / m[j];
    }

    const GridFn& r0 = boundary.rho0;
    const double half = 0.5 * grid.dx();
    GridFn f(grid);
    for (std::size_t i = 0; i < n; ++i) f.values[i] = r0.values[i] / theta_used[i];
    f.tail_lo = (r0.tail_lo - half * r0.values.front()) / th_lo + half * f.values.front();
    f.tail_hi = (r0.tail_hi - half * r0.values.back()) / th_hi + half * f.values.back();

    sol.f = std::move(f);
    sol.g = GridFn(grid, std::move(g));
    sol.kernel = kernel;
    sol.boundary = boundary;
    sol.T = boundary.T;
    sol.residual = residual;
    sol.iterations = it;
    double c = integrate(sol.f);
    return rescale_gauge(sol, 1.0 / c);
}

SchroedingerSolution rescale_gauge(const SchroedingerSolution& sol, double c) {
    require(c > 0.0 && std::isfinite(c), "rescale_gauge: factor must be positive");
    SchroedingerSolution out = sol;
    for (double& v : out.f.values) v *= c;
    out.f.tail_lo *= c;
    out.f.tail_hi *= c;
    for (double& v : out.g.values) v /= c;
    return out;
}

double marginal_residual(const SchroedingerSolution& sol, const BoundaryData& boundary) {
    auto op = make_operator(sol.kernel, sol.grid(), sol.T);
    const PushResult a = density_masses(sol.f);
    const auto& g = sol.g.values;
    TailField pulled = op->pull(TailField{g, g.front(), g.back()});
    const auto& theta0 = pulled.values;
    auto m = op->push(a).mass;
    std::vector<double> fitted(a.mass.size()), ones(a.mass.size(), 1.0);
    for (std::size_t i = 0; i < fitted.size(); ++i) fitted[i] = a.mass[i] * theta0[i];
    fitted.front() = a.edge_lo * theta0.front() + (a.mass.front() - a.edge_lo) * pulled.lo;
    fitted.back() = a.edge_hi * theta0.back() + (a.mass.back() - a.edge_hi) * pulled.hi;
    return l1_misfit(fitted, ones, node_masses(boundary.rho0)) + l1_misfit(g, m, node_masses(boundary.rhoT));
}

TailField theta_tail_values(const SchroedingerSolution& sol, double t) {
    check_time(sol, t, "theta");
    double tau = std::max(0.0, sol.T - t);
    const auto& g = sol.g.values;
    TailField gT{g, g.front(), g.back()};
    if (tau == 0.0) return gT;
    return make_operator(sol.kernel, sol.grid(), tau)->pull(gT);
}

std::vector<double> theta_values(const SchroedingerSolution& sol, double t) {
    return theta_tail_values(sol, t).values;
}

namespace {

// Tail mass of a GridFn weighted by h: the half cell at the end node takes
// the node value, the rest the tail-state value.
double weighted_tail(double tail, double end_value, double dx, double h_node, double h_tail) {
    const double near = std::min(tail, 0.5 * dx * end_value);
    return near * h_node + (tail - near) * h_tail;
}

} // namespace

double theta(const SchroedingerSolution& sol, double x, double t) {
    return GridFn(sol.grid(), theta_values(sol, t)).at(x);
}

GridFn theta_star_field(const SchroedingerSolution& sol, double s) {
    check_time(sol, s, "theta_star");
    if (s <= 0.0) return sol.f;
    auto op = make_operator(sol.kernel, sol.grid(), std::min(s, sol.T));
    return op->push_density(sol.f);
}

double theta_star(const SchroedingerSolution& sol, double y, double s) { return theta_star_field(sol, s).at(y); }

GridFn interpolating_density(const SchroedingerSolution& sol, double t) {
    GridFn ts = theta_star_field(sol, t);
    TailField tf = theta_tail_values(sol, t);
    const auto& th = tf.values;
    const double dx = sol.grid().dx();
    GridFn rho(sol.grid());
    for (std::size_t i = 0; i < th.size(); ++i) rho.values[i] = ts.values[i] * th[i];
    rho.tail_lo = weighted_tail(ts.tail_lo, ts.values.front(), dx, th.front(), tf.lo);
    rho.tail_hi = weighted_tail(ts.tail_hi, ts.values.back(), dx, th.back(), tf.hi);
    return rho;
}

TransitionRow transition_row(const SchroedingerSolution& sol, double y, double s, double t) {
    check_time(sol, s, "transition_row");
    check_time(sol, t, "transition_row");
    if (!(t > s)) fail(ErrorCode::domain, "transition_row: requires s < t");
    KernelRow kr = kernel_row(sol.kernel, sol.grid(), y, t - s);
    TailField tf = theta_tail_values(sol, t);
    const auto& th_t = tf.values;
    auto th_s = theta_values(sol, s);
    const double dx = sol.grid().dx();
    double th_y = lattice_kernel(sol.kernel) ? th_s[kr.atom_index] : GridFn(sol.grid(), th_s).at(y);
    if (!(th_y > 0.0)) fail(ErrorCode::numerical, "transition_row: theta(y, s) is not positive");
    TransitionRow row;
    row.density = GridFn(sol.grid());
    for (std::size_t j = 0; j < th_t.size(); ++j) row.density.values[j] = kr.density.values[j] * th_t[j] / th_y;
    row.density.tail_lo = weighted_tail(kr.density.tail_lo, kr.density.values.front(), dx, th_t.front(), tf.lo) / th_y;
    row.density.tail_hi = weighted_tail(kr.density.tail_hi, kr.density.values.back(), dx, th_t.back(), tf.hi) / th_y;
    row.atom_weight = kr.atom_weight * th_t[kr.atom_index] / th_y;
    row.atom_at = sol.grid().x(kr.atom_index);
    return row;
}

double transition_density(const SchroedingerSolution& sol, double y, double s, double x, double t) {
    check_time(sol, s, "transition_density");
    check_time(sol, t, "transition_density");
    if (!(t > s)) fail(ErrorCode::domain, "transition_density: requires s < t");
    double k = kernel_density(sol.kernel, sol.grid(), y, x, t - s);
    return k * theta(sol, x, t) / theta(sol, y, s);
}

double bridge_density(double y0, double t0, double zT, double T, double x, double t) {
    if (!(t0 < t && t < T)) fail(ErrorCode::domain, "bridge_density: requires t0 < t < T");
    return cauchy_kernel(y0, t0, x, t) * cauchy_kernel(x, t, zT, T) / cauchy_kernel(y0, t0, zT, T);
}

double ThetaField::at(double x, double t) const {
    require(!times.empty(), "ThetaField: empty");
    if (t <= times.front()) return GridFn(grid, values.front()).at(x);
    if (t >= times.back()) return GridFn(grid, values.back()).at(x);
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times.begin());
    double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    // constant extension in x, linear in x and t inside
    auto interp = [&](const std::vector<double>& v) {
        if (x <= grid.x_min()) return v.front();
        if (x >= grid.x_max()) return v.back();
        double r = (x - grid.x_min()) / grid.dx();
        std::size_t i = std::min(static_cast<std::size_t>(r), grid.n() - 2);
        double u = r - static_cast<double>(i);
        return (1.0 - u) * v[i] + u * v[i + 1];
    };
    return (1.0 - w) * interp(values[k - 1]) + w * interp(values[k]);
}

GridFn ThetaField::slice(double t) const {
    require(!times.empty(), "ThetaField: empty");
    if (t <= times.front()) return GridFn(grid, values.front());
    if (t >= times.back()) return GridFn(grid, values.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times.begin());
    double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    GridFn out(grid);
    for (std::size_t i = 0; i < grid.n(); ++i) out.values[i] = (1.0 - w) * values[k - 1][i] + w * values[k][i];
    return out;
}

double ThetaField::min_over_time(double x) const {
    double m = INFINITY;
    for (const auto& v : values) m = std::min(m, GridFn(grid, v).at(x));
    return m;
}

double ThetaField::max_value() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, *std::max_element(v.begin(), v.end()));
    return m;
}

ThetaField theta_time_field(const SchroedingerSolution& sol, std::size_t time_steps) {
    require(time_steps >= 1, "theta_time_field: need at least one time step");
    ThetaField field;
    field.grid = sol.grid();
    field.times.resize(time_steps + 1);
    field.values.resize(time_steps + 1);
    for (std::size_t k = 0; k <= time_steps; ++k)
        field.times[k] = sol.T * static_cast<double>(k) / static_cast<double>(time_steps);
    field.values[time_steps] = sol.g.values;
    if (sol.kernel.kind == KernelKind::exact_cauchy) {
        for (std::size_t k = 0; k < time_steps; ++k) field.values[k] = theta_values(sol, field.times[k]);
    } else {
        // lattice kernels form an exact discrete semigroup: step backward
        auto op = make_operator(sol.kernel, sol.grid(), sol.T / static_cast<double>(time_steps));
        const auto& g = sol.g.values;
        TailField cur{g, g.front(), g.back()};
        for (std::size_t k = time_steps; k-- > 0;) {
            cur = op->pull(cur);
            field.values[k] = cur.values;
        }
    }
    return field;
}

} // namespace levy
