#include "levybridge/transition.hpp"

#include "levybridge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace levy {

KernelSpec KernelSpec::cauchy() { return KernelSpec{}; }

KernelSpec KernelSpec::step(double epsilon, double tol_series) {
    KernelSpec k;
    k.kind = KernelKind::truncated_step;
    k.epsilon = epsilon;
    k.tol_series = tol_series;
    k.validate();
    return k;
}

KernelSpec KernelSpec::perturbed(const KernelSpec& base, Potential v, double dt_max) {
    require(base.kind != KernelKind::perturbed, "perturbed kernel: base must be cauchy or step");
    KernelSpec k = base;
    k.kind = KernelKind::perturbed;
    k.base = base.kind;
    k.potential = std::make_shared<const Potential>(std::move(v));
    k.dt_max = dt_max;
    k.validate();
    return k;
}

bool KernelSpec::has_atom() const {
    return kind == KernelKind::truncated_step ||
           (kind == KernelKind::perturbed && base == KernelKind::truncated_step);
}

void KernelSpec::validate() const {
    require(tol_series > 0.0, "kernel: tol_series must be positive");
    if (has_atom()) require(epsilon > 0.0 && std::isfinite(epsilon), "kernel: epsilon must be positive");
    if (kind == KernelKind::perturbed) {
        require(potential != nullptr, "kernel: perturbed kernel needs a potential");
        require(base != KernelKind::perturbed, "kernel: perturbed base must be cauchy or step");
        require(dt_max > 0.0, "kernel: dt_max must be positive");
    }
}

std::string KernelSpec::describe() const {
    auto base_name = [this](KernelKind k) {
        return k == KernelKind::exact_cauchy ? std::string("cauchy")
                                             : "step(eps=" + std::to_string(epsilon) + ")";
    };
    if (kind == KernelKind::perturbed) return "perturbed(" + base_name(base) + ", V=" + potential->spec() + ")";
    return base_name(kind);
}

GridFn masses_to_density(const Grid1D& grid, const PushResult& r) {
    const std::size_t n = grid.n();
    const double dx = grid.dx();
    GridFn out(grid);
    for (std::size_t j = 1; j + 1 < n; ++j) out.values[j] = r.mass[j] / dx;
    out.values[0] = r.edge_lo / dx;
    out.values[n - 1] = r.edge_hi / dx;
    out.tail_lo = std::max(0.0, r.mass[0] - 0.5 * r.edge_lo);
    out.tail_hi = std::max(0.0, r.mass[n - 1] - 0.5 * r.edge_hi);
    return out;
}

PushResult density_masses(const GridFn& f) {
    PushResult r;
    r.mass = node_masses(f);
    const double dx = f.grid.dx();
    r.edge_lo = std::min(r.mass.front(), dx * f.values.front());
    r.edge_hi = std::min(r.mass.back(), dx * f.values.back());
    return r;
}

PushResult CellOperator::push(std::span<const double> a) const {
    PushResult in;
    in.mass.assign(a.begin(), a.end());
    require(!in.mass.empty(), "push: empty input");
    in.edge_lo = in.mass.front();
    in.edge_hi = in.mass.back();
    return push(in);
}

std::vector<double> CellOperator::pull(std::span<const double> g) const {
    require(!g.empty(), "pull: empty input");
    TailField in{{g.begin(), g.end()}, g.front(), g.back()};
    return pull(in).values;
}

GridFn CellOperator::push_density(const GridFn& f) const {
    require(f.grid.same_as(grid_), "push_density: grid mismatch");
    return masses_to_density(grid_, push(density_masses(f)));
}

namespace {

std::vector<double> reversed(const std::vector<double>& v) { return {v.rbegin(), v.rend()}; }

} // namespace

TranslationInvariantOperator::TranslationInvariantOperator(const Grid1D& grid, double tau,
                                                           std::vector<double> lag_mass,
                                                           double beyond_lo, double beyond_hi)
    : CellOperator(grid, tau),
      c_(std::move(lag_mass)),
      fwd_(c_, grid.n()),
      rev_(reversed(c_), grid.n()) {
    const std::size_t n = grid.n();
    require(c_.size() == 2 * n - 1, "TranslationInvariantOperator: lag masses must have 2n-1 entries");
    lo_.resize(n);
    hi_.resize(n);
    // lo_[i]: lags <= -i, i.e. k <= n-1-i. hi_[i]: lags >= n-1-i, i.e. k >= 2n-2-i.
    long double acc = beyond_lo;
    std::size_t k = 0;
    for (std::size_t i = n; i-- > 0;) {
        for (; k <= n - 1 - i; ++k) acc += c_[k];
        lo_[i] = static_cast<double>(acc);
    }
    acc = beyond_hi;
    k = 2 * n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (; k > 2 * n - 2 - i; --k) acc += c_[k - 1];
        hi_[i] = static_cast<double>(acc);
    }

    const double dx = grid.dx();
    const double half = 0.5 * (grid.x_max() - grid.x_min());
    const double a = half + 0.5 * dx;
    std::vector<double> w(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        double d = half + static_cast<double>(k) * dx;
        w[k] = a * (1.0 / (d - 0.5 * dx) - 1.0 / (d + 0.5 * dx));
    }
    auto from_lo = rev_.full(w);
    auto from_hi = fwd_.full(w);
    row_lo_.resize(n);
    row_hi_.resize(n);
    long double s_lo = 0.0, s_hi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        row_lo_[j] = std::max(0.0, from_lo[n - 1 - j]);
        row_hi_[j] = std::max(0.0, from_hi[j]);
        s_lo += row_lo_[j];
        s_hi += row_hi_[j];
    }
    stay_lo_ = std::max(0.0, static_cast<double>(1.0L - s_lo));
    stay_hi_ = std::max(0.0, static_cast<double>(1.0L - s_hi));
}

TailField TranslationInvariantOperator::pull(const TailField& g) const {
    const std::size_t n = grid().n();
    require(g.values.size() == n, "pull: size mismatch");
    auto full = rev_.full(g.values);
    TailField out;
    out.values.resize(n);
    long double t_lo = stay_lo_ * g.lo, t_hi = stay_hi_ * g.hi;
    for (std::size_t i = 0; i < n; ++i) {
        const double beyond_lo = std::max(0.0, lo_[i] - c_[n - 1 - i]);
        const double beyond_hi = std::max(0.0, hi_[i] - c_[2 * n - 2 - i]);
        out.values[i] = full[n - 1 + i] + beyond_lo * g.lo + beyond_hi * g.hi;
        t_lo += row_lo_[i] * g.values[i];
        t_hi += row_hi_[i] * g.values[i];
    }
    out.lo = static_cast<double>(t_lo);
    out.hi = static_cast<double>(t_hi);
    return out;
}

PushResult TranslationInvariantOperator::push(const PushResult& in) const {
    const std::size_t n = grid().n();
    require(in.mass.size() == n, "push: size mismatch");
    std::vector<double> a = in.mass;
    const double tail_lo = std::max(0.0, a.front() - in.edge_lo);
    const double tail_hi = std::max(0.0, a.back() - in.edge_hi);
    a.front() -= tail_lo;
    a.back() -= tail_hi;
    auto full = fwd_.full(a);
    PushResult r;
    r.mass.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        r.mass[j] = std::max(0.0, full[j + n - 1]) + tail_lo * row_lo_[j] + tail_hi * row_hi_[j];
    r.edge_lo = r.mass.front();
    r.edge_hi = r.mass.back();
    // end cells also collect everything landing beyond them
    long double m0 = tail_lo * stay_lo_, m1 = tail_hi * stay_hi_;
    for (std::size_t i = 0; i < n; ++i) {
        m0 += a[i] * (lo_[i] - c_[n - 1 - i]);
        m1 += a[i] * (hi_[i] - c_[2 * n - 2 - i]);
    }
    r.mass.front() += std::max(0.0, static_cast<double>(m0));
    r.mass.back() += std::max(0.0, static_cast<double>(m1));
    return r;
}

SplittingOperator::SplittingOperator(const Grid1D& grid, double tau, std::shared_ptr<const CellOperator> base,
                                     std::vector<double> half_factor, std::size_t steps)
    : CellOperator(grid, tau), base_(std::move(base)), d_(std::move(half_factor)), steps_(steps) {
    require(d_.size() == grid.n(), "SplittingOperator: factor size mismatch");
}

TailField SplittingOperator::pull(const TailField& g) const {
    TailField v = g;
    require(v.values.size() == d_.size(), "pull: size mismatch");
    auto scale = [&](TailField& x) {
        for (std::size_t i = 0; i < d_.size(); ++i) x.values[i] *= d_[i];
        x.lo *= d_.front();
        x.hi *= d_.back();
    };
    for (std::size_t s = 0; s < steps_; ++s) {
        scale(v);
        v = base_->pull(v);
        scale(v);
    }
    return v;
}

PushResult SplittingOperator::push(const PushResult& in) const {
    const std::size_t n = grid().n();
    require(in.mass.size() == n, "push: size mismatch");
    PushResult r = in;
    auto scale = [&](PushResult& x) {
        for (std::size_t i = 0; i < n; ++i) x.mass[i] *= d_[i];
        x.edge_lo *= d_.front();
        x.edge_hi *= d_.back();
    };
    for (std::size_t s = 0; s < steps_; ++s) {
        scale(r);
        r = base_->push(r);
        scale(r);
    }
    return r;
}

std::unique_ptr<TranslationInvariantOperator> cauchy_operator(const Grid1D& grid, double tau) {
    require(tau >= 0.0, "cauchy_operator: tau must be nonnegative");
    const std::size_t n = grid.n();
    const double dx = grid.dx();
    std::vector<double> c(2 * n - 1);
    for (std::size_t k = 0; k < c.size(); ++k) {
        double lag = (static_cast<double>(k) - static_cast<double>(n - 1)) * dx;
        c[k] = cauchy_kernel_mass(tau, lag - 0.5 * dx, lag + 0.5 * dx);
    }
    double edge = (static_cast<double>(n - 1) + 0.5) * dx;
    double beyond = tau > 0.0 ? cauchy_sf(edge, 0.0, tau) : 0.0;
    return std::make_unique<TranslationInvariantOperator>(grid, tau, std::move(c), beyond, beyond);
}

std::shared_ptr<TranslationInvariantOperator> jump_operator(const Grid1D& grid, double epsilon) {
    const std::size_t n = grid.n();
    const double dx = grid.dx();
    const double rate = q_eps_mass(epsilon);
    GridFn q = q_eps_lattice(epsilon, grid.lag_grid());
    std::vector<double> c(2 * n - 1);
    long double total = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        c[k] = q.values[k] * dx / rate;
        total += c[k];
    }
    double beyond = std::max(0.0, static_cast<double>(1.0L - total));
    double share = (q.tail_mass() > 0.0) ? q.tail_lo / q.tail_mass() : 0.5;
    return std::make_shared<TranslationInvariantOperator>(grid, 0.0, std::move(c), beyond * share,
                                                          beyond * (1.0 - share));
}

PoissonSeriesOperator::PoissonSeriesOperator(const Grid1D& grid, double tau,
                                             std::shared_ptr<const TranslationInvariantOperator> jump, double rate,
                                             double tol_series)
    : CellOperator(grid, tau), jump_(std::move(jump)), rate_(rate) {
    require(tau >= 0.0 && rate >= 0.0, "PoissonSeriesOperator: tau and rate must be >= 0");
    const double mu = rate * tau;
    constexpr std::size_t kMaxTerms = 20000;
    for (std::size_t m = 0;; ++m) {
        double lp = -mu + (m ? static_cast<double>(m) * std::log(mu) : 0.0) - std::lgamma(static_cast<double>(m) + 1.0);
        weights_.push_back(mu > 0.0 || m == 0 ? std::exp(lp) : 0.0);
        if (mu == 0.0) break;
        double next = std::exp(lp + std::log(mu) - std::log(static_cast<double>(m) + 1.0));
        if (static_cast<double>(m) + 2.0 > mu && poisson_tail_bound(next, mu, static_cast<int>(m) + 1) < tol_series)
            break;
        if (m >= kMaxTerms)
            fail(ErrorCode::not_converged, "PoissonSeriesOperator: jump rate times tau too large for the series");
    }
}

TailField PoissonSeriesOperator::pull(const TailField& g) const {
    TailField term = g;
    TailField acc;
    acc.values.assign(term.values.size(), 0.0);
    for (std::size_t m = 0; m < weights_.size(); ++m) {
        if (m) term = jump_->pull(term);
        const double w = weights_[m];
        for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += w * term.values[i];
        acc.lo += w * term.lo;
        acc.hi += w * term.hi;
    }
    return acc;
}

PushResult PoissonSeriesOperator::push(const PushResult& in) const {
    const std::size_t n = grid().n();
    require(in.mass.size() == n, "push: size mismatch");
    PushResult term = in;
    PushResult acc;
    acc.mass.assign(n, 0.0);
    for (std::size_t m = 0; m < weights_.size(); ++m) {
        if (m) term = jump_->push(term);
        const double w = weights_[m];
        for (std::size_t j = 0; j < n; ++j) acc.mass[j] += w * term.mass[j];
        acc.edge_lo += w * term.edge_lo;
        acc.edge_hi += w * term.edge_hi;
    }
    return acc;
}

std::unique_ptr<PoissonSeriesOperator> step_operator(const Grid1D& grid, double epsilon, double tau,
                                                     double tol_series) {
    require(epsilon > 0.0, "step_operator: epsilon must be positive");
    return std::make_unique<PoissonSeriesOperator>(grid, tau, jump_operator(grid, epsilon), q_eps_mass(epsilon),
                                                   tol_series);
}

std::vector<double> cell_average_potential(const Potential& v, const Grid1D& grid) {
    std::vector<double> out(grid.n());
    const double h = 0.5 * grid.dx();
    for (std::size_t i = 0; i < grid.n(); ++i) out[i] = v.average(grid.x(i) - h, grid.x(i) + h);
    return out;
}

namespace {

double jump_rate(const KernelSpec& spec) {
    bool step = spec.kind == KernelKind::truncated_step ||
                (spec.kind == KernelKind::perturbed && spec.base == KernelKind::truncated_step);
    return step ? q_eps_mass(spec.epsilon) : 0.0;
}

} // namespace

double stable_dt(const KernelSpec& spec, const Grid1D& grid) {
    double sup_v = 0.0;
    if (spec.potential) {
        auto vbar = cell_average_potential(*spec.potential, grid);
        sup_v = *std::max_element(vbar.begin(), vbar.end());
    }
    double rate = jump_rate(spec) + sup_v;
    return rate > 0.0 ? 0.5 / rate : std::numeric_limits<double>::infinity();
}

std::unique_ptr<CellOperator> make_operator(const KernelSpec& spec, const Grid1D& grid, double tau) {
    spec.validate();
    require(tau >= 0.0 && std::isfinite(tau), "make_operator: tau must be finite and nonnegative");
    switch (spec.kind) {
    case KernelKind::exact_cauchy:
        return cauchy_operator(grid, tau);
    case KernelKind::truncated_step:
        return step_operator(grid, spec.epsilon, tau, spec.tol_series);
    case KernelKind::perturbed:
        break;
    }
    std::size_t steps = tau > 0.0 ? static_cast<std::size_t>(std::ceil(tau / spec.dt_max - 1e-9)) : 0;
    steps = std::max<std::size_t>(steps, tau > 0.0 ? 1 : 0);
    double dt = steps ? tau / static_cast<double>(steps) : 0.0;
    double limit = stable_dt(spec, grid);
    if (dt > limit * (1.0 + 1e-12))
        fail(ErrorCode::invalid_argument,
             "splitting step dt=" + std::to_string(dt) + " violates dt*(jump rate + sup V) <= 1/2; use dt <= " +
                 std::to_string(limit),
             limit);
    std::shared_ptr<const CellOperator> base;
    if (spec.base == KernelKind::exact_cauchy)
        base = cauchy_operator(grid, dt);
    else
        base = step_operator(grid, spec.epsilon, dt, spec.tol_series);
    auto vbar = cell_average_potential(*spec.potential, grid);
    std::vector<double> d(grid.n());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::exp(-0.5 * dt * vbar[i]);
    return std::make_unique<SplittingOperator>(grid, tau, std::move(base), std::move(d), steps);
}

KernelRow kernel_row(const KernelSpec& spec, const Grid1D& grid, double y, double tau) {
    if (!(tau > 0.0)) fail(ErrorCode::domain, "kernel_row: elapsed time must be positive");
    KernelRow row;
    const std::size_t n = grid.n();
    if (spec.kind == KernelKind::exact_cauchy) {
        row.density = GridFn(grid);
        for (std::size_t j = 0; j < n; ++j) row.density.values[j] = cauchy_pdf(grid.x(j), y, tau);
        row.density.tail_lo = cauchy_cdf(grid.x_min(), y, tau);
        row.density.tail_hi = cauchy_sf(grid.x_max(), y, tau);
        return row;
    }
    std::size_t iy = grid.nearest(y);
    auto op = make_operator(spec, grid, tau);
    std::vector<double> unit(n, 0.0);
    unit[iy] = 1.0;
    PushResult r = op->push(unit);
    row.atom_index = iy;
    if (spec.has_atom()) {
        double vy = 0.0;
        if (spec.kind == KernelKind::perturbed) {
            auto vbar = cell_average_potential(*spec.potential, grid);
            vy = vbar[iy];
        }
        row.atom_weight = std::exp(-tau * (q_eps_mass(spec.epsilon) + vy));
        r.mass[iy] = std::max(0.0, r.mass[iy] - row.atom_weight);
        if (iy == 0) r.edge_lo = std::max(0.0, r.edge_lo - row.atom_weight);
        if (iy == n - 1) r.edge_hi = std::max(0.0, r.edge_hi - row.atom_weight);
    }
    row.density = masses_to_density(grid, r);
    return row;
}

double kernel_density(const KernelSpec& spec, const Grid1D& grid, double y, double x, double tau) {
    if (spec.kind == KernelKind::exact_cauchy) return cauchy_kernel(y, 0.0, x, tau);
    KernelRow row = kernel_row(spec, grid, y, tau);
    if (spec.kind == KernelKind::truncated_step) {
        // translation invariant: shift the probe by the snapping offset
        return row.density.at(x - (y - grid.x(row.atom_index)));
    }
    return row.density.at(x);
}

} // namespace levy
