#include "levybridge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace levy {

double cauchy_kernel(double y, double s, double x, double t) {
    if (!(t > s)) fail(ErrorCode::domain, "cauchy_kernel: requires t > s");
    double tau = t - s;
    double d = x - y;
    return tau / (kPi * (tau * tau + d * d));
}

double cauchy_kernel_mass(double tau, double lo, double hi) {
    if (tau < 0.0) fail(ErrorCode::domain, "cauchy_kernel_mass: negative elapsed time");
    if (tau == 0.0) return (lo < 0.0 && 0.0 <= hi) ? 1.0 : 0.0;
    return cauchy_interval(lo, hi, 0.0, tau);
}

double q_eps(double epsilon, double x) {
    require(epsilon > 0.0, "q_eps: epsilon must be positive");
    return std::abs(x) > epsilon ? 1.0 / (kPi * x * x) : 0.0;
}

double q_eps_mass(double epsilon) {
    require(epsilon > 0.0, "q_eps_mass: epsilon must be positive");
    return 2.0 / (kPi * epsilon);
}

double truncated_exponent(double epsilon, double p) {
    require(epsilon > 0.0, "truncated_exponent: epsilon must be positive");
    double ap = std::abs(p);
    if (ap == 0.0) return 0.0;
    double half = std::sin(0.5 * ap * epsilon);
    double oscill = 2.0 * half * half / epsilon;  // (1 - cos p eps)/eps
    double tail = ap * (0.5 * kPi - sine_integral(ap * epsilon));
    return (2.0 / kPi) * (oscill + tail);
}

double char_fn_step(double epsilon, double p, double t) {
    require(epsilon > 0.0, "char_fn_step: epsilon must be positive");
    require(t >= 0.0, "char_fn_step: t must be nonnegative");
    return std::exp(-t * truncated_exponent(epsilon, p));
}

double char_fn_cauchy(double p, double t) {
    require(t >= 0.0, "char_fn_cauchy: t must be nonnegative");
    return std::exp(-t * std::abs(p));
}

namespace {

// int_a^b (alpha + beta z)/z^2 dz for 0 < a < b (b may be inf when beta == 0).
double positive_piece(double alpha, double beta, double a, double b) {
    if (b == INFINITY) return alpha / a;
    double w = b - a;
    return alpha * w / (a * b) + beta * std::log1p(w / a);
}

} // namespace

double linear_over_square(double alpha, double beta, double lo, double hi, double epsilon) {
    if (!(hi > lo)) return 0.0;
    if (beta != 0.0 && (std::isinf(lo) || std::isinf(hi)))
        fail(ErrorCode::domain, "linear_over_square: infinite range needs beta == 0");
    double total = 0.0;
    if (hi > epsilon) total += positive_piece(alpha, beta, std::max(lo, epsilon), hi);
    if (lo < -epsilon) {
        // z -> -z maps [lo, min(hi,-eps)] onto [max(-hi,eps), -lo].
        total += positive_piece(alpha, -beta, std::max(-hi, epsilon), -lo);
    }
    return total;
}

double truncated_jump_integral(double epsilon, const GridFn& f, double y, double lo, double hi) {
    require(epsilon > 0.0, "truncated_jump_integral: epsilon must be positive");
    if (!(hi > lo)) return 0.0;
    const Grid1D& g = f.grid;
    const auto& v = f.values;
    const double dx = g.dx();
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < g.n(); ++j) {
        double a = g.x(j) - y;
        double za = std::max(a, lo), zb = std::min(a + dx, hi);
        if (!(zb > za)) continue;
        // f(y+z) = v_j + (v_{j+1}-v_j)(z - a)/dx on [a, a+dx]
        double beta = (v[j + 1] - v[j]) / dx;
        double alpha = v[j] - beta * a;
        total += linear_over_square(alpha, beta, za, zb, epsilon);
    }
    double left = g.x(0) - y, right = g.x(g.n() - 1) - y;
    total += v.front() * linear_over_square(1.0, 0.0, lo, std::min(left, hi), epsilon);
    total += v.back() * linear_over_square(1.0, 0.0, std::max(right, lo), hi, epsilon);
    return total;
}

double truncated_jump_integral(double epsilon, const GridFn& f, double y) {
    return truncated_jump_integral(epsilon, f, y, -INFINITY, INFINITY);
}

namespace {

// int of the right (falling) and left (rising) half hats of the node at lag c
// against chi_{|z|>eps}/z^2.
double right_half_hat(double c, double dx, double epsilon) {
    return linear_over_square((c + dx) / dx, -1.0 / dx, c, c + dx, epsilon);
}

double left_half_hat(double c, double dx, double epsilon) {
    return linear_over_square(-(c - dx) / dx, 1.0 / dx, c - dx, c, epsilon);
}

bool resolvable(double epsilon, double dx) { return epsilon >= 2.0 * dx * (1.0 - 1e-9); }

} // namespace

GridFn nabla_eps_apply(double epsilon, const GridFn& f) {
    require(epsilon > 0.0, "nabla_eps_apply: epsilon must be positive");
    const Grid1D& g = f.grid;
    const double dx = g.dx();
    if (!resolvable(epsilon, dx))
        fail(ErrorCode::invalid_argument, "nabla_eps_apply: cutoff epsilon < 2 dx is not resolvable on this grid");
    const std::size_t n = g.n();
    const std::size_t nl = 2 * n - 1;
    // Lag index k <-> lag (k - (n-1)) dx.
    std::vector<double> full_hat(nl), left(nl), right(nl);
    for (std::size_t k = 0; k < nl; ++k) {
        double c = (static_cast<double>(k) - static_cast<double>(n - 1)) * dx;
        left[k] = left_half_hat(c, dx, epsilon);
        right[k] = right_half_hat(c, dx, epsilon);
        full_hat[k] = left[k] + right[k];
    }
    // interior: sum_j full_hat[j - i + n - 1] * f_j over j = 1..n-2, a
    // correlation evaluated as convolution with the reversed weights.
    std::vector<double> reversed(full_hat.rbegin(), full_hat.rend());
    std::vector<double> inner(f.values);
    inner.front() = 0.0;
    inner.back() = 0.0;
    auto corr = linear_convolution(inner, reversed);

    GridFn out(g);
    const double x0 = g.x(0);
    const double xn = g.x(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        double xi = g.x(i);
        double J = corr[n - 1 + i];
        J += right[n - 1 - i] * f.values.front();      // node 0 at lag -i
        J += left[2 * n - 2 - i] * f.values.back();    // node n-1 at lag n-1-i
        J += f.values.front() / std::max(xi - x0, epsilon);
        J += f.values.back() / std::max(xn - xi, epsilon);
        out.values[i] = (2.0 / epsilon * f.values[i] - J) / kPi;
    }
    return out;
}

GridFn q_eps_lattice(double epsilon, const Grid1D& grid) {
    require(epsilon > 0.0, "q_eps_lattice: epsilon must be positive");
    const double dx = grid.dx();
    GridFn q(grid);
    for (std::size_t i = 0; i < grid.n(); ++i) {
        double c = grid.x(i);
        q.values[i] = (left_half_hat(c, dx, epsilon) + right_half_hat(c, dx, epsilon)) / (kPi * dx);
    }
    double deficit = std::max(0.0, q_eps_mass(epsilon) - trapezoid(q));
    // Tail mass of 1/x^2 beyond distance d scales like 1/d.
    double wl = 1.0 / std::max(std::abs(grid.x_min()), dx);
    double wh = 1.0 / std::max(std::abs(grid.x_max()), dx);
    q.tail_lo = deficit * wl / (wl + wh);
    q.tail_hi = deficit - q.tail_lo;
    return q;
}

double poisson_tail_bound(double pmf_next, double lambda, int m_next) {
    double r = lambda / static_cast<double>(m_next + 1);
    if (r >= 1.0) return std::numeric_limits<double>::infinity();
    return pmf_next / (1.0 - r);
}

StepKernel step_kernel(double epsilon, double t, const Grid1D& grid, double tol_series) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "step_kernel: epsilon must be positive");
    if (!(t >= 0.0)) fail(ErrorCode::invalid_argument, "step_kernel: t must be nonnegative");
    require(tol_series > 0.0, "step_kernel: tol_series must be positive");
    std::ptrdiff_t s = grid.origin_index();
    require(s >= 0, "step_kernel: grid must contain the origin");

    StepKernel k;
    k.epsilon = epsilon;
    k.t = t;
    const double lambda = 2.0 * t / (kPi * epsilon);
    k.atom_weight = std::exp(-lambda);
    k.ac_part = GridFn(grid);
    if (t == 0.0) return k;

    const std::size_t n = grid.n();
    const double dx = grid.dx();
    GridFn q = q_eps_lattice(epsilon, grid);
    FftConvolver conv(q.values, n);

    // term_m = exp(-lambda) t^m/m! q^{*m}; exact mass is the Poisson pmf.
    std::vector<double> term(n);
    for (std::size_t i = 0; i < n; ++i) term[i] = k.atom_weight * t * q.values[i];
    double pmf = k.atom_weight * lambda;
    double tail_total = 0.0;
    int m = 1;
    constexpr int kMaxTerms = 100000;
    while (true) {
        GridFn tm(grid, term);
        tail_total += std::max(0.0, pmf - trapezoid(tm));
        for (std::size_t i = 0; i < n; ++i) k.ac_part.values[i] += term[i];
        double pmf_next = pmf * lambda / static_cast<double>(m + 1);
        if (static_cast<double>(m + 2) > lambda && poisson_tail_bound(pmf_next, lambda, m + 1) < tol_series) break;
        if (m >= kMaxTerms) fail(ErrorCode::not_converged, "step_kernel: series did not reach tol_series");
        auto full = conv.full(term);
        double scale = dx * t / static_cast<double>(m + 1);
        for (std::size_t i = 0; i < n; ++i) term[i] = scale * full[i + static_cast<std::size_t>(s)];
        pmf = pmf_next;
        ++m;
    }
    k.terms = m;
    for (double& v : k.ac_part.values) v = std::max(0.0, v);
    double wl = 1.0 / std::max(std::abs(grid.x_min()), dx);
    double wh = 1.0 / std::max(std::abs(grid.x_max()), dx);
    k.ac_part.tail_lo = tail_total * wl / (wl + wh);
    k.ac_part.tail_hi = tail_total - k.ac_part.tail_lo;
    return k;
}

} // namespace levy
