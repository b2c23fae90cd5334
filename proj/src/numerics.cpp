#include "levybridge/numerics.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

namespace levy {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
    require(std::isfinite(x_min) && std::isfinite(x_max), "grid bounds must be finite");
    require(x_min < x_max, "grid requires x_min < x_max");
    require(n >= 2, "grid requires at least 2 points");
    dx_ = (x_max - x_min) / static_cast<double>(n - 1);
}

std::size_t Grid1D::nearest(double x) const {
    double r = std::round((x - x_min_) / dx_);
    if (!(r > 0.0)) return 0;
    if (r >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(r);
}

std::ptrdiff_t Grid1D::origin_index() const {
    double r = -x_min_ / dx_;
    double k = std::round(r);
    if (std::abs(r - k) > 1e-9 || k < 0.0 || k > static_cast<double>(n_ - 1)) return -1;
    return static_cast<std::ptrdiff_t>(k);
}

Grid1D Grid1D::lag_grid() const {
    double half = static_cast<double>(n_ - 1) * dx_;
    return Grid1D(-half, half, 2 * n_ - 1);
}

bool Grid1D::same_as(const Grid1D& o) const {
    double scale = std::max({1.0, std::abs(x_min_), std::abs(x_max_)});
    return n_ == o.n_ && std::abs(x_min_ - o.x_min_) <= 1e-12 * scale &&
           std::abs(x_max_ - o.x_max_) <= 1e-12 * scale;
}

GridFn::GridFn(const Grid1D& g, std::vector<double> v, double lo, double hi)
    : grid(g), values(std::move(v)), tail_lo(lo), tail_hi(hi) {
    require(values.size() == grid.n(), "GridFn values length must equal grid.n");
}

double GridFn::at(double x) const {
    double u = (x - grid.x_min()) / grid.dx();
    if (u <= 0.0) return values.front();
    std::size_t last = grid.n() - 1;
    if (u >= static_cast<double>(last)) return values.back();
    auto i = static_cast<std::size_t>(u);
    double w = u - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

double trapezoid(const GridFn& f) {
    const auto& v = f.values;
    std::size_t n = v.size();
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < n; ++i) s += v[i];
    return s * f.grid.dx();
}

double integrate(const GridFn& f) { return trapezoid(f) + f.tail_mass(); }

double integrate_range(const GridFn& f, double a, double b) {
    if (!(b > a)) return 0.0;
    const Grid1D& g = f.grid;
    const auto& v = f.values;
    double total = 0.0;
    if (a < g.x_min()) total += f.tail_lo;
    if (b > g.x_max()) total += f.tail_hi;
    double lo = std::max(a, g.x_min()), hi = std::min(b, g.x_max());
    if (!(hi > lo)) return total;
    const double dx = g.dx();
    auto segment = [&](std::size_t j, double u0, double u1) {
        // exact integral of the linear piece on [x_j + u0 dx, x_j + u1 dx]
        double d = v[j + 1] - v[j];
        return dx * (v[j] * (u1 - u0) + 0.5 * d * (u1 * u1 - u0 * u0));
    };
    double r0 = (lo - g.x_min()) / dx, r1 = (hi - g.x_min()) / dx;
    std::size_t j0 = std::min(static_cast<std::size_t>(r0), g.n() - 2);
    std::size_t j1 = std::min(static_cast<std::size_t>(r1), g.n() - 2);
    if (j0 == j1) return total + segment(j0, r0 - j0, r1 - j0);
    total += segment(j0, r0 - j0, 1.0);
    for (std::size_t j = j0 + 1; j < j1; ++j) total += 0.5 * dx * (v[j] + v[j + 1]);
    total += segment(j1, 0.0, r1 - j1);
    return total;
}

std::vector<double> node_masses(const GridFn& f) {
    std::size_t n = f.grid.n();
    std::vector<double> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = f.grid.weight(i) * f.values[i];
    m.front() += f.tail_lo;
    m.back() += f.tail_hi;
    return m;
}

GridFn convolve(const GridFn& f, const GridFn& g) {
    require(f.grid.same_as(g.grid), "convolve: arguments live on different grids");
    std::ptrdiff_t s = f.grid.origin_index();
    require(s >= 0, "convolve: grid must contain the origin as a lattice point");
    const std::size_t n = f.grid.n();
    auto full = linear_convolution(f.values, g.values);
    GridFn out(f.grid);
    const double dx = f.grid.dx();
    for (std::size_t i = 0; i < n; ++i) out.values[i] = dx * full[i + static_cast<std::size_t>(s)];

    double tf = f.tail_mass();
    double tg = g.tail_mass();
    if (tf > 0.0 || tg > 0.0) {
        double mf = integrate(f);
        double mg = integrate(g);
        double deficit = std::max(0.0, mf * mg - trapezoid(out));
        double lo_w = f.tail_lo * mg + g.tail_lo * mf;
        double hi_w = f.tail_hi * mg + g.tail_hi * mf;
        double share = (lo_w + hi_w > 0.0) ? lo_w / (lo_w + hi_w) : 0.5;
        out.tail_lo = deficit * share;
        out.tail_hi = deficit - out.tail_lo;
    }
    return out;
}

double sine_integral(double x) {
    if (!std::isfinite(x)) fail(ErrorCode::domain, "sine_integral: non-finite argument");
    gsl_sf_result r;
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    int status = gsl_sf_Si_e(x, &r);
    gsl_set_error_handler(old);
    if (status != GSL_SUCCESS) fail(ErrorCode::numerical, "sine_integral: evaluation failed");
    return r.val;
}

double cauchy_pdf(double x, double loc, double scale) {
    double z = (x - loc) / scale;
    return 1.0 / (kPi * scale * (1.0 + z * z));
}

double cauchy_cdf(double x, double loc, double scale) {
    if (x == -INFINITY) return 0.0;
    if (x == INFINITY) return 1.0;
    return std::atan2(1.0, -(x - loc) / scale) / kPi;
}

double cauchy_sf(double x, double loc, double scale) {
    if (x == -INFINITY) return 1.0;
    if (x == INFINITY) return 0.0;
    return std::atan2(1.0, (x - loc) / scale) / kPi;
}

double cauchy_interval(double lo, double hi, double loc, double scale) {
    if (!(hi > lo)) return 0.0;
    if (lo == -INFINITY) return cauchy_cdf(hi, loc, scale);
    if (hi == INFINITY) return cauchy_sf(lo, loc, scale);
    double a = (lo - loc) / scale;
    double b = (hi - loc) / scale;
    double ab = a * b;
    if (ab > -1.0) return std::atan((b - a) / (1.0 + ab)) / kPi;
    return (std::atan(b) - std::atan(a)) / kPi;
}

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      state_(mix64(mix64(seed + 0x632BE59BD9B4E019ULL) ^ (stream_id * 0xD1B54A32D192ED03ULL))) {}

std::uint64_t RandomStream::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
}

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

double RandomStream::exponential(double rate) { return -std::log(uniform_pos()) / rate; }

unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LEVY_BRIDGE_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    }
    return hw;
}

void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    require(chunk > 0, "parallel_chunks: chunk size must be positive");
    std::size_t chunks = chunk_count(n, chunk);
    unsigned workers = std::min<std::size_t>(worker_count(), chunks);
    auto run = [&](std::size_t c) { fn(c, c * chunk, std::min(n, (c + 1) * chunk)); };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < chunks; c += workers) run(c);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace levy
