#pragma once

#include "levybridge/error.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace levy {

inline constexpr double kPi = 3.14159265358979323846;

struct Tolerances {
    double tol_mass = 1e-4;
    double tol_fit = 1e-8;
    double tol_series = 1e-12;
    double conv_check = 1e-10;
};

// Uniform lattice x_i = x_min + i*dx, i = 0..n-1.
class Grid1D {
public:
    Grid1D() = default;
    Grid1D(double x_min, double x_max, std::size_t n);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t n() const { return n_; }
    double dx() const { return dx_; }
    double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }

    // Trapezoid weight of node i.
    double weight(std::size_t i) const { return (i == 0 || i + 1 == n_) ? 0.5 * dx_ : dx_; }

    // Index of the lattice point nearest to x, clamped to the grid.
    std::size_t nearest(double x) const;

    // Returns the index of the origin when 0 lies on the lattice (to 1e-9 of
    // a cell), -1 otherwise.
    std::ptrdiff_t origin_index() const;

    // Lag lattice {-(n-1)dx, ..., (n-1)dx} shared by translation-invariant
    // kernels acting on this grid.
    Grid1D lag_grid() const;

    bool same_as(const Grid1D& other) const;

private:
    double x_min_ = 0.0;
    double x_max_ = 1.0;
    std::size_t n_ = 2;
    double dx_ = 1.0;
};

// Grid-sampled function. tail_lo/tail_hi hold mass analytically assigned to
// (-inf, x_min) and (x_max, inf); both are zero for non-density functions.
struct GridFn {
    Grid1D grid;
    std::vector<double> values;
    double tail_lo = 0.0;
    double tail_hi = 0.0;

    GridFn() = default;
    explicit GridFn(const Grid1D& g, double fill = 0.0) : grid(g), values(g.n(), fill) {}
    GridFn(const Grid1D& g, std::vector<double> v, double lo = 0.0, double hi = 0.0);

    double tail_mass() const { return tail_lo + tail_hi; }

    // Piecewise-linear interpolation, constant extension outside the window.
    double at(double x) const;
};

double trapezoid(const GridFn& f);

// Trapezoid integral plus tail mass.
double integrate(const GridFn& f);

// Integral of the piecewise-linear interpolant over [a, b] (a, b may be
// infinite); tail masses count for the parts beyond the window.
double integrate_range(const GridFn& f, double a, double b);

// Node masses w_i*f_i with the tails folded into the two end nodes.
std::vector<double> node_masses(const GridFn& f);

// Discrete (f*g)(x_i) = dx * sum_j f(x_j) g(x_i - x_j). Both arguments must
// live on the same grid and the grid must contain the origin. Mass leaking
// out of the window is booked into the result tails whenever either input
// carries tail mass.
GridFn convolve(const GridFn& f, const GridFn& g);

// Full linear convolution of two sequences (length a+b-1), FFT based.
std::vector<double> linear_convolution(std::span<const double> a, std::span<const double> b);

// Reusable FFT convolution against a fixed sequence.
class FftConvolver {
public:
    FftConvolver(std::span<const double> kernel, std::size_t input_len);
    ~FftConvolver();
    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;
    FftConvolver(FftConvolver&&) noexcept;
    FftConvolver& operator=(FftConvolver&&) noexcept;

    // Full linear convolution kernel * input, length kernel+input-1.
    std::vector<double> full(std::span<const double> input) const;

    std::size_t input_len() const { return input_len_; }
    std::size_t kernel_len() const { return kernel_len_; }

private:
    struct Impl;
    Impl* impl_ = nullptr;
    std::size_t input_len_ = 0;
    std::size_t kernel_len_ = 0;
};

// Si(x) = int_0^x sin(u)/u du.
double sine_integral(double x);

// Cauchy law helpers (location loc, scale > 0).
double cauchy_pdf(double x, double loc, double scale);
double cauchy_cdf(double x, double loc, double scale);
// Upper tail P(X > x), accurate far into the tail.
double cauchy_sf(double x, double loc, double scale);
// P(lo < X <= hi) without cancellation for narrow intervals far out.
double cauchy_interval(double lo, double hi, double loc, double scale);

// Counter-based stream: the (seed, stream_id) pair fixes the whole sequence,
// so each Monte Carlo path can own a stream independent of scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64();
    double uniform();       // [0, 1)
    double uniform_pos();   // (0, 1]
    double exponential(double rate);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
};

// Worker count for Monte Carlo fan-out; LEVY_BRIDGE_THREADS caps it.
unsigned worker_count();

// Runs fn(chunk, begin, end) over fixed-size chunks of [0, n). Chunking does
// not depend on the worker count, so callers that reduce per-chunk results in
// chunk order get identical sums for any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

} // namespace levy
