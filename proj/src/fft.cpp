#include "levybridge/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <mutex>

namespace levy {

namespace {

// FFTW's planner is not thread-safe; plan execution on new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t nice_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) best <<= 1;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5)
        for (std::size_t p3 = p5; p3 < best; p3 *= 3)
            for (std::size_t p2 = p3; p2 < best; p2 *= 2)
                if (p2 >= n) best = std::min(best, p2);
    return best;
}

struct RealBuf {
    double* p;
    explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) { std::fill(p, p + n, 0.0); }
    ~RealBuf() { fftw_free(p); }
    RealBuf(const RealBuf&) = delete;
    RealBuf& operator=(const RealBuf&) = delete;
};

struct ComplexBuf {
    fftw_complex* p;
    explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
    ~ComplexBuf() { fftw_free(p); }
    ComplexBuf(const ComplexBuf&) = delete;
    ComplexBuf& operator=(const ComplexBuf&) = delete;
};

} // namespace

struct FftConvolver::Impl {
    std::size_t size = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<std::complex<double>> kernel_hat;

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

FftConvolver::FftConvolver(std::span<const double> kernel, std::size_t input_len)
    : impl_(new Impl), input_len_(input_len), kernel_len_(kernel.size()) {
    require(!kernel.empty() && input_len > 0, "FftConvolver: empty operand");
    impl_->size = nice_size(kernel.size() + input_len - 1);
    const std::size_t n = impl_->size;
    const std::size_t nc = n / 2 + 1;
    RealBuf in(n);
    ComplexBuf out(nc);
    {
        std::lock_guard lock(planner_mutex());
        // FFTW_ESTIMATE keeps plan choice, and therefore rounding, reproducible.
        impl_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.p, out.p, FFTW_ESTIMATE);
        impl_->backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), out.p, in.p, FFTW_ESTIMATE);
    }
    std::copy(kernel.begin(), kernel.end(), in.p);
    fftw_execute_dft_r2c(impl_->forward, in.p, out.p);
    impl_->kernel_hat.resize(nc);
    for (std::size_t k = 0; k < nc; ++k) impl_->kernel_hat[k] = {out.p[k][0], out.p[k][1]};
}

FftConvolver::~FftConvolver() { delete impl_; }

FftConvolver::FftConvolver(FftConvolver&& o) noexcept
    : impl_(o.impl_), input_len_(o.input_len_), kernel_len_(o.kernel_len_) {
    o.impl_ = nullptr;
}

FftConvolver& FftConvolver::operator=(FftConvolver&& o) noexcept {
    if (this != &o) {
        delete impl_;
        impl_ = o.impl_;
        input_len_ = o.input_len_;
        kernel_len_ = o.kernel_len_;
        o.impl_ = nullptr;
    }
    return *this;
}

std::vector<double> FftConvolver::full(std::span<const double> input) const {
    require(input.size() == input_len_, "FftConvolver: input length mismatch");
    const std::size_t n = impl_->size;
    const std::size_t nc = n / 2 + 1;
    RealBuf buf(n);
    ComplexBuf spec(nc);
    std::copy(input.begin(), input.end(), buf.p);
    fftw_execute_dft_r2c(impl_->forward, buf.p, spec.p);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < nc; ++k) {
        std::complex<double> v(spec.p[k][0], spec.p[k][1]);
        v *= impl_->kernel_hat[k] * scale;
        spec.p[k][0] = v.real();
        spec.p[k][1] = v.imag();
    }
    fftw_execute_dft_c2r(impl_->backward, spec.p, buf.p);
    return std::vector<double>(buf.p, buf.p + (kernel_len_ + input_len_ - 1));
}

std::vector<double> linear_convolution(std::span<const double> a, std::span<const double> b) {
    return FftConvolver(b, a.size()).full(a);
}

} // namespace levy
