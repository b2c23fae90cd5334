#include "levybridge/feynman_kac.hpp"
#include "levybridge/kernels.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace levy;

namespace {

StepPath two_state_path() {
    StepPath p;
    p.t_start = 0.0;
    p.t_end = 1.0;
    p.x0 = 0.0;
    p.jump_times = {0.3};
    p.states = {2.0};
    return p;
}

const std::vector<double> kEdges{-2.0, -1.0, -0.3, 0.3, 1.0, 2.0, 4.0};

} // namespace

TEST(PathWeight, SegmentwiseIntegral) {
    StepPath p = two_state_path();
    auto box = Potential::box(1.0, 3.0, 2.0);
    EXPECT_DOUBLE_EQ(path_fk_weight(p, box), std::exp(-2.0 * 0.7));
    EXPECT_NEAR(path_fk_weight(p, box, 0.5, 0.8), std::exp(-2.0 * 0.3), 1e-15);
    EXPECT_NEAR(path_fk_weight(p, box, 0.1, 0.3), 1.0, 1e-15);
    auto h = Potential::truncated_harmonic(3.0);
    EXPECT_NEAR(path_fk_weight(p, h), std::exp(-(0.0 * 0.3 + 3.0 * 0.7)), 1e-15);
    EXPECT_DOUBLE_EQ(path_fk_weight(p, Potential::constant(0.0)), 1.0);
}

TEST(FKMonteCarlo, ConstantPotentialGivesExactWeights) {
    auto est = fk_kernel_mc(0.2, 0.0, 1.3, Potential::constant(0.4), kEdges, 20000, 8);
    EXPECT_NEAR(est.min_weight, std::exp(-0.52), 1e-14);
    EXPECT_NEAR(est.max_weight, std::exp(-0.52), 1e-14);
    EXPECT_NEAR(est.total_mean, std::exp(-0.52), 1e-14);
    EXPECT_NEAR(est.total_stderr, 0.0, 1e-14);
}

TEST(FKMonteCarlo, BoxPotentialAgainstIndependentSimulation) {
    // Test-side sampler: exponential clocks at rate 2/(pi eps), jumps +-eps/U,
    // time spent in the box accumulated exactly.
    const double eps = 0.3, t = 1.0, a = -0.5, b = 1.0, h = 1.5;
    const double rate = 2.0 / (oracle::pi * eps);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::exponential_distribution<double> clock(rate);
    const int n = 200000;
    std::vector<double> s1(kEdges.size() - 1, 0.0), s2(kEdges.size() - 1, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = 0.0, now = 0.0, inside = 0.0;
        for (;;) {
            double dt = clock(rng);
            double stop = std::min(t, now + dt);
            if (x >= a && x <= b) inside += stop - now;
            now = stop;
            if (now >= t) break;
            x += (u(rng) < 0.5 ? -1.0 : 1.0) * eps / (1.0 - u(rng));
        }
        double w = std::exp(-h * inside);
        for (std::size_t k = 0; k + 1 < kEdges.size(); ++k)
            if (x >= kEdges[k] && x < kEdges[k + 1]) {
                s1[k] += w;
                s2[k] += w * w;
            }
    }
    auto est = fk_kernel_mc(eps, 0.0, t, Potential::box(a, b, h), kEdges, 200000, 31);
    for (std::size_t k = 0; k + 1 < kEdges.size(); ++k) {
        double m = s1[k] / n;
        double se = std::sqrt((s2[k] / n - m * m) / n);
        double tol = 4.0 * std::hypot(se, est.weights_stderr[k]);
        EXPECT_NEAR(est.weights_mean[k], m, tol) << "bin " << k;
    }
}

TEST(FKMonteCarlo, ReproducibleAcrossThreadCounts) {
    setenv("LEVY_BRIDGE_THREADS", "1", 1);
    auto a = fk_kernel_mc(0.2, 0.1, 0.5, Potential::box(-1, 1, 1), kEdges, 3000, 77);
    setenv("LEVY_BRIDGE_THREADS", "4", 1);
    auto b = fk_kernel_mc(0.2, 0.1, 0.5, Potential::box(-1, 1, 1), kEdges, 3000, 77);
    unsetenv("LEVY_BRIDGE_THREADS");
    EXPECT_EQ(a.weights_mean, b.weights_mean);
    EXPECT_EQ(a.total_mean, b.total_mean);
}

TEST(FKMonteCarlo, RejectsBadBins) {
    EXPECT_THROW(fk_kernel_mc(0.2, 0.0, 1.0, Potential::constant(0), {1.0}, 10, 1), Error);
    EXPECT_THROW(fk_kernel_mc(0.2, 0.0, 1.0, Potential::constant(0), {1.0, 0.0}, 10, 1), Error);
    EXPECT_THROW(fk_kernel_mc(0.2, 0.0, -1.0, Potential::constant(0), kEdges, 10, 1), Error);
}

TEST(FKSymmetry, SwappedPairingsAgree) {
    Grid1D gf(-1.0, 0.0, 11), gg(0.5, 2.0, 16);
    GridFn f(gf, 1.0), g(gg, 1.0);
    for (std::size_t i = 0; i < gg.n(); ++i) g.values[i] = 1.0 + gg.x(i);
    auto r = fk_symmetry_check(0.1, 1.0, Potential::box(-0.5, 1.0, 2.0), f, g, 100000, 3);
    EXPECT_GT(r.lhs, 0.0);
    EXPECT_LE(std::abs(r.lhs - r.rhs), 4.0 * r.stderr_);
}

TEST(FKLowerBound, FloorHoldsAndSmallWindowIsReported) {
    auto rows = fk_lower_bound_check(0.05, 0.0, {-1.0, -0.5, 0.0, 0.5, 1.0}, 1.0, Potential::box(-1, 1, 1), 10.0,
                                     50000, 6);
    for (const auto& r : rows) {
        EXPECT_TRUE(r.pass);
        EXPECT_NEAR(r.floor, 0.5 * std::exp(-1.0) * r.cauchy_mass, 1e-15);
    }
    EXPECT_THROW(fk_lower_bound_check(0.05, 0.0, {-1.0, 1.0}, 1.0, Potential::box(-1, 1, 1), 0.2, 5000, 6), Error);
}

TEST(FKGrid, ForwardAndBackwardPropagation) {
    Grid1D g(-20.0, 20.0, 801);
    GridFn rho(g);
    for (std::size_t i = 0; i < g.n(); ++i) rho.values[i] = oracle::cauchy_density(g.x(i), 0.0, 1.0);
    rho.tail_lo = rho.tail_hi = oracle::cauchy_cdf(-20.0, 0.0, 1.0);
    std::vector<double> times{0.0, 0.25, 0.5};
    auto fwd = evolve_theta_perturbed(0.4, rho, Potential::constant(0.0), times, Direction::forward, 0.05);
    ASSERT_EQ(fwd.size(), 3u);
    for (const auto& r : fwd) EXPECT_NEAR(integrate(r), integrate(rho), 1e-10);
    GridFn one(g, 1.0);
    auto back = evolve_theta_perturbed(0.4, one, Potential::constant(0.6), times, Direction::backward, 0.05);
    for (std::size_t i = 0; i < g.n(); i += 40) EXPECT_NEAR(back[0].values[i], std::exp(-0.3), 1e-10);
    try {
        evolve_theta_perturbed(0.01, one, Potential::constant(0.0), times, Direction::backward, 0.1);
        FAIL() << "expected a stability error";
    } catch (const Error& e) {
        EXPECT_NEAR(e.value(), 0.5 / q_eps_mass(0.01), 1e-12);
    }
}

TEST(FKGrid, BinsAgreeWithMonteCarlo) {
    Grid1D g(-40.0, 40.0, 2001);
    auto v = Potential::box(-0.5, 1.0, 1.5);
    auto est = fk_kernel_mc(0.3, 0.0, 1.0, v, kEdges, 100000, 44);
    auto rows = fk_cross_check(est, v, g, 1.0 / 64);
    for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.bin_lo << " mc " << r.mc << " grid " << r.grid;
}

TEST(PerturbedBridge, SolvesAndGivesPositiveDensities) {
    Grid1D g(-20.0, 20.0, 801);
    auto sol = solve_perturbed_schroedinger(bimodal_preset(g, 1.0), 0.4, Potential::truncated_harmonic(2.0));
    EXPECT_LE(sol.residual, 1e-8);
    double p = perturbed_transition_density(sol, 0.0, 0.2, 1.0, 0.8);
    EXPECT_GT(p, 0.0);
    EXPECT_THROW(perturbed_transition_density(sol, 0.0, 0.8, 1.0, 0.2), Error);
}
