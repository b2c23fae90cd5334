#include "levybridge/kernels.hpp"
#include "levybridge/schroedinger.hpp"
#include "levybridge/stepsim.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace levy;

namespace {

const Grid1D kGrid(-30.0, 30.0, 1201);

const SchroedingerSolution& bimodal_cauchy() {
    static const SchroedingerSolution s = solve_system(bimodal_preset(kGrid, 1.0), KernelSpec::cauchy());
    return s;
}

const SchroedingerSolution& bimodal_step() {
    static const SchroedingerSolution s = solve_system(bimodal_preset(kGrid, 1.0), KernelSpec::step(0.3));
    return s;
}

} // namespace

TEST(Presets, DensitiesArePositiveAndNormalised) {
    for (const auto& b : {bimodal_preset(kGrid, 1.0), free_preset(kGrid, 0.5), pinned_preset(kGrid, 2.0, -1.0, 1.0)}) {
        EXPECT_NO_THROW(b.validate(1e-10));
    }
    GridFn c = cauchy_cells(kGrid, 0.5, 2.0);
    // cell averages, with the tails holding everything beyond the end nodes
    const double h = 0.5 * kGrid.dx();
    EXPECT_NEAR(c.values[600] * kGrid.dx(), oracle::cauchy_cdf(h, 0.5, 2.0) - oracle::cauchy_cdf(-h, 0.5, 2.0), 1e-15);
    EXPECT_NEAR(c.tail_lo, oracle::cauchy_cdf(-30.0, 0.5, 2.0), 1e-7);
    EXPECT_NEAR(integrate(c), 1.0, 1e-12);
    EXPECT_THROW(pinned_preset(kGrid, 1.0, 0.0, 0.0, -1.0), Error);
    EXPECT_THROW(cauchy_mixture_cells(kGrid, {0.5, 0.5}, {0, 1}, {1}), Error);
}

TEST(BoundaryData, ValidationRejectsBadMarginals) {
    BoundaryData b = bimodal_preset(kGrid, 1.0);
    BoundaryData neg = b;
    neg.rho0.values[10] = -1e-9;
    EXPECT_THROW(neg.validate(), Error);
    BoundaryData heavy = b;
    for (double& v : heavy.rhoT.values) v *= 1.01;
    EXPECT_THROW(heavy.validate(), Error);
    BoundaryData t0 = b;
    t0.T = 0.0;
    EXPECT_THROW(t0.validate(), Error);
}

TEST(Solver, FitsBothMarginals) {
    for (const auto* s : {&bimodal_cauchy(), &bimodal_step()}) {
        EXPECT_LE(s->residual, 1e-8);
        EXPECT_LE(marginal_residual(*s, s->boundary), 1e-8);
        ASSERT_FALSE(s->residual_history.empty());
        EXPECT_DOUBLE_EQ(s->residual_history.back(), s->residual);
        GridFn r0 = interpolating_density(*s, 0.0), rT = interpolating_density(*s, 1.0);
        for (std::size_t i = 1; i + 1 < kGrid.n(); ++i) {
            EXPECT_NEAR(r0.values[i], s->boundary.rho0.values[i], 1e-8);
            EXPECT_NEAR(rT.values[i], s->boundary.rhoT.values[i], 1e-8);
        }
    }
}

TEST(Solver, InitialMarginalWithAnalyticKernel) {
    // f(y) int k(y,0,x,T) g(x) dx against rho_0, with g extended by its end
    // values beyond the window and the kernel evaluated in closed form.
    const auto& s = bimodal_cauchy();
    const auto& g = s.g.values;
    for (double y : {-4.0, -1.0, 0.0, 0.5, 3.0, 12.0}) {
        std::size_t i = kGrid.nearest(y);
        double yi = kGrid.x(i);
        double th = g.front() * oracle::cauchy_cdf(kGrid.x_min(), yi, 1.0) +
                    g.back() * (1.0 - oracle::cauchy_cdf(kGrid.x_max(), yi, 1.0));
        for (std::size_t j = 0; j < kGrid.n(); ++j) th += kGrid.weight(j) * oracle::cauchy_density(kGrid.x(j), yi, 1.0) * g[j];
        EXPECT_NEAR(s.f.values[i] * th, s.boundary.rho0.values[i], 1e-4 * s.boundary.rho0.values[i]) << y;
    }
}

TEST(Solver, FreePresetHasConstantG) {
    for (const auto& k : {KernelSpec::cauchy(), KernelSpec::step(0.4)}) {
        auto s = solve_system(free_preset(kGrid, 1.0, k), k);
        double lo = *std::min_element(s.g.values.begin(), s.g.values.end());
        double hi = *std::max_element(s.g.values.begin(), s.g.values.end());
        EXPECT_LE((hi - lo) / hi, 1e-8);
    }
}

TEST(Solver, GaugeLeavesObservablesInvariant) {
    const auto& s = bimodal_step();
    auto r = rescale_gauge(s, 4.2);
    GridFn a = interpolating_density(s, 0.4), b = interpolating_density(r, 0.4);
    for (std::size_t i = 0; i < kGrid.n(); i += 17) EXPECT_NEAR(a.values[i], b.values[i], 1e-14);
    EXPECT_NEAR(transition_density(s, 0.1, 0.2, 1.0, 0.7), transition_density(r, 0.1, 0.2, 1.0, 0.7), 1e-14);
    EXPECT_THROW(rescale_gauge(s, 0.0), Error);
}

TEST(Solver, MismatchedWindowMassIsReported) {
    BoundaryData b = bimodal_preset(kGrid, 1.0);
    b.rhoT.tail_hi += 1e-5;
    try {
        solve_system(b, KernelSpec::cauchy());
        FAIL() << "expected a domain error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::domain);
        EXPECT_NEAR(e.value(), 1e-5, 1e-9);
    }
}

TEST(Solver, IterationCapGivesNotConverged) {
    SolveOptions o;
    o.max_iter = 2;
    o.tol_fit = 1e-14;
    try {
        solve_system(bimodal_preset(kGrid, 1.0), KernelSpec::cauchy(), o);
        FAIL() << "expected non-convergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_converged);
        EXPECT_GT(e.value(), 1e-14);
    }
}

TEST(Theta, TimeFieldMatchesDirectPulls) {
    const auto& s = bimodal_step();
    ThetaField f = theta_time_field(s, 8);
    for (std::size_t k : {0u, 3u, 8u}) {
        auto direct = theta_values(s, f.times[k]);
        for (std::size_t i = 0; i < kGrid.n(); i += 31) EXPECT_NEAR(f.values[k][i], direct[i], 1e-11 * direct[i]);
    }
    EXPECT_NEAR(f.at(kGrid.x(100), f.times[3]), f.values[3][100], 1e-15);
    EXPECT_LE(f.min_over_time(0.0), f.at(0.0, 0.37));
    EXPECT_GE(f.max_value(), f.at(0.0, 0.37));
}

TEST(Transition, RowsAreProbabilityMeasures) {
    const auto& s = bimodal_step();
    for (auto [y, a, b] : {std::tuple{0.0, 0.0, 1.0}, std::tuple{-3.1, 0.2, 0.5}, std::tuple{2.0, 0.6, 0.61}}) {
        TransitionRow r = transition_row(s, y, a, b);
        for (double v : r.density.values) ASSERT_GE(v, 0.0);
        EXPECT_NEAR(transition_mass(s, y, a, b), 1.0, 1e-10);
        EXPECT_GT(r.atom_weight, 0.0);
    }
    EXPECT_THROW(transition_row(s, 0.0, 0.5, 0.5), Error);
    EXPECT_THROW(transition_row(s, 0.0, 0.5, 1.5), Error);
}

TEST(Bridge, DensityIntegratesToOneAndMatchesProduct) {
    const double y0 = -1.0, zT = 2.0, T = 2.0;
    for (double t : {0.3, 1.0, 1.7}) {
        auto p = [&](double x) { return bridge_density(y0, 0.0, zT, T, x, t); };
        double m = oracle::integrate_to_inf(p, 0.0, 1e-13) + oracle::integrate_to_inf([&](double x) { return p(-x); }, 0.0, 1e-13);
        EXPECT_NEAR(m, 1.0, 1e-9);
        double x = 0.4;
        double ref = oracle::cauchy_density(x, y0, t) * oracle::cauchy_density(zT, x, T - t) / oracle::cauchy_density(zT, y0, T);
        EXPECT_NEAR(p(x), ref, 1e-15);
    }
    EXPECT_NEAR(bridge_density(0, 0, 0, 2, 0.0, 1.0), 2.0 / oracle::pi, 1e-15);
    EXPECT_THROW(bridge_density(0, 0, 0, 1, 0.0, 1.0), Error);
}

TEST(Json, RoundTripPreservesSolution) {
    const auto& s = bimodal_step();
    auto back = solution_from_json(solution_to_json(s));
    EXPECT_TRUE(back.grid().same_as(s.grid()));
    for (std::size_t i = 0; i < kGrid.n(); ++i) {
        ASSERT_EQ(back.f.values[i], s.f.values[i]);
        ASSERT_EQ(back.g.values[i], s.g.values[i]);
    }
    EXPECT_EQ(back.f.tail_lo, s.f.tail_lo);
    EXPECT_EQ(back.kernel.kind, s.kernel.kind);
    EXPECT_EQ(back.kernel.epsilon, s.kernel.epsilon);
    EXPECT_EQ(back.iterations, s.iterations);
    EXPECT_EQ(theta(back, 0.3, 0.5), theta(s, 0.3, 0.5));
}

TEST(Json, MalformedDocumentsAreIoErrors) {
    for (const char* text : {"", "{", "[]", "{\"version\": 99}", "{\"version\": 1}"}) {
        try {
            solution_from_json(text);
            FAIL() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::io) << text;
        }
    }
}
