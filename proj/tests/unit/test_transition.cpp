#include "levybridge/kernels.hpp"
#include "levybridge/potential.hpp"
#include "levybridge/transition.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <numeric>

using namespace levy;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

PushResult some_masses(const Grid1D& g) {
    PushResult in;
    in.mass.resize(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) in.mass[i] = 0.5 + std::sin(0.37 * i) * 0.4;
    in.edge_lo = 0.6 * in.mass.front();
    in.edge_hi = 0.3 * in.mass.back();
    return in;
}

TailField some_function(const Grid1D& g) {
    TailField f;
    f.values.resize(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) f.values[i] = 1.0 + std::cos(0.21 * i) * 0.5;
    f.lo = 0.7;
    f.hi = 1.9;
    return f;
}

// <push(a), g> with the end cells split into node part and tail part.
double pair_push(const PushResult& m, const TailField& g) {
    double s = dot(m.mass, g.values);
    s += (m.mass.front() - m.edge_lo) * (g.lo - g.values.front());
    s += (m.mass.back() - m.edge_hi) * (g.hi - g.values.back());
    return s;
}

std::vector<std::unique_ptr<CellOperator>> operators(const Grid1D& g) {
    std::vector<std::unique_ptr<CellOperator>> ops;
    ops.push_back(cauchy_operator(g, 0.4));
    ops.push_back(step_operator(g, 0.5, 0.3));
    ops.push_back(make_operator(KernelSpec::perturbed(KernelSpec::step(0.5), Potential::box(-1, 2, 0.8), 0.05), g, 0.3));
    ops.push_back(make_operator(KernelSpec::perturbed(KernelSpec::cauchy(), Potential::truncated_harmonic(4), 0.1), g, 0.3));
    return ops;
}

} // namespace

TEST(Operators, PushIsAdjointOfPull) {
    Grid1D g(-6.0, 6.0, 121);
    PushResult a = some_masses(g);
    TailField f = some_function(g);
    for (const auto& op : operators(g)) {
        PushResult m = op->push(a);
        TailField th = op->pull(f);
        double lhs = pair_push(m, f);
        double rhs = pair_push(a, th);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
    }
}

TEST(Operators, FreeOperatorsConserveMass) {
    Grid1D g(-6.0, 6.0, 121);
    PushResult a = some_masses(g);
    double total = std::accumulate(a.mass.begin(), a.mass.end(), 0.0);
    for (auto* op : {static_cast<CellOperator*>(cauchy_operator(g, 0.4).release()),
                     static_cast<CellOperator*>(step_operator(g, 0.5, 0.3).release())}) {
        std::unique_ptr<CellOperator> own(op);
        auto m = op->push(a);
        EXPECT_NEAR(std::accumulate(m.mass.begin(), m.mass.end(), 0.0), total, 1e-12 * total);
        EXPECT_LE(m.edge_lo, m.mass.front());
        EXPECT_LE(m.edge_hi, m.mass.back());
        auto ones = op->pull(std::vector<double>(g.n(), 1.0));
        for (double v : ones) EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(Operators, StepSemigroupIsExact) {
    Grid1D g(-5.0, 5.0, 101);
    auto a = step_operator(g, 0.4, 0.25), b = step_operator(g, 0.4, 0.5), ab = step_operator(g, 0.4, 0.75);
    TailField f = some_function(g);
    TailField two = a->pull(b->pull(f)), one = ab->pull(f);
    for (std::size_t i = 0; i < g.n(); ++i) EXPECT_NEAR(two.values[i], one.values[i], 1e-11);
    EXPECT_NEAR(two.lo, one.lo, 1e-11);
    EXPECT_NEAR(two.hi, one.hi, 1e-11);
}

TEST(Operators, CauchyRowsAreCellMassesOfTheKernel) {
    Grid1D g(-10.0, 10.0, 201);
    const double tau = 0.6;
    auto op = cauchy_operator(g, tau);
    std::vector<double> unit(g.n(), 0.0);
    const std::size_t i0 = 80;
    unit[i0] = 1.0;
    auto m = op->push(unit).mass;
    const double h = 0.5 * g.dx();
    for (std::size_t j = 1; j + 1 < g.n(); j += 13) {
        double lo = g.x(j) - h - g.x(i0), hi = g.x(j) + h - g.x(i0);
        double ref = oracle::integrate([&](double z) { return oracle::cauchy_density(z, 0.0, tau); }, lo, hi, 1e-16);
        EXPECT_NEAR(m[j], ref, 1e-14);
    }
    double left = oracle::cauchy_cdf(g.x(0) + h - g.x(i0), 0.0, tau);
    EXPECT_NEAR(m.front(), left, 1e-13);
}

TEST(Operators, ConstantPotentialScalesByExponential) {
    Grid1D g(-5.0, 5.0, 101);
    const double c = 0.9, tau = 0.5;
    auto base = step_operator(g, 0.5, tau);
    auto pert = make_operator(KernelSpec::perturbed(KernelSpec::step(0.5), Potential::constant(c), 0.05), g, tau);
    TailField f = some_function(g);
    auto x = base->pull(f), y = pert->pull(f);
    // 10 sub-steps, each truncating its Poisson series at 1e-12 with sup f < 2
    for (std::size_t i = 0; i < g.n(); ++i) EXPECT_NEAR(y.values[i], std::exp(-c * tau) * x.values[i], 2e-11);
}

TEST(Operators, SplittingConvergesAtSecondOrder) {
    Grid1D g(-5.0, 5.0, 101);
    auto v = Potential::box(-1.0, 1.5, 2.0);
    TailField f = some_function(g);
    auto run = [&](double dt) {
        return make_operator(KernelSpec::perturbed(KernelSpec::step(0.6), v, dt), g, 0.5)->pull(f).values;
    };
    auto a = run(0.05), b = run(0.025), c = run(0.0125);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
        e1 = std::max(e1, std::abs(a[i] - b[i]));
        e2 = std::max(e2, std::abs(b[i] - c[i]));
    }
    EXPECT_GT(e1 / e2, 3.0);
    EXPECT_LT(e1 / e2, 5.0);
}

TEST(Operators, UnstableStepIsRejectedWithAdvice) {
    Grid1D g(-5.0, 5.0, 101);
    auto spec = KernelSpec::perturbed(KernelSpec::step(0.01), Potential::constant(1.0), 0.5);
    double limit = stable_dt(spec, g);
    EXPECT_NEAR(limit, 0.5 / (q_eps_mass(0.01) + 1.0), 1e-15);
    try {
        make_operator(spec, g, 1.0);
        FAIL() << "expected a stability error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
        EXPECT_NEAR(e.value(), limit, 1e-15);
    }
}

TEST(KernelRow, StepRowMassAndAtom) {
    Grid1D g(-20.0, 20.0, 801);
    auto spec = KernelSpec::step(0.3);
    KernelRow r = kernel_row(spec, g, 0.52, 0.4);
    EXPECT_EQ(r.atom_index, g.nearest(0.52));
    EXPECT_DOUBLE_EQ(r.atom_weight, std::exp(-0.4 * q_eps_mass(0.3)));
    EXPECT_NEAR(integrate(r.density) + r.atom_weight, 1.0, 1e-10);
    EXPECT_THROW(kernel_row(spec, g, 0.0, 0.0), Error);
}

TEST(KernelRow, CauchyRowIsClosedForm) {
    Grid1D g(-20.0, 20.0, 401);
    KernelRow r = kernel_row(KernelSpec::cauchy(), g, 1.3, 0.7);
    for (std::size_t j = 0; j < g.n(); j += 50) EXPECT_DOUBLE_EQ(r.density.values[j], cauchy_kernel(1.3, 0.0, g.x(j), 0.7));
    EXPECT_NEAR(integrate(r.density), 1.0, 1e-3);
    EXPECT_DOUBLE_EQ(kernel_density(KernelSpec::cauchy(), g, 1.3, 2.0, 0.7), cauchy_kernel(1.3, 0.0, 2.0, 0.7));
}

TEST(KernelSpec, Validation) {
    EXPECT_THROW(KernelSpec::step(0.0), Error);
    EXPECT_THROW(KernelSpec::perturbed(KernelSpec::step(0.5), Potential::constant(1), 0.0), Error);
    auto p = KernelSpec::perturbed(KernelSpec::step(0.5), Potential::constant(1), 0.1);
    EXPECT_TRUE(p.has_atom());
    EXPECT_FALSE(KernelSpec::cauchy().has_atom());
    EXPECT_THROW(KernelSpec::perturbed(p, Potential::constant(1), 0.1), Error);
    EXPECT_NE(p.describe().find("const"), std::string::npos);
}
