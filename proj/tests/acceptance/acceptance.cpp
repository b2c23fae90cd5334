// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
// Seeds are fixed constants chosen before any run; statistical checks use the
// 3-sigma bands stated in the criteria.

#include "levybridge/feynman_kac.hpp"
#include "levybridge/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace levy;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeedFk = 8101;
constexpr std::uint64_t kSeedSym = 8202;
constexpr std::uint64_t kSeedLower = 8303;
constexpr std::uint64_t kSeedCross = 8404;
constexpr std::uint64_t kSeedConst = 8505;
constexpr std::uint64_t kSeedOcc = 6101;
constexpr std::uint64_t kSeedMax = 9101;
constexpr std::uint64_t kSeedCli = 10101;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (ok ? "" : "[x] ") << what << "; ";
    }
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// ---- 1 -------------------------------------------------------------------

void cauchy_suite(Outcome& o) {
    Grid1D grid(-50.0, 50.0, 4001);  // dx = 0.025
    for (double t : {0.5, 1.0, 2.0}) {
        KernelRow row = kernel_row(KernelSpec::cauchy(), grid, 0.0, t);
        double mass = integrate(row.density);
        o.expect(std::abs(mass - 1.0) <= 1e-6, "mass t=" + sci(t) + " off by " + sci(std::abs(mass - 1.0)));
    }
    double ck = 0.0;
    for (auto [s, t] : {std::pair{0.5, 0.5}, std::pair{0.25, 0.75}, std::pair{0.5, 0.25}}) {
        GridFn a = kernel_row(KernelSpec::cauchy(), grid, 0.0, s).density;
        GridFn b = kernel_row(KernelSpec::cauchy(), grid, 0.0, t).density;
        GridFn c = convolve(a, b);
        for (std::size_t i = 0; i < grid.n(); ++i)
            ck = std::max(ck, std::abs(c.values[i] - cauchy_kernel(0.0, 0.0, grid.x(i), s + t)));
    }
    o.expect(ck <= 1e-4, "Chapman-Kolmogorov sup error " + sci(ck));
    const double inv_pi = 1.0 / 3.14159265358979323846;
    double v0 = cauchy_kernel(0.0, 0.0, 0.0, 1.0);
    double v1 = cauchy_kernel(0.0, 0.0, 1.0, 1.0);
    o.expect(v0 == inv_pi && std::abs(v1 - 0.5 * inv_pi) <= 1e-16, "k(0,0,0,1)=1/pi and k(0,0,1,1)=1/(2pi)");
}

// ---- 2 -------------------------------------------------------------------

void step_suite(Outcome& o) {
    for (double eps : {1.0, 0.2, 0.05})
        for (double t : {0.1, 1.0, 1.5707963267948966}) {
            StepKernel k = step_kernel(eps, t, Grid1D(-40.0, 40.0, 4001));
            double expect = std::exp(-2.0 * t / (3.14159265358979323846 * eps));
            if (k.atom_weight != expect) o.expect(false, "atom weight eps=" + sci(eps));
            double mass = k.atom_weight + integrate(k.ac_part);
            if (std::abs(mass - 1.0) > 1e-4) o.expect(false, "mass eps=" + sci(eps) + " t=" + sci(t) + " " + sci(mass));
        }
    o.expect(true, "atom weight exact and atom + ac mass within 1e-4");

    // Conjugate pair on dx = 0.02, eps = 0.2, dt = 1e-3, interior |x| <= 10.
    const double eps = 0.2, dt = 1e-3, T = 1.0, t = 0.5;
    Grid1D grid(-40.0, 40.0, 4001);
    GridFn star0 = cauchy_cells(grid, 0.0, 1.0);
    auto evolve_star = [&](double tau) {
        auto op = step_operator(grid, eps, tau);
        return op->push_density(star0);
    };
    GridFn gT(grid);
    for (std::size_t i = 0; i < grid.n(); ++i) gT.values[i] = 1.0 + std::exp(-0.5 * grid.x(i) * grid.x(i));
    auto evolve_theta = [&](double time) {
        auto op = step_operator(grid, eps, T - time);
        return GridFn(grid, op->pull(gT.values));
    };
    GridFn sp = evolve_star(t + dt), sm = evolve_star(t - dt), s0 = evolve_star(t);
    GridFn tp = evolve_theta(t + dt), tm = evolve_theta(t - dt), t0 = evolve_theta(t);
    GridFn ns = nabla_eps_apply(eps, s0), nt = nabla_eps_apply(eps, t0);
    double rs = 0.0, rt = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) {
        if (std::abs(grid.x(i)) > 10.0) continue;
        double ds = (sp.values[i] - sm.values[i]) / (2.0 * dt);
        double dtheta = (tp.values[i] - tm.values[i]) / (2.0 * dt);
        rs = std::max(rs, std::abs(ds + ns.values[i]));
        rt = std::max(rt, std::abs(dtheta - nt.values[i]));
    }
    o.expect(rs <= 1e-3 && rt <= 1e-3, "PDE residuals theta_* " + sci(rs) + ", theta " + sci(rt));
}

// ---- 3 -------------------------------------------------------------------

void char_fn_suite(Outcome& o) {
    double prev = INFINITY;
    for (double eps : {1.0, 0.3, 0.1, 0.03, 0.01}) {
        double sup = 0.0;
        for (int ip = 0; ip <= 200; ++ip) {
            double p = -5.0 + 0.05 * ip;
            for (int it = 0; it <= 100; ++it) {
                double t = 0.01 * it;
                sup = std::max(sup, std::abs(char_fn_step(eps, p, t) - char_fn_cauchy(p, t)));
            }
        }
        double bound = 25.0 * eps / 3.14159265358979323846;
        o.expect(sup <= bound && sup <= prev, "eps=" + sci(eps) + " sup " + sci(sup) + " bound " + sci(bound));
        prev = sup;
    }
}

// ---- 4 -------------------------------------------------------------------

void solver_suite(Outcome& o) {
    Grid1D grid(-40.0, 40.0, 4001);
    BoundaryData fb = free_preset(grid, 1.0);
    SchroedingerSolution fs = solve_system(fb, KernelSpec::cauchy());
    auto [gmin, gmax] = std::minmax_element(fs.g.values.begin(), fs.g.values.end());
    double var = (*gmax - *gmin) / *gmax;
    o.expect(var <= 1e-8, "free g relative variation " + sci(var));
    double sup = 0.0;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        GridFn r = interpolating_density(fs, t);
        for (std::size_t i = 0; i < grid.n(); ++i)
            sup = std::max(sup, std::abs(r.values[i] - cauchy_pdf(grid.x(i), 0.0, 1.0 + t)));
    }
    o.expect(sup <= 1e-4, "free rho vs Cauchy(0,1+t) sup " + sci(sup));

    BoundaryData bb = bimodal_preset(grid, 1.0);
    SolveOptions opts;
    opts.max_iter = 200;
    SchroedingerSolution bs = solve_system(bb, KernelSpec::cauchy(), opts);
    double fit = marginal_residual(bs, bb);
    o.expect(fit <= 1e-6 && bs.iterations <= 200,
             "bimodal L1 fit " + sci(fit) + " in " + std::to_string(bs.iterations) + " iterations");

    SchroedingerSolution rs = rescale_gauge(bs, 3.7);
    double gauge = 0.0;
    for (double t : {0.3, 0.7}) {
        GridFn a = interpolating_density(bs, t), b = interpolating_density(rs, t);
        for (std::size_t i = 0; i < grid.n(); ++i) gauge = std::max(gauge, std::abs(a.values[i] - b.values[i]));
    }
    for (auto pr : {Probe{0.0, 0.2, 1.0, 0.8}, Probe{-1.0, 0.0, 2.5, 1.0}, Probe{2.0, 0.5, -3.0, 0.6}})
        gauge = std::max(gauge, std::abs(transition_density(bs, pr.y, pr.s, pr.x, pr.t) -
                                         transition_density(rs, pr.y, pr.s, pr.x, pr.t)));
    o.expect(gauge <= 1e-12, "gauge invariance " + sci(gauge));
}

// ---- 5 -------------------------------------------------------------------

void bridge_suite(Outcome& o) {
    const double pi = 3.14159265358979323846;
    double direct = 0.0;
    for (int k = 0; k <= 400; ++k) {
        double x = -10.0 + 0.05 * k;
        double ref = (2.0 / pi) / ((1.0 + x * x) * (1.0 + x * x));
        direct = std::max(direct, std::abs(bridge_density(0.0, 0.0, 0.0, 2.0, x, 1.0) - ref));
    }
    o.expect(direct <= 1e-6, "direct evaluation sup " + sci(direct));
    Grid1D grid(-40.0, 40.0, 4001);
    BoundaryData b = pinned_preset(grid, 2.0, 0.0, 0.0, 0.01);
    SchroedingerSolution s = solve_system(b, KernelSpec::cauchy());
    GridFn r = interpolating_density(s, 1.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.n(); ++i) {
        double x = grid.x(i);
        sup = std::max(sup, std::abs(r.values[i] - (2.0 / pi) / ((1.0 + x * x) * (1.0 + x * x))));
    }
    o.expect(sup <= 5e-2, "solver with 0.01 spikes sup " + sci(sup));
}

// ---- 6 -------------------------------------------------------------------

void conditioned_suite(Outcome& o) {
    Grid1D grid(-40.0, 40.0, 4001);
    BoundaryData b = bimodal_preset(grid, 1.0);
    SchroedingerSolution s = solve_system(b, KernelSpec::step(0.2));
    std::vector<double> res;
    for (double ds : {0.02, 0.01, 0.005}) res.push_back(kolmogorov_residual(s, 0.5, 0.4, 0.9, ds).value());
    o.expect(res[0] <= 1e-3, "Kolmogorov residual ds=0.02: " + sci(res[0]));
    double r1 = res[0] / res[1], r2 = res[1] / res[2];
    o.expect(r1 >= 3.0 && r1 <= 5.0 && r2 >= 3.0 && r2 <= 5.0, "halving ratios " + sci(r1) + ", " + sci(r2));
    double mass_err = 0.0;
    for (auto [y, s0, t] : {std::tuple{0.5, 0.4, 0.9}, std::tuple{-2.0, 0.0, 1.0}, std::tuple{3.0, 0.3, 0.5}})
        mass_err = std::max(mass_err, std::abs(transition_mass(s, y, s0, t) - 1.0));
    o.expect(mass_err <= 1e-4, "transition mass error " + sci(mass_err));

    Grid1D g2(-30.0, 30.0, 3001);
    SchroedingerSolution s2 = solve_system(bimodal_preset(g2, 1.0), KernelSpec::step(0.2));
    OccupationResult occ = conditioned_occupation(s2, 0.5, 100000, kSeedOcc, -10.0, 10.0, 100);
    o.expect(occ.l1 <= 0.05, "occupation L1 " + sci(occ.l1));
}

// ---- 7 -------------------------------------------------------------------

void convergence_suite(Outcome& o) {
    Grid1D grid(-150.0, 150.0, 12001);
    ConvergenceSetup setup;
    setup.boundary = bimodal_preset(grid, 2.0);
    for (int k = 0; k <= 200; ++k) setup.p_grid.push_back(-5.0 + 0.05 * k);
    for (int k = 0; k <= 10; ++k) setup.t_grid.push_back(0.2 * k);
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) setup.probes.push_back(Probe{0.0, 0.0, x, 2.0});
    auto rows = convergence_report({1.0, 0.3, 0.1, 0.03}, setup);
    const auto& last = rows.back();
    o.expect(last.rho_l1_sup < 1e-2 && last.p_max_err < 1e-2,
             "eps=0.03 rho L1 " + sci(last.rho_l1_sup) + ", p " + sci(last.p_max_err));
    o.expect(report_monotone(rows, 0.1), "columns monotone with 10% slack");
}

// ---- 8 -------------------------------------------------------------------

void fk_suite(Outcome& o) {
    const double eps = 0.05, t = 1.0;
    const std::vector<double> edges{-2.0, -1.0, -0.5, -0.25, -0.125, 0.0, 0.125, 0.25, 0.5, 1.0, 2.0};
    Grid1D grid(-40.0, 40.0, 8001);

    // V = 0 against the free step kernel (series of convolutions).
    FKKernelEstimate zero = fk_kernel_mc(eps, 0.0, t, Potential::constant(0.0), edges, 1000000, kSeedFk);
    StepKernel k = step_kernel(eps, t, grid);
    int bad = 0;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        double ref = integrate_range(k.ac_part, edges[b], edges[b + 1]);
        if (edges[b] <= 0.0 && 0.0 < edges[b + 1]) ref += k.atom_weight;
        if (std::abs(zero.weights_mean[b] - ref) > 3.0 * zero.weights_stderr[b]) ++bad;
    }
    o.expect(bad == 0, "V=0 bins outside 3 sigma: " + std::to_string(bad));

    // V = c: total mass and per-path weights.
    const double c = 0.7;
    FKKernelEstimate cst = fk_kernel_mc(eps, 0.0, t, Potential::constant(c), edges, 100000, kSeedConst);
    double expect = std::exp(-c * t);
    o.expect(std::abs(cst.total_mean - expect) <= 3.0 * cst.total_stderr + 1e-12 * expect,
             "V=c total " + sci(cst.total_mean));
    double wdev = std::max(std::abs(cst.min_weight - expect), std::abs(cst.max_weight - expect));
    RandomStream rng(kSeedConst, 0);
    for (int i = 0; i < 100; ++i) {
        StepPath p = sample_free_path(eps, 0.0, 0.0, t, rng);
        wdev = std::max(wdev, std::abs(path_fk_weight(p, Potential::constant(c)) - expect));
    }
    o.expect(wdev <= 1e-14, "per-path weight deviation " + sci(wdev));

    Potential box = Potential::box(-1.0, 1.0, 1.0);
    // symmetry
    Grid1D fg(-2.0, 0.0, 201), gg(-0.5, 1.5, 201);
    GridFn f(fg), g(gg);
    for (std::size_t i = 0; i < 201; ++i) {
        double u = static_cast<double>(i) / 200.0;
        f.values[i] = 1.0 - std::abs(2.0 * u - 1.0);
        g.values[i] = 0.5 + 0.5 * std::sin(3.14159265358979323846 * u);
    }
    SymmetryResult sym = fk_symmetry_check(eps, t, box, f, g, 400000, kSeedSym);
    o.expect(std::abs(sym.lhs - sym.rhs) <= 3.0 * sym.stderr_,
             "symmetry |lhs-rhs| " + sci(std::abs(sym.lhs - sym.rhs)) + " vs 3 sigma " + sci(3.0 * sym.stderr_));

    auto lb = fk_lower_bound_check(eps, 0.0, edges, t, box, 10.0, 200000, kSeedLower);
    bool lb_ok = std::all_of(lb.begin(), lb.end(), [](const LowerBoundRow& r) { return r.pass; });
    o.expect(lb_ok, "lower bound floor in every bin");

    FKKernelEstimate mc = fk_kernel_mc(eps, 0.0, t, box, edges, 400000, kSeedCross);
    auto cross = fk_cross_check(mc, box, Grid1D(-40.0, 40.0, 4001), 1.0 / 128.0);
    int cbad = 0;
    for (const auto& r : cross) cbad += r.pass ? 0 : 1;
    o.expect(cbad == 0, "grid vs MC bins outside 3 sigma + bias: " + std::to_string(cbad));
}

// ---- 9 -------------------------------------------------------------------

void maximal_suite(Outcome& o) {
    auto rows = maximal_inequality_check({3.0, 10.0, 30.0, 100.0}, 1.0, 1e-3, 100000, kSeedMax);
    for (const auto& r : rows)
        o.expect(r.pass, "n=" + sci(r.n) + " tail " + sci(r.empirical) + " bound " + sci(r.bound));
}

// ---- 10 ------------------------------------------------------------------

std::vector<std::string> data_rows(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') rows.push_back(line);
    return rows;
}

void determinism_suite(Outcome& o) {
#ifdef LB_CLI_PATH
    const std::string cli = LB_CLI_PATH;
    const std::string seed = " --seed " + std::to_string(kSeedCli);
    const std::vector<std::string> commands{
        "kernel --eps 0.1,1 --t 1 --check-mass",
        "bridge --preset bimodal --x-min -30 --x-max 30 --n 1501",
        "simulate --free --eps 0.1 --paths 20000",
        "simulate --conditioned --eps 0.3 --x-min -30 --x-max 30 --n 1501 --paths 20000",
        "simulate --maximal --eps 0.01 --paths 20000",
        "converge --eps 1,0.3 --x-min -30 --x-max 30 --n 1501",
        "fk --potential box:-1,1,1 --eps 0.1 --paths 20000 --symmetry --lower-bound --cross-check "
        "--x-min -30 --x-max 30 --n 1501",
    };
    fs::path root = fs::temp_directory_path() / ("levybridge_determinism_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const char* threads[2] = {"1", "3"};
    for (std::size_t c = 0; c < commands.size(); ++c) {
        fs::path dirs[2] = {root / ("a" + std::to_string(c)), root / ("b" + std::to_string(c))};
        bool ran = true;
        for (int r = 0; r < 2; ++r) {
            std::string cmd = "LEVY_BRIDGE_THREADS=" + std::string(threads[r]) + " " + cli + " " + commands[c] +
                              seed + " --quiet --out " + dirs[r].string() + " > /dev/null 2>&1";
            int rc = std::system(cmd.c_str());
            if (rc != 0) ran = false;
        }
        if (!ran) {
            o.expect(false, "command failed: " + commands[c]);
            continue;
        }
        std::size_t files = 0;
        bool same = true;
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            ++files;
            fs::path other = dirs[1] / e.path().filename();
            if (!fs::exists(other) || data_rows(e.path()) != data_rows(other)) same = false;
        }
        if (!same || files == 0) o.expect(false, "rows differ: " + commands[c]);
    }
    fs::remove_all(root);
    o.expect(true, std::to_string(commands.size()) + " commands re-run with 1 and 3 workers");
#else
    o.expect(false, "CLI path not configured");
#endif
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> all{
        {1, "Cauchy kernel suite", 10, cauchy_suite},
        {2, "step kernel suite", 60, step_suite},
        {3, "characteristic function convergence", 10, char_fn_suite},
        {4, "Schroedinger solver", 120, solver_suite},
        {5, "Cauchy bridge", 120, bridge_suite},
        {6, "conditioned step process", 300, conditioned_suite},
        {7, "eps -> 0 convergence", 300, convergence_suite},
        {8, "Feynman-Kac suite", 600, fk_suite},
        {9, "maximal inequality", 300, maximal_suite},
        {10, "CLI determinism", 600, determinism_suite},
    };
    int failed = 0;
    for (const auto& c : all) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.expect(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.expect(secs < c.limit_s, "runtime limit " + sci(c.limit_s) + " s");
        if (!o.pass) ++failed;
        std::printf("%s criterion %d (%s) [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
