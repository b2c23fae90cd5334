// levybridge command-line driver. Talks to the library only through the C API.

#include "levybridge/levybridge.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Exit codes: 0 all checks passed, 1 a check failed, 2 bad input or library error.
struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void die(const std::string& msg) { throw Failure{2, msg}; }

void check(lb_status s, const char* what) {
    if (s == LB_OK) return;
    std::string msg = std::string(what) + ": " + lb_status_name(s) + ": " + lb_last_error();
    if (s == LB_ERR_NOT_CONVERGED) msg += " (residual " + std::to_string(lb_last_error_value()) + ")";
    die(msg);
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using PotentialPtr = std::unique_ptr<lb_potential, Deleter<lb_potential, lb_potential_free>>;
using KernelPtr = std::unique_ptr<lb_kernel, Deleter<lb_kernel, lb_kernel_free>>;
using BoundaryPtr = std::unique_ptr<lb_boundary, Deleter<lb_boundary, lb_boundary_free>>;
using SolutionPtr = std::unique_ptr<lb_solution, Deleter<lb_solution, lb_solution_free>>;
using PathPtr = std::unique_ptr<lb_path, Deleter<lb_path, lb_path_free>>;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

// ---------------------------------------------------------------- config

struct Config {
    lb_grid grid{-40.0, 40.0, 4001};
    double T = 1.0;
    std::vector<double> eps{0.1};
    std::string boundary = "bimodal";
    std::vector<double> boundary_params;  // pinned: y0, zT, scale (CLI default scale 1e-4)
    std::string potential;  // empty: none
    std::size_t n_paths = 100000;
    std::uint64_t seed = 12345;
    double tol_mass = 1e-4;
    double tol_fit = 1e-8;
    double tol_series = 1e-12;
    std::string output_dir = ".";
};

template <class T>
T field(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        die("config " + path + ": wrong type");
    }
}

void load_config(const std::string& file, Config& c) {
    std::ifstream in(file);
    if (!in) die("config: cannot open '" + file + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        die("config: " + std::string(e.what()));
    }
    if (!j.is_object()) die("config: top level must be an object");
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (g.contains("x_min")) c.grid.x_min = field<double>(g["x_min"], "grid.x_min");
        if (g.contains("x_max")) c.grid.x_max = field<double>(g["x_max"], "grid.x_max");
        if (g.contains("n")) c.grid.n = field<std::size_t>(g["n"], "grid.n");
    }
    if (j.contains("horizon_T")) c.T = field<double>(j["horizon_T"], "horizon_T");
    if (j.contains("epsilon_list")) c.eps = field<std::vector<double>>(j["epsilon_list"], "epsilon_list");
    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        if (b.contains("preset")) c.boundary = field<std::string>(b["preset"], "boundary.preset");
        if (b.contains("params")) c.boundary_params = field<std::vector<double>>(b["params"], "boundary.params");
    }
    if (j.contains("potential") && !j["potential"].is_null()) {
        const json& p = j["potential"];
        if (p.is_string()) {
            c.potential = p.get<std::string>();
        } else {
            std::string name = field<std::string>(p.value("preset", json()), "potential.preset");
            std::string spec = name + ":";
            auto params = field<std::vector<double>>(p.value("params", json::array()), "potential.params");
            for (std::size_t i = 0; i < params.size(); ++i) spec += (i ? "," : "") + num(params[i]);
            c.potential = spec;
        }
    }
    if (j.contains("mc")) {
        const json& m = j["mc"];
        if (m.contains("n_paths")) c.n_paths = field<std::size_t>(m["n_paths"], "mc.n_paths");
        if (m.contains("seed")) c.seed = field<std::uint64_t>(m["seed"], "mc.seed");
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (t.contains("tol_mass")) c.tol_mass = field<double>(t["tol_mass"], "tolerances.tol_mass");
        if (t.contains("tol_fit")) c.tol_fit = field<double>(t["tol_fit"], "tolerances.tol_fit");
        if (t.contains("tol_series")) c.tol_series = field<double>(t["tol_series"], "tolerances.tol_series");
    }
    if (j.contains("output_dir")) c.output_dir = field<std::string>(j["output_dir"], "output_dir");
}

void validate(const Config& c) {
    if (!(c.grid.x_max > c.grid.x_min)) die("config grid.x_max: must exceed grid.x_min");
    if (c.grid.n < 3) die("config grid.n: need at least 3 nodes");
    if (!(c.T > 0.0)) die("config horizon_T: must be positive");
    if (c.eps.empty()) die("config epsilon_list: must not be empty");
    for (std::size_t i = 0; i < c.eps.size(); ++i)
        if (!(c.eps[i] > 0.0)) die("config epsilon_list[" + std::to_string(i) + "]: must be positive");
    if (c.n_paths < 2) die("config mc.n_paths: need at least 2");
    if (!(c.tol_mass > 0.0)) die("config tolerances.tol_mass: must be positive");
    if (!(c.tol_fit > 0.0)) die("config tolerances.tol_fit: must be positive");
    if (!(c.tol_series > 0.0 && c.tol_series < 1.0)) die("config tolerances.tol_series: must lie in (0,1)");
}

// ---------------------------------------------------------------- output

struct Output {
    fs::path dir;
    std::string command;
    bool quiet = false;
    std::string stamp;

    fs::path path(const std::string& label, const std::string& ext) const {
        return dir / (command + "_" + label + "." + ext);
    }

    void write(const fs::path& p, const std::string& body, bool csv) const {
        if (fs::exists(p)) std::cerr << "warning: overwriting " << p.string() << '\n';
        std::ofstream out(p, std::ios::binary);
        if (!out) die("cannot write " + p.string());
        if (csv) out << "# levybridge " << command << ' ' << stamp << '\n';
        out << body;
        if (!out) die("write failed for " + p.string());
        if (!quiet) std::cout << "wrote " << p.string() << '\n';
    }
    void csv(const std::string& label, const std::string& body) const { write(path(label, "csv"), body, true); }
    void json_file(const std::string& label, const std::string& body) const { write(path(label, "json"), body, false); }
};

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Checks {
    bool quiet = false;
    int failed = 0;
    void report(const std::string& name, bool ok, const std::string& detail) {
        if (!ok) ++failed;
        if (!quiet || !ok) std::cout << (ok ? "check ok   " : "check FAIL ") << name << ": " << detail << '\n';
    }
};

// ---------------------------------------------------------------- helpers

PotentialPtr make_potential(const std::string& spec) {
    lb_potential* p = nullptr;
    check(lb_potential_parse(spec.c_str(), &p), "potential");
    return PotentialPtr(p);
}

KernelPtr make_kernel(std::optional<double> eps, const std::string& potential, double tol_series, double dt) {
    lb_kernel* k = nullptr;
    if (eps)
        check(lb_kernel_step(*eps, tol_series, &k), "kernel");
    else
        check(lb_kernel_cauchy(&k), "kernel");
    KernelPtr base(k);
    if (potential.empty()) return base;
    auto v = make_potential(potential);
    lb_kernel* pk = nullptr;
    check(lb_kernel_perturbed(base.get(), v.get(), dt, &pk), "kernel");
    return KernelPtr(pk);
}

BoundaryPtr make_boundary(const Config& c, const lb_kernel* k) {
    lb_boundary* b = nullptr;
    std::vector<double> params = c.boundary_params;
    if (c.boundary == "pinned") {
        params.resize(std::max<std::size_t>(params.size(), 2), 0.0);
        if (params.size() == 2) params.push_back(1e-4);
    }
    check(lb_boundary_preset(c.boundary.c_str(), &c.grid, c.T, k, params.data(), params.size(), &b),
          "boundary");
    return BoundaryPtr(b);
}

SolutionPtr solve(const lb_boundary* b, const lb_kernel* k, const Config& c, int max_iter) {
    lb_solve_options o = lb_default_solve_options();
    o.tol_fit = c.tol_fit;
    o.tol_mass = c.tol_mass;
    o.max_iter = max_iter;
    lb_solution* s = nullptr;
    check(lb_solve(b, k, &o, &s), "solver");
    return SolutionPtr(s);
}

std::string solution_json(const lb_solution* s) {
    std::size_t need = 0;
    lb_solution_to_json(s, nullptr, 0, &need);
    std::string buf(need + 1, '\0');
    check(lb_solution_to_json(s, buf.data(), buf.size(), &need), "solution json");
    buf.resize(need);
    return buf + "\n";
}

std::string path_csv(const lb_path* p) {
    std::size_t need = 0;
    lb_path_csv(p, nullptr, 0, &need);
    std::string buf(need + 1, '\0');
    check(lb_path_csv(p, buf.data(), buf.size(), &need), "path csv");
    buf.resize(need);
    return buf;
}

// Appends sample paths as path,time,state rows.
void append_paths(std::ostringstream& os, const std::vector<PathPtr>& paths) {
    os << "path,time,state\n";
    for (std::size_t k = 0; k < paths.size(); ++k) {
        std::istringstream in(path_csv(paths[k].get()));
        std::string line;
        std::getline(in, line);  // own header
        while (std::getline(in, line))
            if (!line.empty()) os << k << ',' << line << '\n';
    }
}

bool is_constant(const std::string& spec, double& c) {
    if (spec.rfind("const:", 0) != 0) return false;
    try {
        c = std::stod(spec.substr(6));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

// ---------------------------------------------------------------- commands

struct KernelArgs {
    bool exact = false;
    std::vector<double> eps;
    std::vector<double> t{1.0};
    double y = 0.0;
    bool check_mass = false;
    std::string label;
};

void cmd_kernel(const Config& c, const KernelArgs& a, const Output& out, Checks& checks) {
    std::vector<std::optional<double>> kinds;
    if (a.exact || a.eps.empty()) kinds.emplace_back();
    for (double e : a.eps) kinds.emplace_back(e);
    std::vector<double> x(c.grid.n), row(c.grid.n);
    for (std::size_t i = 0; i < c.grid.n; ++i)
        x[i] = c.grid.x_min + (c.grid.x_max - c.grid.x_min) * static_cast<double>(i) / static_cast<double>(c.grid.n - 1);
    for (const auto& eps : kinds) {
        auto k = make_kernel(eps, "", c.tol_series, 0.0);
        for (double t : a.t) {
            std::string label = a.label.empty() ? (eps ? "eps" + short_num(*eps) : std::string("exact")) + "_t" +
                                                      short_num(t)
                                                : a.label + (kinds.size() * a.t.size() > 1
                                                                 ? "_" + (eps ? short_num(*eps) : "exact") + "_" +
                                                                       short_num(t)
                                                                 : "");
            double atom = 0.0, atom_at = 0.0, lo = 0.0, hi = 0.0, mass = 0.0;
            check(lb_kernel_row(k.get(), &c.grid, a.y, t, row.data(), &atom, &atom_at, &lo, &hi), "kernel row");
            check(lb_kernel_row_mass(k.get(), &c.grid, a.y, t, &mass), "kernel mass");
            std::ostringstream os;
            os << "x,value\n";
            for (std::size_t i = 0; i < x.size(); ++i) os << num(x[i]) << ',' << num(row[i]) << '\n';
            out.csv(label, os.str());
            json j = {{"kind", eps ? "truncated_step" : "exact_cauchy"},
                      {"t", t},
                      {"y", a.y},
                      {"atom_weight", atom},
                      {"atom_at", atom_at},
                      {"tail_lo", lo},
                      {"tail_hi", hi},
                      {"mass", mass}};
            if (eps) j["epsilon"] = *eps;
            if (eps) {
                double expect = 0.0;
                check(lb_step_atom_weight(*eps, t, &expect), "atom weight");
                j["atom_weight_closed_form"] = expect;
            }
            out.json_file(label, j.dump(1) + "\n");
            if (a.check_mass)
                checks.report(label + " mass", std::abs(mass - 1.0) <= c.tol_mass,
                              "mass " + num(mass) + ", tol " + short_num(c.tol_mass));
        }
    }
}

struct BridgeArgs {
    std::optional<double> eps;
    std::vector<double> times;
    int max_iter = 1000;
    double dt = 1.0 / 64.0;
    double pinned_tol = 1e-3;
    std::string label;
};

void cmd_bridge(const Config& c, const BridgeArgs& a, const Output& out, Checks& checks) {
    auto k = make_kernel(a.eps, c.potential, c.tol_series, a.dt);
    auto b = make_boundary(c, k.get());
    auto s = solve(b.get(), k.get(), c, a.max_iter);
    std::string label = a.label.empty() ? c.boundary : a.label;
    out.json_file(label, solution_json(s.get()));

    std::vector<double> times = a.times.empty() ? linspace(0.0, c.T, 11) : a.times;
    const std::size_t n = c.grid.n;
    std::vector<std::vector<double>> cols;
    for (double t : times) {
        std::vector<double> v(n);
        check(lb_solution_density(s.get(), t, v.data(), nullptr, nullptr), "density");
        cols.push_back(std::move(v));
    }
    auto x = linspace(c.grid.x_min, c.grid.x_max, n);
    std::ostringstream os;
    os << "x";
    for (double t : times) os << ",rho_t" << short_num(t);
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        os << num(x[i]);
        for (const auto& col : cols) os << ',' << num(col[i]);
        os << '\n';
    }
    out.csv(label + "_density", os.str());

    std::size_t len = 0;
    lb_solution_residual_history(s.get(), nullptr, 0, &len);
    std::vector<double> hist(len);
    check(lb_solution_residual_history(s.get(), hist.data(), hist.size(), &len), "residual history");
    std::ostringstream rs;
    rs << "iteration,residual\n";
    for (std::size_t i = 0; i < len; ++i) rs << i + 1 << ',' << num(hist[i]) << '\n';
    out.csv(label + "_residual", rs.str());

    double residual = 0.0;
    int iterations = 0;
    check(lb_solution_residual(s.get(), &residual, &iterations), "residual");
    checks.report("residual", residual <= c.tol_fit,
                  num(residual) + " after " + std::to_string(iterations) + " iterations");

    if (c.boundary == "free" && c.potential.empty()) {
        std::vector<double> g(n);
        check(lb_solution_g(s.get(), g.data()), "g");
        double lo = g[0], hi = g[0];
        for (double v : g) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double variation = (hi - lo) / hi;
        checks.report("g constant", variation <= 1e-8, "relative variation " + num(variation));
    }
    if (c.boundary == "pinned" && c.potential.empty() && !a.eps) {
        double y0 = c.boundary_params.size() > 0 ? c.boundary_params[0] : 0.0;
        double zT = c.boundary_params.size() > 1 ? c.boundary_params[1] : 0.0;
        double xm = 0.5 * (y0 + zT), tm = 0.5 * c.T;
        std::vector<double> v(n);
        check(lb_solution_density(s.get(), tm, v.data(), nullptr, nullptr), "density");
        std::size_t im = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(x[i] - xm) < std::abs(x[im] - xm)) im = i;
        double expect = 0.0;
        check(lb_bridge_density(y0, 0.0, zT, c.T, x[im], tm, &expect), "bridge density");
        checks.report("pinned midpoint", std::abs(v[im] - expect) <= a.pinned_tol,
                      "rho " + num(v[im]) + " vs bridge " + num(expect) + " at x=" + num(x[im]));
    }
}

struct SimulateArgs {
    bool free = false, conditioned = false, converge = false, maximal = false;
    std::optional<double> t;
    std::optional<double> t_eval;
    std::size_t sample_paths = 5;
    std::size_t bins = 100;
    double hist_lo = -10.0, hist_hi = 10.0;
    std::size_t time_steps = 200;
    std::vector<double> levels{3.0, 10.0, 30.0, 100.0};
    std::string label;
};

void simulate_free(const Config& c, const SimulateArgs& a, const Output& out, Checks& checks) {
    double eps = c.eps.front();
    double t = a.t.value_or(c.T);
    std::string label = (a.label.empty() ? "free" : a.label) + "_eps" + short_num(eps);
    std::vector<double> p = linspace(-5.0, 5.0, 11);
    lb_free_stats st{};
    std::vector<double> cf(p.size()), se(p.size());
    check(lb_free_path_stats(eps, t, c.n_paths, c.seed, p.data(), p.size(), &st, cf.data(), se.data()), "free paths");
    double rate = 2.0 * t / (kPi * eps);
    double sigma = std::sqrt(rate / static_cast<double>(c.n_paths));
    std::ostringstream os;
    os << "quantity,value\n"
       << "n_paths," << c.n_paths << '\n'
       << "mean_jumps," << num(st.mean_jumps) << '\n'
       << "expected_jumps," << num(rate) << '\n'
       << "var_jumps," << num(st.var_jumps) << '\n'
       << "zero_fraction," << num(st.zero_fraction) << '\n'
       << "atom_weight," << num(std::exp(-rate)) << '\n';
    out.csv(label + "_stats", os.str());
    std::ostringstream cs;
    cs << "p,cf_mean,cf_stderr,cf_exact\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        double exact = 0.0;
        check(lb_char_fn_step(eps, p[i], t, &exact), "char fn");
        cs << num(p[i]) << ',' << num(cf[i]) << ',' << num(se[i]) << ',' << num(exact) << '\n';
    }
    out.csv(label + "_cf", cs.str());
    std::vector<PathPtr> paths;
    for (std::size_t k = 0; k < a.sample_paths; ++k) {
        lb_path* pp = nullptr;
        check(lb_sample_free_path(eps, 0.0, 0.0, t, c.seed, k, &pp), "sample path");
        paths.emplace_back(pp);
    }
    std::ostringstream ps;
    append_paths(ps, paths);
    out.csv(label + "_paths", ps.str());
    checks.report("jump count mean", std::abs(st.mean_jumps - rate) <= 3.0 * sigma,
                  num(st.mean_jumps) + " vs " + num(rate) + " (3 sigma " + num(3.0 * sigma) + ")");
}

void simulate_conditioned(const Config& c, const SimulateArgs& a, const Output& out, Checks& checks) {
    double eps = c.eps.front();
    std::string label = (a.label.empty() ? "conditioned" : a.label) + "_eps" + short_num(eps);
    auto k = make_kernel(eps, "", c.tol_series, 0.0);
    auto b = make_boundary(c, k.get());
    auto s = solve(b.get(), k.get(), c, 1000);
    double t_eval = a.t_eval.value_or(0.5 * c.T);
    double l1 = 0.0;
    std::vector<double> freq(a.bins), expected(a.bins);
    check(lb_conditioned_occupation(s.get(), t_eval, c.n_paths, c.seed, a.hist_lo, a.hist_hi, a.bins, a.time_steps,
                                    &l1, freq.data(), expected.data()),
          "occupation");
    std::ostringstream os;
    os << "bin_lo,bin_hi,frequency,expected\n";
    double w = (a.hist_hi - a.hist_lo) / static_cast<double>(a.bins);
    for (std::size_t i = 0; i < a.bins; ++i)
        os << num(a.hist_lo + w * static_cast<double>(i)) << ',' << num(a.hist_lo + w * static_cast<double>(i + 1))
           << ',' << num(freq[i]) << ',' << num(expected[i]) << '\n';
    out.csv(label + "_histogram", os.str());
    std::vector<PathPtr> paths;
    for (std::size_t j = 0; j < a.sample_paths; ++j) {
        lb_path* pp = nullptr;
        double x0 = -2.0 + 4.0 * static_cast<double>(j) / static_cast<double>(std::max<std::size_t>(a.sample_paths, 2) - 1);
        check(lb_sample_conditioned_path(s.get(), x0, 0.0, c.T, a.time_steps, c.seed, j, &pp), "conditioned path");
        paths.emplace_back(pp);
    }
    std::ostringstream ps;
    append_paths(ps, paths);
    out.csv(label + "_paths", ps.str());
    checks.report("occupation L1", l1 <= 0.05, num(l1) + " at t=" + num(t_eval) + " (limit 0.05)");
}

void run_converge(const Config& c, const std::string& label_in, const Output& out, Checks& checks) {
    std::string label = label_in.empty() ? "converge" : label_in;
    auto k = make_kernel(std::nullopt, "", c.tol_series, 0.0);
    auto b = make_boundary(c, k.get());
    auto p = linspace(-5.0, 5.0, 201);
    auto t = linspace(0.0, c.T, 11);
    std::vector<lb_probe> probes;
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) probes.push_back(lb_probe{0.0, 0.0, x, c.T});
    lb_solve_options o = lb_default_solve_options();
    o.tol_fit = c.tol_fit;
    o.tol_mass = c.tol_mass;
    std::vector<lb_convergence_row> rows(c.eps.size());
    int monotone = 0;
    check(lb_convergence_report(b.get(), c.eps.data(), c.eps.size(), p.data(), p.size(), t.data(), t.size(),
                                probes.data(), probes.size(), &o, rows.data(), &monotone),
          "convergence");
    std::ostringstream os;
    os << "eps,cf_sup_err,cf_bound,rho_l1_sup,p_max_err,iterations\n";
    bool cf_ok = true;
    for (const auto& r : rows) {
        double bound = 25.0 * r.eps / kPi;
        cf_ok = cf_ok && r.cf_sup_err <= bound;
        os << num(r.eps) << ',' << num(r.cf_sup_err) << ',' << num(bound) << ',' << num(r.rho_l1_sup) << ','
           << num(r.p_max_err) << ',' << r.iterations << '\n';
    }
    out.csv(label, os.str());
    checks.report("columns monotone", monotone != 0, "10% slack across the eps ladder");
    checks.report("char fn bound", cf_ok, "sup |Phi_eps - psi| <= p_max^2 eps / pi");
}

void simulate_maximal(const Config& c, const SimulateArgs& a, const Output& out, Checks& checks) {
    double eps = c.eps.front();
    double t = a.t.value_or(c.T);
    std::vector<lb_maximal_row> rows(a.levels.size());
    check(lb_maximal_check(a.levels.data(), a.levels.size(), t, eps, c.n_paths, c.seed, rows.data()), "maximal");
    std::ostringstream os;
    os << "n,empirical,stderr,bound,pass\n";
    bool ok = true;
    for (const auto& r : rows) {
        ok = ok && r.pass;
        os << num(r.n) << ',' << num(r.empirical) << ',' << num(r.stderr_) << ',' << num(r.bound) << ',' << r.pass
           << '\n';
    }
    out.csv((a.label.empty() ? "maximal" : a.label), os.str());
    checks.report("maximal inequality", ok, "empirical sup tail <= bound + 3 sigma at every level");
}

struct FkArgs {
    double x = 0.0;
    std::optional<double> t;
    std::vector<double> edges{-2.0, -1.0, -0.5, -0.25, -0.125, 0.0, 0.125, 0.25, 0.5, 1.0, 2.0};
    bool lower_bound = false, symmetry = false, cross_check = false, bridge = false;
    double window = 10.0;
    double dt = 1.0 / 128.0;
    std::string label;
};

void cmd_fk(const Config& c, const FkArgs& a, const Output& out, Checks& checks) {
    if (c.potential.empty()) die("fk: a potential preset is required (--potential or config potential)");
    auto v = make_potential(c.potential);
    double eps = c.eps.front();
    double t = a.t.value_or(c.T);
    const std::size_t nb = a.edges.size() - 1;
    std::string label = a.label.empty() ? "eps" + short_num(eps) : a.label;
    double cval = 0.0;
    bool constant = is_constant(c.potential, cval);

    std::vector<double> mean(nb), se(nb);
    lb_fk_summary sum{};
    std::vector<lb_cross_check_row> cross;
    bool do_cross = a.cross_check || (constant && cval == 0.0);
    if (do_cross) {
        cross.resize(nb);
        check(lb_fk_cross_check(eps, a.x, t, v.get(), a.edges.data(), a.edges.size(), c.n_paths, c.seed, &c.grid,
                                a.dt, cross.data()),
              "cross check");
    }
    check(lb_fk_kernel_mc(eps, a.x, t, v.get(), a.edges.data(), a.edges.size(), c.n_paths, c.seed, mean.data(),
                          se.data(), &sum),
          "fk estimate");
    std::ostringstream os;
    os << "bin_lo,bin_hi,mean,stderr\n";
    for (std::size_t i = 0; i < nb; ++i)
        os << num(a.edges[i]) << ',' << num(a.edges[i + 1]) << ',' << num(mean[i]) << ',' << num(se[i]) << '\n';
    out.csv(label, os.str());
    std::ostringstream ts;
    ts << "quantity,value\n"
       << "total_mean," << num(sum.total_mean) << '\n'
       << "total_stderr," << num(sum.total_stderr) << '\n'
       << "min_weight," << num(sum.min_weight) << '\n'
       << "max_weight," << num(sum.max_weight) << '\n';
    out.csv(label + "_total", ts.str());

    if (constant) {
        double expect = std::exp(-cval * t);
        checks.report("total mass", std::abs(sum.total_mean - expect) <= 3.0 * sum.total_stderr + 1e-12 * expect,
                      num(sum.total_mean) + " vs exp(-ct) " + num(expect));
        bool exact = std::abs(sum.min_weight - expect) <= 1e-14 && std::abs(sum.max_weight - expect) <= 1e-14;
        checks.report("per-path weight", exact, "min " + num(sum.min_weight) + ", max " + num(sum.max_weight));
    }
    if (do_cross) {
        std::ostringstream cs;
        cs << "bin_lo,bin_hi,mc,mc_stderr,grid,bias_bound,pass\n";
        bool ok = true;
        for (const auto& r : cross) {
            ok = ok && r.pass;
            cs << num(r.bin_lo) << ',' << num(r.bin_hi) << ',' << num(r.mc) << ',' << num(r.mc_stderr) << ','
               << num(r.grid) << ',' << num(r.bias_bound) << ',' << r.pass << '\n';
        }
        out.csv(label + "_cross", cs.str());
        checks.report("grid vs mc", ok, "every bin within 3 sigma + bias bound");
    }
    if (a.symmetry) {
        // Two tents with disjoint-ish supports.
        lb_grid fg{-2.0, 0.0, 201}, gg{-0.5, 1.5, 201};
        std::vector<double> f(fg.n), g(gg.n);
        for (std::size_t i = 0; i < fg.n; ++i) {
            double u = static_cast<double>(i) / static_cast<double>(fg.n - 1);
            f[i] = 1.0 - std::abs(2.0 * u - 1.0);
            g[i] = 0.5 + 0.5 * std::sin(kPi * u);
        }
        double lhs = 0, rhs = 0, sd = 0;
        check(lb_fk_symmetry(eps, t, v.get(), &fg, f.data(), &gg, g.data(), c.n_paths, c.seed, &lhs, &rhs, &sd),
              "symmetry");
        std::ostringstream ss;
        ss << "lhs,rhs,stderr\n" << num(lhs) << ',' << num(rhs) << ',' << num(sd) << '\n';
        out.csv(label + "_symmetry", ss.str());
        checks.report("symmetry", std::abs(lhs - rhs) <= 3.0 * sd,
                      "|lhs - rhs| = " + num(std::abs(lhs - rhs)) + ", 3 sigma " + num(3.0 * sd));
    }
    if (a.lower_bound) {
        std::vector<lb_lower_bound_row> rows(nb);
        check(lb_fk_lower_bound(eps, a.x, a.edges.data(), a.edges.size(), t, v.get(), a.window, c.n_paths, c.seed,
                                rows.data()),
              "lower bound");
        std::ostringstream ls;
        ls << "bin_lo,bin_hi,estimate,stderr,stay_mass,cauchy_mass,floor,pass\n";
        bool ok = true;
        for (const auto& r : rows) {
            ok = ok && r.pass;
            ls << num(r.bin_lo) << ',' << num(r.bin_hi) << ',' << num(r.estimate) << ',' << num(r.stderr_) << ','
               << num(r.stay_mass) << ',' << num(r.cauchy_mass) << ',' << num(r.floor) << ',' << r.pass << '\n';
        }
        out.csv(label + "_lower_bound", ls.str());
        checks.report("lower bound", ok, "every bin above exp(-c_n t) k / 2 within 3 sigma");
    }
    if (a.bridge) {
        auto k = make_kernel(eps, c.potential, c.tol_series, a.dt);
        auto b = make_boundary(c, k.get());
        auto s = solve(b.get(), k.get(), c, 1000);
        out.json_file(label + "_bridge", solution_json(s.get()));
        double residual = 0.0;
        check(lb_solution_residual(s.get(), &residual, nullptr), "residual");
        checks.report("perturbed bridge residual", residual <= c.tol_fit, num(residual));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"levybridge: Cauchy-driven Schroedinger interpolation, step-process approximants and\n"
                 "Feynman-Kac perturbations. Env LEVY_BRIDGE_THREADS caps the worker count."};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(lb_version()));

    std::string config_file, out_dir, label;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides config output_dir)");
    app.add_option("--seed", seed, "Monte Carlo seed");
    app.add_flag("--quiet", quiet, "only report failures");

    // Shared overrides.
    std::optional<double> x_min, x_max, horizon, tol_fit, tol_mass;
    std::optional<std::size_t> n_nodes, paths;
    std::vector<double> eps_list;
    std::string boundary, potential;
    std::vector<double> boundary_params;
    auto add_common = [&](CLI::App* sub, bool mc) {
        sub->add_option("--x-min", x_min, "grid lower end");
        sub->add_option("--x-max", x_max, "grid upper end");
        sub->add_option("--n", n_nodes, "grid nodes");
        sub->add_option("--T", horizon, "horizon");
        sub->add_option("--tol-fit", tol_fit, "solver tolerance");
        sub->add_option("--tol-mass", tol_mass, "mass tolerance");
        sub->add_option("--label", label, "output label");
        if (mc) sub->add_option("--paths", paths, "Monte Carlo paths");
    };

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel", "dump Cauchy or step kernel rows (x,value CSV + atom JSON)");
    kernel->add_flag("--exact", ka.exact, "exact Cauchy kernel");
    kernel->add_option("--eps", ka.eps, "truncation levels (step kernels)")->delimiter(',');
    kernel->add_option("--t", ka.t, "elapsed times")->delimiter(',');
    kernel->add_option("--y", ka.y, "start point");
    kernel->add_flag("--check-mass", ka.check_mass, "require total mass 1 within tol_mass");
    add_common(kernel, false);

    BridgeArgs ba;
    auto* bridge = app.add_subcommand("bridge", "solve the Schroedinger system for a boundary preset");
    bridge->add_option("--preset", boundary, "free | bimodal | pinned");
    bridge->add_option("--params", boundary_params, "preset parameters (pinned: y0,zT[,scale])")->delimiter(',');
    bridge->add_option("--eps", ba.eps, "use the step kernel with this truncation");
    bridge->add_option("--potential", potential, "perturb the kernel by a potential preset");
    bridge->add_option("--times", ba.times, "times of the density sweep")->delimiter(',');
    bridge->add_option("--max-iter", ba.max_iter, "iteration cap");
    bridge->add_option("--dt", ba.dt, "splitting step for perturbed kernels");
    bridge->add_option("--pinned-tol", ba.pinned_tol, "tolerance of the pinned midpoint check");
    add_common(bridge, false);

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "step-process simulations");
    simulate->add_flag("--free", sa.free, "free truncated process statistics");
    simulate->add_flag("--conditioned", sa.conditioned, "conditioned occupation histogram");
    simulate->add_flag("--converge", sa.converge, "convergence report over the eps ladder");
    simulate->add_flag("--maximal", sa.maximal, "maximal inequality table");
    simulate->add_option("--eps", eps_list, "truncation levels")->delimiter(',');
    simulate->add_option("--t", sa.t, "horizon of free paths");
    simulate->add_option("--t-eval", sa.t_eval, "histogram time of conditioned paths");
    simulate->add_option("--preset", boundary, "boundary preset for conditioned paths");
    simulate->add_option("--params", boundary_params, "preset parameters")->delimiter(',');
    simulate->add_option("--sample-paths", sa.sample_paths, "paths written to the paths CSV");
    simulate->add_option("--bins", sa.bins, "histogram bins");
    simulate->add_option("--hist-lo", sa.hist_lo, "histogram lower end");
    simulate->add_option("--hist-hi", sa.hist_hi, "histogram upper end");
    simulate->add_option("--time-steps", sa.time_steps, "theta time grid for the sampler");
    simulate->add_option("--levels", sa.levels, "levels n of the maximal inequality")->delimiter(',');
    add_common(simulate, true);

    auto* converge = app.add_subcommand("converge", "convergence report (same as simulate --converge)");
    converge->add_option("--eps", eps_list, "decreasing truncation levels")->delimiter(',');
    converge->add_option("--preset", boundary, "boundary preset");
    converge->add_option("--params", boundary_params, "preset parameters")->delimiter(',');
    add_common(converge, false);

    FkArgs fa;
    auto* fk = app.add_subcommand("fk", "Feynman-Kac estimates for a potential");
    fk->add_option("--potential", potential, "const:c | box:a,b,h | harmonic:cap | table:x1,v1,...");
    fk->add_option("--eps", eps_list, "truncation level")->delimiter(',');
    fk->add_option("--x", fa.x, "start point");
    fk->add_option("--t", fa.t, "elapsed time");
    fk->add_option("--edges", fa.edges, "bin edges")->delimiter(',');
    fk->add_flag("--lower-bound", fa.lower_bound, "per-bin lower bound check");
    fk->add_option("--window", fa.window, "window n of the lower bound");
    fk->add_flag("--symmetry", fa.symmetry, "symmetry check with two fixed test functions");
    fk->add_flag("--cross-check", fa.cross_check, "grid propagator against Monte Carlo");
    fk->add_flag("--bridge", fa.bridge, "solve the perturbed Schroedinger system");
    fk->add_option("--preset", boundary, "boundary preset for --bridge");
    fk->add_option("--dt", fa.dt, "splitting step");
    add_common(fk, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage errors share the invalid-input code
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        Config c;
        if (!config_file.empty()) load_config(config_file, c);
        if (x_min) c.grid.x_min = *x_min;
        if (x_max) c.grid.x_max = *x_max;
        if (n_nodes) c.grid.n = *n_nodes;
        if (horizon) c.T = *horizon;
        if (tol_fit) c.tol_fit = *tol_fit;
        if (tol_mass) c.tol_mass = *tol_mass;
        if (paths) c.n_paths = *paths;
        if (seed) c.seed = *seed;
        if (!eps_list.empty()) c.eps = eps_list;
        if (!boundary.empty()) c.boundary = boundary;
        if (!boundary_params.empty()) c.boundary_params = boundary_params;
        if (!potential.empty()) c.potential = potential;
        if (!out_dir.empty()) c.output_dir = out_dir;
        validate(c);

        Output out;
        out.quiet = quiet;
        out.stamp = utc_now();
        out.dir = c.output_dir;
        std::error_code ec;
        fs::create_directories(out.dir, ec);
        if (ec || !fs::is_directory(out.dir)) die("output dir '" + c.output_dir + "' is not writable");
        Checks checks;
        checks.quiet = quiet;

        CLI::App* sub = app.get_subcommands().front();
        out.command = sub->get_name();
        if (sub == kernel) {
            ka.label = label;
            cmd_kernel(c, ka, out, checks);
        } else if (sub == bridge) {
            ba.label = label;
            cmd_bridge(c, ba, out, checks);
        } else if (sub == simulate) {
            sa.label = label;
            if (!(sa.free || sa.conditioned || sa.converge || sa.maximal))
                die("simulate: choose at least one of --free, --conditioned, --converge, --maximal");
            if (sa.free) simulate_free(c, sa, out, checks);
            if (sa.conditioned) simulate_conditioned(c, sa, out, checks);
            if (sa.converge) run_converge(c, label, out, checks);
            if (sa.maximal) simulate_maximal(c, sa, out, checks);
        } else if (sub == converge) {
            run_converge(c, label, out, checks);
        } else if (sub == fk) {
            fa.label = label;
            if (fa.edges.size() < 2) die("fk --edges: need at least two edges");
            cmd_fk(c, fa, out, checks);
        }
        return checks.failed == 0 ? 0 : 1;
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return f.code;
    }
}
