#pragma once

// Step-process sampling (free and conditioned), jump intensities and
// convergence diagnostics.

#include "levybridge/schroedinger.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace levy {

// Cadlag piecewise-constant path: x0 on [t_start, jump_times[0]), states[i]
// on [jump_times[i], jump_times[i+1]).
struct StepPath {
    double t_start = 0.0;
    double t_end = 0.0;
    double x0 = 0.0;
    std::vector<double> jump_times;
    std::vector<double> states;

    double state_at(double t) const;
    double terminal() const { return states.empty() ? x0 : states.back(); }
    double sup_abs() const;
    void validate() const;
    // time,state rows: start, one per jump, end.
    std::string to_csv() const;
};

// Jump of the truncated process: sign +-1, magnitude eps/U, U ~ U(0,1].
double sample_jump(double epsilon, RandomStream& rng);

StepPath sample_free_path(double epsilon, double x0, double t_start, double t_end, RandomStream& rng);

// h_eps(t,y,x) = theta(x,t)/theta(y,t) q_eps(x-y).
double jump_intensity_density(double epsilon, const ThetaField& theta, double t, double y, double x);
// int_a^b h_eps(t,y,x) dx (exact for the interpolated theta).
double jump_intensity_mass(double epsilon, const ThetaField& theta, double t, double y, double a, double b);
// h_eps(t,y) = int h_eps(t,y,x) dx.
double jump_intensity_rate(double epsilon, const ThetaField& theta, double t, double y);
// Charge of [a,b]: int_a^b h_eps(t,y,x) dx minus the atom h_eps(t,y) if y in [a,b].
double charge_mass(double epsilon, const ThetaField& theta, double t, double y, double a, double b);

// Thinning sampler for the conditioned step process. Candidates arrive at
// rate (2/(pi eps)) M / theta_min(y), with M the sup of theta and theta_min
// the minimum over the time span; a free jump y -> x proposed at time t is
// kept with probability theta(x,t) theta_min(y) / (theta(y,t) M).
class ConditionedSampler {
public:
    ConditionedSampler(double epsilon, ThetaField theta);

    StepPath sample(double x0, double t_start, double t_end, RandomStream& rng) const;
    double dominating_rate(double y) const;
    const ThetaField& theta() const { return theta_; }

private:
    double epsilon_;
    ThetaField theta_;
    GridFn theta_min_;
    double theta_max_;
};

StepPath sample_conditioned_path(double epsilon, const ThetaField& theta, double x0, double t_start, double t_end,
                                 RandomStream& rng);

// Draws start points from the node masses of a density: interior nodes
// uniformly within their cell, end nodes at the node itself.
class MassSampler {
public:
    explicit MassSampler(const GridFn& density);
    double draw(RandomStream& rng) const;

private:
    Grid1D grid_;
    std::vector<double> cumulative_;
};

// 'bins' equal-width bins on [lo, hi] plus an underflow bin (index 0) and an
// overflow bin (index bins + 1).
struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t bins = 100;
    std::vector<double> counts;
    double total = 0.0;

    Histogram() = default;
    Histogram(double lo, double hi, std::size_t bins);
    void add(double x, double w = 1.0);
    void merge(const Histogram& o);
    std::vector<double> frequencies() const;
    double edge(std::size_t k) const;  // k = 0..bins
};

// Bin masses of a density in the Histogram layout.
std::vector<double> expected_bins(const GridFn& density, double lo, double hi, std::size_t bins);
double l1_distance(const std::vector<double>& a, const std::vector<double>& b);

// sup |F_n - F| for the given samples (sorted in place).
double ks_statistic(std::vector<double>& samples, const std::function<double(double)>& cdf);
// Asymptotic 99% critical value of the one-sample KS statistic.
double ks_critical_99(std::size_t n);

struct FreeStats {
    std::size_t n_paths = 0;
    double mean_jumps = 0.0;
    double var_jumps = 0.0;
    double zero_fraction = 0.0;  // paths with no jump: empirical atom
    std::vector<double> p;
    std::vector<double> cf_mean;    // E cos(p Y_t)
    std::vector<double> cf_stderr;
    std::vector<double> terminal;   // filled when requested
};

FreeStats free_path_stats(double epsilon, double t, std::size_t n_paths, std::uint64_t seed,
                          const std::vector<double>& p_values, bool keep_terminal = false);

struct OccupationResult {
    double l1 = 0.0;
    Histogram histogram;
    std::vector<double> expected;
    std::size_t n_paths = 0;
    double mean_jumps = 0.0;
};

// Conditioned paths started from rho0, histogram at t_eval against rho(., t_eval).
OccupationResult conditioned_occupation(const SchroedingerSolution& sol, double t_eval, std::size_t n_paths,
                                        std::uint64_t seed, double lo, double hi, std::size_t bins = 100,
                                        std::size_t time_steps = 200);

struct KolmogorovResidual {
    double ac = 0.0;    // sup over interior nodes, density units
    double atom = 0.0;  // residual of the atom coefficient at y
    double value() const { return ac > atom ? ac : atom; }
};

// Centered difference in s of p_eps(y,s,x,t) against the charge term, on the
// lattice of a step-kernel solution.
KolmogorovResidual kolmogorov_residual(const SchroedingerSolution& sol, double y, double s, double t, double ds);

// p_eps(y,s,R,t): absolutely continuous mass plus atom.
double transition_mass(const SchroedingerSolution& sol, double y, double s, double t);

struct Probe {
    double y, s, x, t;
};

struct ConvergenceSetup {
    BoundaryData boundary;
    std::vector<double> p_grid;
    std::vector<double> t_grid;
    std::vector<Probe> probes;
    SolveOptions opts;
};

struct ConvergenceRow {
    double eps = 0.0;
    double cf_sup_err = 0.0;
    double rho_l1_sup = 0.0;
    double p_max_err = 0.0;
    int iterations = 0;
};

std::vector<ConvergenceRow> convergence_report(const std::vector<double>& eps_list, const ConvergenceSetup& setup);
// Each column nonincreasing along the rows up to the relative slack.
bool report_monotone(const std::vector<ConvergenceRow>& rows, double slack = 0.1);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

struct MaximalRow {
    double n = 0.0;
    double empirical = 0.0;
    double stderr_ = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// 3 (1 - (2/pi) arctan(n / (3 t))).
double maximal_bound(double n, double t);

// Free paths with small eps as Cauchy surrogates; P(sup_{s<=t} |Y_s| > n).
std::vector<MaximalRow> maximal_inequality_check(const std::vector<double>& n_values, double t, double epsilon,
                                                 std::size_t n_paths, std::uint64_t seed);

} // namespace levy
