#pragma once

// Transition kernels as operators on grid data.
//
// Every node x_i owns a cell: interior cells are [x_i - dx/2, x_i + dx/2],
// the end cells extend to -inf and +inf. W_ij(tau) is the probability of
// moving from the point x_i into cell j within time tau, so rows of W sum to
// one. Functions are extended by their end values beyond the window.

#include "levybridge/numerics.hpp"
#include "levybridge/potential.hpp"

#include <memory>
#include <string>

namespace levy {

enum class KernelKind { exact_cauchy, truncated_step, perturbed };

struct KernelSpec {
    KernelKind kind = KernelKind::exact_cauchy;
    double epsilon = 0.0;                     // truncated_step, or perturbed over a step base
    KernelKind base = KernelKind::exact_cauchy;  // perturbed only
    std::shared_ptr<const Potential> potential;  // perturbed only
    double dt_max = 1.0 / 64.0;               // splitting step bound, perturbed only
    double tol_series = 1e-12;

    static KernelSpec cauchy();
    static KernelSpec step(double epsilon, double tol_series = 1e-12);
    static KernelSpec perturbed(const KernelSpec& base, Potential v, double dt_max = 1.0 / 64.0);

    bool has_atom() const;
    void validate() const;
    std::string describe() const;
};

struct PushResult {
    std::vector<double> mass;  // per-cell mass, end cells unbounded
    double edge_lo = 0.0;      // mass in [x_0 - dx/2, x_0 + dx/2]
    double edge_hi = 0.0;      // mass in [x_{n-1} - dx/2, x_{n-1} + dx/2]
};

// Cell masses back to a density: interior values m_j/dx; end values from the
// full-width end cells, remainder into the tails.
GridFn masses_to_density(const Grid1D& grid, const PushResult& r);

// Inverse of masses_to_density: node masses with the end-cell mass split into
// the part near the node and the tail.
PushResult density_masses(const GridFn& f);

// A function on the nodes plus the two tail states beyond the window.
struct TailField {
    std::vector<double> values;
    double lo = 0.0;
    double hi = 0.0;
};

class CellOperator {
public:
    CellOperator(const Grid1D& grid, double tau) : grid_(grid), tau_(tau) {}
    virtual ~CellOperator() = default;

    const Grid1D& grid() const { return grid_; }
    double tau() const { return tau_; }

    // theta_i = sum_j W_ij g_j, also from the tail states
    virtual TailField pull(const TailField& g) const = 0;
    // Tail states take the end values of g.
    std::vector<double> pull(std::span<const double> g) const;
    // m_j = sum_i a_i W_ij. Of each end mass only in.edge_lo/in.edge_hi sits
    // at the node; the rest starts in the tail state.
    virtual PushResult push(const PushResult& in) const = 0;
    // All mass treated as point masses at the nodes.
    PushResult push(std::span<const double> a) const;
    // Density in, density out.
    GridFn push_density(const GridFn& f) const;

private:
    Grid1D grid_;
    double tau_;
};

// W_ij = c(j - i) with lag masses c over lags -(n-1)..(n-1) plus the mass
// beyond the lag window on either side. Tail mass is spread over the ghost
// lattice beyond each end with an inverse-square profile about the window
// centre, the decay every density here inherits from the jump law.
class TranslationInvariantOperator final : public CellOperator {
public:
    TranslationInvariantOperator(const Grid1D& grid, double tau, std::vector<double> lag_mass,
                                 double beyond_lo, double beyond_hi);

    using CellOperator::pull;
    TailField pull(const TailField& g) const override;
    using CellOperator::push;
    PushResult push(const PushResult& in) const override;

    const std::vector<double>& lag_mass() const { return c_; }

private:
    std::vector<double> c_;
    std::vector<double> lo_, hi_;  // W_{i,0} and W_{i,n-1}
    FftConvolver fwd_;             // against c
    FftConvolver rev_;             // against reversed c
    std::vector<double> row_lo_, row_hi_;  // from the tail states into the cells
    double stay_lo_ = 1.0, stay_hi_ = 1.0;
};

// exp(tau (Q - rate)) with Q = rate * J and J a stochastic jump operator,
// summed as a Poisson mixture of powers of J. Exact discrete semigroup.
class PoissonSeriesOperator final : public CellOperator {
public:
    PoissonSeriesOperator(const Grid1D& grid, double tau, std::shared_ptr<const TranslationInvariantOperator> jump,
                          double rate, double tol_series);

    using CellOperator::pull;
    TailField pull(const TailField& g) const override;
    using CellOperator::push;
    PushResult push(const PushResult& in) const override;

    const TranslationInvariantOperator& jump() const { return *jump_; }
    double rate() const { return rate_; }
    std::size_t terms() const { return weights_.size(); }

private:
    std::shared_ptr<const TranslationInvariantOperator> jump_;
    double rate_;
    std::vector<double> weights_;  // Poisson(rate tau) pmf, truncated
};

// Strang splitting D W0(dt) D with D = exp(-V dt / 2), applied N times.
class SplittingOperator final : public CellOperator {
public:
    SplittingOperator(const Grid1D& grid, double tau, std::shared_ptr<const CellOperator> base,
                      std::vector<double> half_factor, std::size_t steps);

    using CellOperator::pull;
    TailField pull(const TailField& g) const override;
    using CellOperator::push;
    PushResult push(const PushResult& in) const override;

    std::size_t steps() const { return steps_; }
    const CellOperator& base() const { return *base_; }

private:
    std::shared_ptr<const CellOperator> base_;
    std::vector<double> d_;
    std::size_t steps_;
};

std::unique_ptr<TranslationInvariantOperator> cauchy_operator(const Grid1D& grid, double tau);
// Jump law q_eps / (2/(pi eps)) as cell masses on the lattice.
std::shared_ptr<TranslationInvariantOperator> jump_operator(const Grid1D& grid, double epsilon);
std::unique_ptr<PoissonSeriesOperator> step_operator(const Grid1D& grid, double epsilon, double tau,
                                                     double tol_series = 1e-12);

// Cell averages of V (end cells use the full-width cell around the node).
std::vector<double> cell_average_potential(const Potential& v, const Grid1D& grid);

// Largest splitting step with dt (jump rate + sup V) <= 1/2.
double stable_dt(const KernelSpec& spec, const Grid1D& grid);

std::unique_ptr<CellOperator> make_operator(const KernelSpec& spec, const Grid1D& grid, double tau);

// Row of the kernel from start point y over elapsed time tau, as a density on
// the grid plus the weight of the atom at y (step-based kernels only). For
// lattice kernels y is snapped to the nearest node.
struct KernelRow {
    GridFn density;
    double atom_weight = 0.0;
    std::size_t atom_index = 0;
};
KernelRow kernel_row(const KernelSpec& spec, const Grid1D& grid, double y, double tau);

// Absolutely continuous kernel density at (y -> x) over tau.
double kernel_density(const KernelSpec& spec, const Grid1D& grid, double y, double x, double tau);

} // namespace levy
