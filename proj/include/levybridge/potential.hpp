#pragma once

#include "levybridge/error.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace levy {

// Nonnegative, locally bounded perturbation V. Presets:
//   const:c          V = c
//   box:a,b,h        V = h on [a,b], 0 elsewhere
//   harmonic:cap     V = min(x^2, cap)
//   table:x1,v1,...  piecewise linear through (x_k, v_k), flat outside
class Potential {
public:
    struct Constant { double c; };
    struct Box { double a, b, h; };
    struct TruncatedHarmonic { double cap; };
    struct Table { std::vector<double> x, v; };
    using Form = std::variant<Constant, Box, TruncatedHarmonic, Table>;

    explicit Potential(Form form);

    static Potential constant(double c) { return Potential(Constant{c}); }
    static Potential box(double a, double b, double h) { return Potential(Box{a, b, h}); }
    static Potential truncated_harmonic(double cap) { return Potential(TruncatedHarmonic{cap}); }
    static Potential table(std::vector<double> x, std::vector<double> v) {
        return Potential(Table{std::move(x), std::move(v)});
    }
    static Potential parse(const std::string& spec);

    double operator()(double x) const;

    // Global bound M with V <= M everywhere, when one exists.
    std::optional<double> global_bound() const;

    // c_n = sup_{|x| <= n} V(x).
    double compact_bound(double n) const;

    // Mean of V over [lo, hi] (exact for every preset).
    double average(double lo, double hi) const;

    bool is_zero() const;
    std::string spec() const;
    const Form& form() const { return form_; }

private:
    Form form_;
};

} // namespace levy
