#include "levybridge/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace levy {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> parse_numbers(const std::string& body, const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(ErrorCode::invalid_argument, "potential '" + spec + "': bad number '" + item + "'");
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double table_value(const Potential::Table& t, double x) {
    if (x <= t.x.front()) return t.v.front();
    if (x >= t.x.back()) return t.v.back();
    auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
    std::size_t k = static_cast<std::size_t>(it - t.x.begin());
    double w = (x - t.x[k - 1]) / (t.x[k] - t.x[k - 1]);
    return (1.0 - w) * t.v[k - 1] + w * t.v[k];
}

// Integral of the piecewise-linear table over [lo, hi].
double table_integral(const Potential::Table& t, double lo, double hi) {
    std::vector<double> pts{lo};
    for (double x : t.x)
        if (x > lo && x < hi) pts.push_back(x);
    pts.push_back(hi);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        s += 0.5 * (table_value(t, pts[i]) + table_value(t, pts[i + 1])) * (pts[i + 1] - pts[i]);
    return s;
}

} // namespace

Potential::Potential(Form form) : form_(std::move(form)) {
    std::visit(overloaded{
                   [](const Constant& c) { require(c.c >= 0.0 && std::isfinite(c.c), "potential: constant must be finite and >= 0"); },
                   [](const Box& b) {
                       require(b.a < b.b, "potential: box requires a < b");
                       require(b.h >= 0.0 && std::isfinite(b.h), "potential: box height must be finite and >= 0");
                   },
                   [](const TruncatedHarmonic& h) { require(h.cap >= 0.0 && std::isfinite(h.cap), "potential: harmonic cap must be finite and >= 0"); },
                   [](const Table& t) {
                       require(t.x.size() == t.v.size() && !t.x.empty(), "potential: table needs matching nonempty x and v");
                       require(std::is_sorted(t.x.begin(), t.x.end()) &&
                                   std::adjacent_find(t.x.begin(), t.x.end()) == t.x.end(),
                               "potential: table abscissae must be strictly increasing");
                       for (double v : t.v) require(v >= 0.0 && std::isfinite(v), "potential: table values must be finite and >= 0");
                   },
               },
               form_);
}

Potential Potential::parse(const std::string& spec) {
    auto colon = spec.find(':');
    require(colon != std::string::npos, "potential '" + spec + "': expected <kind>:<params>");
    std::string kind = spec.substr(0, colon);
    auto nums = parse_numbers(spec.substr(colon + 1), spec);
    if (kind == "const") {
        require(nums.size() == 1, "potential const: expects one value");
        return constant(nums[0]);
    }
    if (kind == "box") {
        require(nums.size() == 3, "potential box: expects a,b,h");
        return box(nums[0], nums[1], nums[2]);
    }
    if (kind == "harmonic") {
        require(nums.size() == 1, "potential harmonic: expects the cap");
        return truncated_harmonic(nums[0]);
    }
    if (kind == "table") {
        require(nums.size() >= 2 && nums.size() % 2 == 0, "potential table: expects x1,v1,x2,v2,...");
        std::vector<double> x, v;
        for (std::size_t i = 0; i < nums.size(); i += 2) {
            x.push_back(nums[i]);
            v.push_back(nums[i + 1]);
        }
        return table(std::move(x), std::move(v));
    }
    fail(ErrorCode::invalid_argument, "potential '" + spec + "': unknown preset '" + kind + "'");
}

double Potential::operator()(double x) const {
    return std::visit(overloaded{
                          [](const Constant& c) { return c.c; },
                          [x](const Box& b) { return (x >= b.a && x <= b.b) ? b.h : 0.0; },
                          [x](const TruncatedHarmonic& h) { return std::min(x * x, h.cap); },
                          [x](const Table& t) { return table_value(t, x); },
                      },
                      form_);
}

std::optional<double> Potential::global_bound() const {
    return std::visit(overloaded{
                          [](const Constant& c) -> std::optional<double> { return c.c; },
                          [](const Box& b) -> std::optional<double> { return b.h; },
                          [](const TruncatedHarmonic& h) -> std::optional<double> { return h.cap; },
                          [](const Table& t) -> std::optional<double> { return *std::max_element(t.v.begin(), t.v.end()); },
                      },
                      form_);
}

double Potential::compact_bound(double n) const {
    require(n >= 0.0, "compact_bound: n must be >= 0");
    return std::visit(overloaded{
                          [](const Constant& c) { return c.c; },
                          [n](const Box& b) { return (b.b >= -n && b.a <= n) ? b.h : 0.0; },
                          [n](const TruncatedHarmonic& h) { return std::min(n * n, h.cap); },
                          [this, n](const Table& t) {
                              double m = std::max((*this)(-n), (*this)(n));
                              for (std::size_t k = 0; k < t.x.size(); ++k)
                                  if (std::abs(t.x[k]) <= n) m = std::max(m, t.v[k]);
                              return m;
                          },
                      },
                      form_);
}

double Potential::average(double lo, double hi) const {
    require(hi > lo, "potential average: empty interval");
    double w = hi - lo;
    return std::visit(overloaded{
                          [](const Constant& c) { return c.c; },
                          [lo, hi, w](const Box& b) {
                              double ov = std::max(0.0, std::min(hi, b.b) - std::max(lo, b.a));
                              return b.h * ov / w;
                          },
                          [lo, hi, w](const TruncatedHarmonic& h) {
                              // int min(x^2, cap): split at +-sqrt(cap)
                              double r = std::sqrt(h.cap);
                              auto cube = [](double a, double b) { return (b * b * b - a * a * a) / 3.0; };
                              double s = 0.0;
                              double a1 = std::max(lo, -r), b1 = std::min(hi, r);
                              if (b1 > a1) s += cube(a1, b1);
                              s += h.cap * (w - std::max(0.0, b1 - a1));
                              return s / w;
                          },
                          [lo, hi, w](const Table& t) { return table_integral(t, lo, hi) / w; },
                      },
                      form_);
}

bool Potential::is_zero() const {
    auto m = global_bound();
    return m && *m == 0.0;
}

std::string Potential::spec() const {
    return std::visit(overloaded{
                          [](const Constant& c) { return "const:" + fmt(c.c); },
                          [](const Box& b) { return "box:" + fmt(b.a) + "," + fmt(b.b) + "," + fmt(b.h); },
                          [](const TruncatedHarmonic& h) { return "harmonic:" + fmt(h.cap); },
                          [](const Table& t) {
                              std::string s = "table:";
                              for (std::size_t k = 0; k < t.x.size(); ++k)
                                  s += (k ? "," : "") + fmt(t.x[k]) + "," + fmt(t.v[k]);
                              return s;
                          },
                      },
                      form_);
}

} // namespace levy
