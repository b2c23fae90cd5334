#include "levybridge/schroedinger.hpp"

#include "json.hpp"

namespace levy {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

const char* kind_name(KernelKind k) {
    switch (k) {
    case KernelKind::exact_cauchy: return "exact_cauchy";
    case KernelKind::truncated_step: return "truncated_step";
    case KernelKind::perturbed: return "perturbed";
    }
    return "?";
}

KernelKind kind_from(const std::string& s) {
    if (s == "exact_cauchy") return KernelKind::exact_cauchy;
    if (s == "truncated_step") return KernelKind::truncated_step;
    if (s == "perturbed") return KernelKind::perturbed;
    fail(ErrorCode::invalid_argument, "solution json: unknown kernel kind '" + s + "'");
}

} // namespace

std::string solution_to_json(const SchroedingerSolution& sol) {
    const Grid1D& g = sol.grid();
    json kernel = {{"kind", kind_name(sol.kernel.kind)}, {"horizon", sol.T}, {"tol_series", sol.kernel.tol_series}};
    if (sol.kernel.has_atom()) kernel["epsilon"] = sol.kernel.epsilon;
    if (sol.kernel.kind == KernelKind::perturbed) {
        kernel["base"] = kind_name(sol.kernel.base);
        kernel["potential"] = sol.kernel.potential->spec();
        kernel["dt_max"] = sol.kernel.dt_max;
    }
    json doc = {
        {"version", kSchemaVersion},
        {"grid", {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"n", g.n()}}},
        {"f", {{"values", sol.f.values}, {"tail_lo", sol.f.tail_lo}, {"tail_hi", sol.f.tail_hi}}},
        {"g", {{"values", sol.g.values}}},
        {"kernel", kernel},
        {"residual", sol.residual},
        {"iterations", sol.iterations},
    };
    return doc.dump(1);
}

SchroedingerSolution solution_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::io, std::string("solution json: parse error: ") + e.what());
    }
    try {
        int version = doc.at("version").get<int>();
        if (version != kSchemaVersion)
            fail(ErrorCode::io, "solution json: unsupported schema version " + std::to_string(version));
        const json& jg = doc.at("grid");
        Grid1D grid(jg.at("x_min").get<double>(), jg.at("x_max").get<double>(), jg.at("n").get<std::size_t>());
        SchroedingerSolution sol;
        const json& jf = doc.at("f");
        sol.f = GridFn(grid, jf.at("values").get<std::vector<double>>(), jf.value("tail_lo", 0.0),
                       jf.value("tail_hi", 0.0));
        sol.g = GridFn(grid, doc.at("g").at("values").get<std::vector<double>>());
        const json& jk = doc.at("kernel");
        KernelSpec k;
        k.kind = kind_from(jk.at("kind").get<std::string>());
        k.tol_series = jk.value("tol_series", 1e-12);
        k.epsilon = jk.value("epsilon", 0.0);
        if (k.kind == KernelKind::perturbed) {
            k.base = kind_from(jk.at("base").get<std::string>());
            k.potential = std::make_shared<const Potential>(Potential::parse(jk.at("potential").get<std::string>()));
            k.dt_max = jk.value("dt_max", 1.0 / 64.0);
        }
        k.validate();
        sol.kernel = k;
        sol.T = jk.at("horizon").get<double>();
        sol.residual = doc.at("residual").get<double>();
        sol.iterations = doc.at("iterations").get<int>();
        return sol;
    } catch (const json::exception& e) {
        fail(ErrorCode::io, std::string("solution json: ") + e.what());
    }
}

} // namespace levy
