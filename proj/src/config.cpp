#include "perbranch/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace perbranch {

using nlohmann::json;

double poly_eval(const PolyRow& row, const Vec& x) {
    double acc = 0.0;
    for (const Monomial& m : row) {
        double term = m.coef;
        for (std::size_t i = 0; i < m.exponents.size(); ++i) {
            const int e = m.exponents[i];
            if (e == 0) continue;
            term *= std::pow(x[static_cast<int>(i)], e);
        }
        acc += term;
    }
    return acc;
}

PolyRow poly_derivative(const PolyRow& row, int var) {
    PolyRow out;
    for (const Monomial& m : row) {
        const int e = m.exponents[var];
        if (e == 0) continue;
        Monomial d = m;
        d.coef *= e;
        d.exponents[var] = e - 1;
        out.push_back(std::move(d));
    }
    return out;
}

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

double get_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
    if (!j[key].is_number()) throw ConfigError(where + ": \"" + key + "\" must be a number");
    return j[key].get<double>();
}

std::vector<int> get_exponents(const json& j, std::size_t expected,
                               const std::string& where) {
    if (!j.is_array() || j.size() != expected)
        throw ConfigError(where + ": \"exponents\" must be an array of length " +
                          std::to_string(expected));
    std::vector<int> e;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<int>() < 0)
            throw ConfigError(where + ": exponents must be nonnegative integers");
        e.push_back(v.get<int>());
    }
    return e;
}

PolyRow parse_poly_row(const json& j, int nvars, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of monomials");
    PolyRow row;
    for (const auto& mj : j) {
        require_keys(mj, {"coef", "exponents"}, where);
        Monomial m;
        m.coef = get_number(mj, "coef", where);
        m.exponents = get_exponents(mj.at("exponents"), nvars, where);
        row.push_back(std::move(m));
    }
    return row;
}

CoefficientConfig parse_coefficient(const json& j, const std::string& where) {
    require_keys(j, {"constant", "fourier", "abs", "abs_scale"}, where);
    CoefficientConfig c;
    if (j.contains("constant")) c.constant = get_number(j, "constant", where);
    if (j.contains("fourier")) {
        if (!j["fourier"].is_array()) throw ConfigError(where + ": \"fourier\" must be an array");
        for (const auto& tj : j["fourier"]) {
            require_keys(tj, {"mode", "cos", "sin"}, where + ".fourier");
            PeriodicCoefficient::FourierTerm t;
            if (!tj.contains("mode") || !tj["mode"].is_number_integer() ||
                tj["mode"].get<int>() < 1)
                throw ConfigError(where + ": fourier terms need an integer mode >= 1");
            t.mode = tj["mode"].get<int>();
            if (tj.contains("cos")) t.cos_coef = get_number(tj, "cos", where);
            if (tj.contains("sin")) t.sin_coef = get_number(tj, "sin", where);
            c.fourier.push_back(t);
        }
    }
    if (j.contains("abs")) {
        const std::string kind = j["abs"].get<std::string>();
        if (kind == "cos")
            c.abs = PeriodicCoefficient::AbsPrimitive::abs_cos;
        else if (kind == "sin")
            c.abs = PeriodicCoefficient::AbsPrimitive::abs_sin;
        else
            throw ConfigError(where + ": \"abs\" must be \"cos\" or \"sin\"");
        if (!j.contains("abs_scale"))
            throw ConfigError(where + ": \"abs\" requires \"abs_scale\"");
        c.abs_scale = get_number(j, "abs_scale", where);
    } else if (j.contains("abs_scale")) {
        throw ConfigError(where + ": \"abs_scale\" requires \"abs\"");
    }
    return c;
}

PerturbationRow parse_perturbation_row(const json& j, int nvars,
                                       const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of terms");
    PerturbationRow row;
    for (const auto& tj : j) {
        require_keys(tj, {"coef", "exponents", "time"}, where);
        PerturbationTerm t;
        t.coef = get_number(tj, "coef", where);
        t.exponents = get_exponents(tj.at("exponents"), nvars, where);
        if (tj.contains("time")) {
            require_keys(tj["time"], {"kind", "mode"}, where + ".time");
            const std::string kind = tj["time"].value("kind", "");
            if (kind == "cos")
                t.time = PerturbationTerm::Time::cos_t;
            else if (kind == "sin")
                t.time = PerturbationTerm::Time::sin_t;
            else
                throw ConfigError(where + ": time kind must be \"cos\" or \"sin\"");
            if (!tj["time"].contains("mode") || !tj["time"]["mode"].is_number_integer() ||
                tj["time"]["mode"].get<int>() < 1)
                throw ConfigError(where + ": time factor needs an integer mode >= 1");
            t.mode = tj["time"]["mode"].get<int>();
        }
        row.push_back(std::move(t));
    }
    return row;
}

json coefficient_to_json(const CoefficientConfig& c) {
    json j = json::object();
    j["constant"] = c.constant;
    if (!c.fourier.empty()) {
        json arr = json::array();
        for (const auto& t : c.fourier)
            arr.push_back({{"mode", t.mode}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
        j["fourier"] = arr;
    }
    if (c.abs != PeriodicCoefficient::AbsPrimitive::none) {
        j["abs"] = c.abs == PeriodicCoefficient::AbsPrimitive::abs_cos ? "cos" : "sin";
        j["abs_scale"] = c.abs_scale;
    }
    return j;
}

json poly_row_to_json(const PolyRow& row) {
    json arr = json::array();
    for (const Monomial& m : row)
        arr.push_back({{"coef", m.coef}, {"exponents", m.exponents}});
    return arr;
}

json perturbation_row_to_json(const PerturbationRow& row) {
    json arr = json::array();
    for (const PerturbationTerm& t : row) {
        json tj = {{"coef", t.coef}, {"exponents", t.exponents}};
        if (t.time != PerturbationTerm::Time::none)
            tj["time"] = {{"kind", t.time == PerturbationTerm::Time::cos_t ? "cos" : "sin"},
                          {"mode", t.mode}};
        arr.push_back(tj);
    }
    return arr;
}

}  // namespace

ProblemConfig parse_problem_config(const json& j) {
    require_keys(j,
                 {"name", "dimension", "period", "lag", "ambient_box", "constraint_tol",
                  "constraints", "blocks", "field", "perturbation"},
                 "problem");
    ProblemConfig cfg;
    if (!j.contains("name") || !j["name"].is_string())
        throw ConfigError("problem: missing string \"name\"");
    cfg.name = j["name"].get<std::string>();
    if (!j.contains("dimension") || !j["dimension"].is_number_integer())
        throw ConfigError("problem: missing integer \"dimension\"");
    cfg.dimension = j["dimension"].get<int>();
    if (cfg.dimension < 1) throw ConfigError("problem: dimension must be >= 1");
    cfg.period = get_number(j, "period", "problem");
    if (!(cfg.period > 0)) throw ConfigError("problem: period must be > 0");
    if (j.contains("lag")) cfg.lag = get_number(j, "lag", "problem");

    if (!j.contains("ambient_box") || !j["ambient_box"].is_array() ||
        j["ambient_box"].size() != static_cast<std::size_t>(cfg.dimension))
        throw ConfigError("problem: \"ambient_box\" must list one [lo, hi] per dimension");
    for (const auto& row : j["ambient_box"]) {
        if (!row.is_array() || row.size() != 2)
            throw ConfigError("problem: ambient_box rows must be [lo, hi]");
        cfg.ambient_box.emplace_back(row[0].get<double>(), row[1].get<double>());
    }

    if (j.contains("constraint_tol"))
        cfg.constraint_tol = get_number(j, "constraint_tol", "problem");

    if (j.contains("constraints")) {
        if (!j["constraints"].is_array())
            throw ConfigError("problem: \"constraints\" must be an array of rows");
        for (const auto& row : j["constraints"])
            cfg.constraints.push_back(parse_poly_row(row, cfg.dimension, "constraints"));
    }
    const int s = static_cast<int>(cfg.constraints.size());
    const int k = cfg.dimension - s;
    if (k < 1) throw ConfigError("problem: needs at least one intrinsic dimension");

    if (!j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].empty())
        throw ConfigError("problem: \"blocks\" must be a nonempty array");
    int total = 0;
    for (const auto& bj : j["blocks"]) {
        require_keys(bj, {"dim", "coefficient"}, "blocks");
        BlockConfig b;
        if (!bj.contains("dim") || !bj["dim"].is_number_integer() || bj["dim"].get<int>() < 1)
            throw ConfigError("blocks: need an integer dim >= 1");
        b.dim = bj["dim"].get<int>();
        if (!bj.contains("coefficient"))
            throw ConfigError("blocks: missing \"coefficient\"");
        b.coefficient = parse_coefficient(bj["coefficient"], "blocks.coefficient");
        total += b.dim;
        cfg.blocks.push_back(std::move(b));
    }
    if (total != k)
        throw ConfigError("problem: block dims sum to " + std::to_string(total) +
                          " but the intrinsic dimension is " + std::to_string(k));

    if (!j.contains("field") || !j["field"].is_array() ||
        j["field"].size() != static_cast<std::size_t>(k))
        throw ConfigError("problem: \"field\" must have one polynomial row per intrinsic "
                          "dimension");
    for (const auto& row : j["field"])
        cfg.field.push_back(parse_poly_row(row, cfg.dimension, "field"));

    if (j.contains("perturbation")) {
        if (!j["perturbation"].is_array() ||
            j["perturbation"].size() != static_cast<std::size_t>(k))
            throw ConfigError("problem: \"perturbation\" must have one row per intrinsic "
                              "dimension");
        for (const auto& row : j["perturbation"])
            cfg.perturbation.push_back(
                parse_perturbation_row(row, 2 * cfg.dimension, "perturbation"));
        if (!cfg.lag)
            throw ConfigError("problem: a perturbation requires \"lag\"");
    }
    return cfg;
}

json problem_config_to_json(const ProblemConfig& cfg) {
    json j = json::object();
    j["name"] = cfg.name;
    j["dimension"] = cfg.dimension;
    j["period"] = cfg.period;
    if (cfg.lag) j["lag"] = *cfg.lag;
    json box = json::array();
    for (const auto& [lo, hi] : cfg.ambient_box) box.push_back({lo, hi});
    j["ambient_box"] = box;
    if (!cfg.constraints.empty()) {
        j["constraint_tol"] = cfg.constraint_tol;
        json rows = json::array();
        for (const auto& row : cfg.constraints) rows.push_back(poly_row_to_json(row));
        j["constraints"] = rows;
    }
    json blocks = json::array();
    for (const auto& b : cfg.blocks)
        blocks.push_back({{"dim", b.dim}, {"coefficient", coefficient_to_json(b.coefficient)}});
    j["blocks"] = blocks;
    json field = json::array();
    for (const auto& row : cfg.field) field.push_back(poly_row_to_json(row));
    j["field"] = field;
    if (!cfg.perturbation.empty()) {
        json rows = json::array();
        for (const auto& row : cfg.perturbation)
            rows.push_back(perturbation_row_to_json(row));
        j["perturbation"] = rows;
    }
    return j;
}

ProblemConfig load_problem_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse problem file " + path + ": " + e.what());
    }
    return parse_problem_config(j);
}

ProblemSpec assemble_problem(const ProblemConfig& cfg) {
    const int d = cfg.dimension;
    const int s = static_cast<int>(cfg.constraints.size());
    const int k = d - s;

    Vec lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = cfg.ambient_box[static_cast<std::size_t>(i)].first;
        hi[i] = cfg.ambient_box[static_cast<std::size_t>(i)].second;
    }
    Box box(lo, hi);

    ImplicitManifold manifold = ImplicitManifold::flat(1, Box::cube(1, -1, 1));
    if (s == 0) {
        manifold = ImplicitManifold::flat(d, box);
    } else {
        auto g_rows = cfg.constraints;
        auto g = [g_rows, s](const Vec& p) {
            Vec v(s);
            for (int i = 0; i < s; ++i) v[i] = poly_eval(g_rows[static_cast<std::size_t>(i)], p);
            return v;
        };
        // Analytic Jacobians from the monomial lists.
        std::vector<std::vector<PolyRow>> d1(static_cast<std::size_t>(s)),
            d2(static_cast<std::size_t>(s));
        for (int i = 0; i < s; ++i) {
            for (int jv = 0; jv < k; ++jv)
                d1[static_cast<std::size_t>(i)].push_back(
                    poly_derivative(g_rows[static_cast<std::size_t>(i)], jv));
            for (int jv = k; jv < d; ++jv)
                d2[static_cast<std::size_t>(i)].push_back(
                    poly_derivative(g_rows[static_cast<std::size_t>(i)], jv));
        }
        auto dg1 = [d1, s, k](const Vec& p) {
            Mat J(s, k);
            for (int i = 0; i < s; ++i)
                for (int jv = 0; jv < k; ++jv)
                    J(i, jv) = poly_eval(d1[static_cast<std::size_t>(i)][static_cast<std::size_t>(jv)], p);
            return J;
        };
        auto dg2 = [d2, s](const Vec& p) {
            Mat J(s, s);
            for (int i = 0; i < s; ++i)
                for (int jv = 0; jv < s; ++jv)
                    J(i, jv) = poly_eval(d2[static_cast<std::size_t>(i)][static_cast<std::size_t>(jv)], p);
            return J;
        };
        manifold = ImplicitManifold(k, s, box, g, dg1, dg2, cfg.constraint_tol);
    }

    auto field_rows = cfg.field;
    auto f = [field_rows, k](const Vec& p) {
        Vec v(k);
        for (int i = 0; i < k; ++i) v[i] = poly_eval(field_rows[static_cast<std::size_t>(i)], p);
        return v;
    };

    std::vector<CoefficientBlock> blocks;
    for (const auto& b : cfg.blocks)
        blocks.push_back({PeriodicCoefficient::fourier(cfg.period, b.coefficient.constant,
                                                       b.coefficient.fourier,
                                                       b.coefficient.abs,
                                                       b.coefficient.abs_scale),
                          b.dim});

    std::optional<DelayPerturbation> pert;
    if (!cfg.perturbation.empty()) {
        auto rows = cfg.perturbation;
        const double omega = 2.0 * std::numbers::pi / cfg.period;
        auto h = [rows, k, d, omega](double t, const Vec& cur, const Vec& del) {
            Vec v = Vec::Zero(k);
            for (int i = 0; i < k; ++i) {
                double acc = 0.0;
                for (const PerturbationTerm& term : rows[static_cast<std::size_t>(i)]) {
                    double val = term.coef;
                    switch (term.time) {
                        case PerturbationTerm::Time::cos_t: val *= std::cos(term.mode * omega * t); break;
                        case PerturbationTerm::Time::sin_t: val *= std::sin(term.mode * omega * t); break;
                        case PerturbationTerm::Time::none: break;
                    }
                    for (int iv = 0; iv < d; ++iv) {
                        const int e = term.exponents[static_cast<std::size_t>(iv)];
                        if (e != 0) val *= std::pow(cur[iv], e);
                    }
                    for (int iv = 0; iv < d; ++iv) {
                        const int e = term.exponents[static_cast<std::size_t>(d + iv)];
                        if (e != 0) val *= std::pow(del[iv], e);
                    }
                    acc += val;
                }
                v[i] = acc;
            }
            return v;
        };
        pert = DelayPerturbation(cfg.lag.value(), h);
    }

    ProblemSpec spec(cfg.name, std::move(manifold), f, std::move(blocks), std::move(pert));

    // Store the resolved (post-normalization) configuration.
    ProblemConfig resolved = cfg;
    if (resolved.lag) resolved.lag = spec.lag();
    spec.set_config_text(canonical_config_text(resolved));
    return spec;
}

std::string canonical_config_text(const ProblemConfig& cfg) {
    return problem_config_to_json(cfg).dump();  // object keys are sorted
}

std::uint64_t spec_hash(const std::string& canonical_text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace perbranch
