#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perbranch/fields.hpp"

namespace perbranch {

/// Malformed or unknown configuration content (a usage error, not a
/// numerical failure).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// coef * prod_i x_i^{e_i}; the exponent tuple length fixes the variable count.
struct Monomial {
    double coef = 0.0;
    std::vector<int> exponents;
};

using PolyRow = std::vector<Monomial>;

double poly_eval(const PolyRow& row, const Vec& x);
/// Partial derivative of the row with respect to variable `var`.
PolyRow poly_derivative(const PolyRow& row, int var);

/// One term of a delay-perturbation row:
/// coef * trig(mode * omega * t) * prod cur_i^{e_i} * prod del_i^{e_{d+i}}.
struct PerturbationTerm {
    enum class Time { none, cos_t, sin_t };
    double coef = 0.0;
    std::vector<int> exponents;  // length 2d: current state then delayed state
    Time time = Time::none;
    int mode = 1;
};

using PerturbationRow = std::vector<PerturbationTerm>;

struct CoefficientConfig {
    double constant = 0.0;
    std::vector<PeriodicCoefficient::FourierTerm> fourier;
    PeriodicCoefficient::AbsPrimitive abs = PeriodicCoefficient::AbsPrimitive::none;
    double abs_scale = 0.0;
};

struct BlockConfig {
    int dim = 1;
    CoefficientConfig coefficient;
};

/// Parsed problem file: dimensions, polynomial constraint/field tables,
/// Fourier coefficient lists, lag, period, ambient box.
struct ProblemConfig {
    std::string name;
    int dimension = 0;  // ambient d = k + s
    double period = 0.0;
    std::optional<double> lag;
    std::vector<std::pair<double, double>> ambient_box;  // d rows (lo, hi)
    double constraint_tol = 1e-9;
    std::vector<PolyRow> constraints;        // s rows in d variables
    std::vector<BlockConfig> blocks;         // sum of dims = k
    std::vector<PolyRow> field;              // k rows in d variables
    std::vector<PerturbationRow> perturbation;  // k rows in 2d variables (optional)
};

ProblemConfig parse_problem_config(const nlohmann::json& j);
nlohmann::json problem_config_to_json(const ProblemConfig& cfg);

ProblemConfig load_problem_config(const std::string& path);

/// Builds the runnable spec; performs lag normalization and stores the
/// resolved configuration text on the spec.
ProblemSpec assemble_problem(const ProblemConfig& cfg);

/// Canonical serialization (sorted keys, shortest round-trip numbers).
std::string canonical_config_text(const ProblemConfig& cfg);

/// FNV-1a hash of the canonical configuration text.
std::uint64_t spec_hash(const std::string& canonical_text);

}  // namespace perbranch
