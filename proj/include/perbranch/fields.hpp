#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perbranch/manifold.hpp"

namespace perbranch {

/// T-periodic scalar coefficient a(t) with its cached average <a>.
///
/// Coefficients may be code-defined (arbitrary evaluator) or closed-form:
/// constant + finite Fourier series + an optional |cos|/|sin| primitive of
/// the base frequency. Closed-form coefficients expose their kink times so
/// integrators can break steps there.
class PeriodicCoefficient {
  public:
    struct FourierTerm {
        int mode = 1;
        double cos_coef = 0.0;
        double sin_coef = 0.0;
    };
    enum class AbsPrimitive { none, abs_cos, abs_sin };

    PeriodicCoefficient(double period, std::function<double(double)> eval);

    static PeriodicCoefficient fourier(double period, double constant,
                                       std::vector<FourierTerm> terms = {},
                                       AbsPrimitive abs = AbsPrimitive::none,
                                       double abs_scale = 0.0);

    static PeriodicCoefficient constant(double period, double value) {
        return fourier(period, value);
    }

    double operator()(double t) const { return eval_(t); }
    double period() const { return period_; }

    /// Cached quadrature value of (1/T) Int_0^T a.
    double average() const { return average_; }

    /// Running integral phi_a(t) = Int_0^t a(s) ds (signed for t < 0).
    double integral(double t) const;

    /// Kink times of the |cos|/|sin| primitive inside [t0, t1], ascending.
    std::vector<double> breakpoints(double t0, double t1) const;

    bool closed_form() const { return closed_form_; }
    double constant_part() const { return constant_; }
    const std::vector<FourierTerm>& fourier_terms() const { return terms_; }
    AbsPrimitive abs_primitive() const { return abs_; }
    double abs_scale() const { return abs_scale_; }

  private:
    double period_;
    std::function<double(double)> eval_;
    double average_ = 0.0;
    bool closed_form_ = false;
    double constant_ = 0.0;
    std::vector<FourierTerm> terms_;
    AbsPrimitive abs_ = AbsPrimitive::none;
    double abs_scale_ = 0.0;
};

/// Average of a coefficient; free-function form of the cached value.
inline double average(const PeriodicCoefficient& c) { return c.average(); }

/// phi_a(t), the time rescaling map of the separated-variables equation.
inline double time_rescale(const PeriodicCoefficient& c, double t) {
    return c.integral(t);
}

/// Delay term h(t, current, delayed) -> R^k, T-periodic in t.
class DelayPerturbation {
  public:
    using Fn = std::function<Vec(double, const Vec&, const Vec&)>;

    DelayPerturbation(double lag, Fn h);

    double lag() const { return lag_; }
    Vec operator()(double t, const Vec& current, const Vec& delayed) const {
        return h_(t, current, delayed);
    }

    /// Copy with the lag replaced (used by lag normalization).
    DelayPerturbation with_lag(double lag) const { return DelayPerturbation(lag, h_); }

  private:
    double lag_;
    Fn h_;
};

struct CoefficientBlock {
    PeriodicCoefficient coefficient;
    int dim = 1;
};

struct ValidationIssue {
    std::string check;
    std::string detail;
};

struct ValidationReport {
    bool passed = true;
    std::vector<ValidationIssue> failures;
    std::vector<std::string> warnings;
};

/// Full problem data for
///   zdot(t) = a(t) Phi(z(t)) + lambda Xi(t, z(t), z(t - r))
/// on a (possibly flat) implicit manifold. Phi is the tangent lift of the
/// intrinsic field f; Xi is the tangent lift of the delay term h. For weakly
/// coupled systems several blocks carry their own coefficients a_i, each
/// weighting its slice of f.
///
/// Immutable after construction; all evaluators must be pure.
class ProblemSpec {
  public:
    using FieldFn = std::function<Vec(const Vec&)>;  // f : box -> R^k

    ProblemSpec(std::string name, ImplicitManifold manifold, FieldFn f,
                std::vector<CoefficientBlock> blocks,
                std::optional<DelayPerturbation> perturbation);

    const std::string& name() const { return name_; }
    const ImplicitManifold& manifold() const { return manifold_; }
    double period() const { return period_; }
    /// Lag normalized into (0, period] at construction.
    double lag() const { return lag_; }
    bool has_perturbation() const { return perturbation_.has_value(); }
    const DelayPerturbation& perturbation() const { return *perturbation_; }
    const std::vector<CoefficientBlock>& blocks() const { return blocks_; }
    int state_dim() const { return manifold_.ambient_dim(); }
    int intrinsic_dim() const { return manifold_.intrinsic_dim(); }

    /// Intrinsic field f evaluated on the ambient box.
    Vec f(const Vec& p) const { return f_(p); }

    /// Blockwise a_i(t) * f_i(p), still in R^k.
    Vec weighted_f(double t, const Vec& p) const;

    /// Tangent field Phi = lift(f) (all coefficients replaced by 1).
    Vec phi(const Vec& p) const;

    /// lift(weighted_f): right-hand side of the unperturbed equation.
    Vec unperturbed_rhs(double t, const Vec& p) const;

    /// Full right-hand side including the delay term.
    Vec rhs(double t, const Vec& p, const Vec& delayed, double lambda) const;

    /// Union of coefficient kink times in [t0, t1].
    std::vector<double> coefficient_breakpoints(double t0, double t1) const;

    /// Checks the standing hypotheses (nonzero averages, T-periodicity,
    /// tangency of the lifted field, lag normalization). Never throws for
    /// check failures; reports them.
    ValidationReport validate() const;

    /// Resolved configuration (set by the config/problems layer when the
    /// spec comes from a file or the registry; empty otherwise).
    const std::string& config_text() const { return config_text_; }
    void set_config_text(std::string text) { config_text_ = std::move(text); }

  private:
    std::string name_;
    ImplicitManifold manifold_;
    FieldFn f_;
    std::vector<CoefficientBlock> blocks_;
    std::optional<DelayPerturbation> perturbation_;
    double period_ = 0.0;
    double lag_ = 0.0;
    std::string config_text_;
};

/// Normalizes a raw lag into (0, period].
double normalize_lag(double lag, double period);

}  // namespace perbranch
