#include "perbranch/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace perbranch {

namespace {

constexpr double kQuadTol = 1e-11;
constexpr int kQuadMaxDepth = 48;
constexpr int kQuadFallbackPanels = 1 << 20;

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_scalar(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson(a, b, fa, fm, fb);
    const double result =
        adaptive_simpson(f, a, b, fa, fm, fb, whole, kQuadTol, kQuadMaxDepth);
    if (std::isfinite(result)) return result;
    // Uniform fallback.
    double acc = 0.0;
    const double h = (b - a) / kQuadFallbackPanels;
    for (int i = 0; i < kQuadFallbackPanels; ++i) {
        const double x0 = a + i * h;
        acc += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    return acc;
}

// Integral over [a, b] split at the integrand's kinks.
double integrate_with_breaks(const std::function<double(double)>& f,
                             const std::vector<double>& breaks, double a, double b) {
    const double sign = (b >= a) ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> pts;
    pts.push_back(lo);
    for (double t : breaks)
        if (t > lo + 1e-14 && t < hi - 1e-14) pts.push_back(t);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        acc += integrate_scalar(f, pts[i], pts[i + 1]);
    return sign * acc;
}

}  // namespace

PeriodicCoefficient::PeriodicCoefficient(double period,
                                         std::function<double(double)> eval)
    : period_(period), eval_(std::move(eval)) {
    if (!(period_ > 0)) throw std::invalid_argument("coefficient period must be > 0");
    if (!eval_) throw std::invalid_argument("coefficient evaluator required");
    average_ = integral(period_) / period_;
}

PeriodicCoefficient PeriodicCoefficient::fourier(double period, double constant,
                                                 std::vector<FourierTerm> terms,
                                                 AbsPrimitive abs, double abs_scale) {
    if (!(period > 0)) throw std::invalid_argument("coefficient period must be > 0");
    const double omega = 2.0 * std::numbers::pi / period;
    auto eval = [constant, terms, abs, abs_scale, omega](double t) {
        double v = constant;
        for (const auto& term : terms)
            v += term.cos_coef * std::cos(term.mode * omega * t) +
                 term.sin_coef * std::sin(term.mode * omega * t);
        switch (abs) {
            case AbsPrimitive::abs_cos: v += abs_scale * std::abs(std::cos(omega * t)); break;
            case AbsPrimitive::abs_sin: v += abs_scale * std::abs(std::sin(omega * t)); break;
            case AbsPrimitive::none: break;
        }
        return v;
    };
    PeriodicCoefficient c(period, eval);
    c.closed_form_ = true;
    c.constant_ = constant;
    c.terms_ = std::move(terms);
    c.abs_ = abs;
    c.abs_scale_ = abs_scale;
    // Recompute the average now that kink times are known, so the quadrature
    // splits at the |cos|/|sin| corners.
    c.average_ = c.integral(period) / period;
    return c;
}

double PeriodicCoefficient::integral(double t) const {
    return integrate_with_breaks(eval_, breakpoints(std::min(0.0, t), std::max(0.0, t)),
                                 0.0, t);
}

std::vector<double> PeriodicCoefficient::breakpoints(double t0, double t1) const {
    std::vector<double> out;
    if (abs_ == AbsPrimitive::none || abs_scale_ == 0.0 || t1 <= t0) return out;
    // |cos(w t)| kinks at w t = pi/2 + k pi; |sin(w t)| at w t = k pi.
    const double omega = 2.0 * std::numbers::pi / period_;
    const double phase = (abs_ == AbsPrimitive::abs_cos) ? 0.5 * std::numbers::pi : 0.0;
    const double spacing = std::numbers::pi / omega;
    const double first = phase / omega;
    const long k0 = static_cast<long>(std::floor((t0 - first) / spacing)) - 1;
    for (long k = k0;; ++k) {
        const double t = first + k * spacing;
        if (t > t1) break;
        if (t >= t0) out.push_back(t);
    }
    return out;
}

DelayPerturbation::DelayPerturbation(double lag, Fn h) : lag_(lag), h_(std::move(h)) {
    if (!(lag_ > 0)) throw std::invalid_argument("delay lag must be > 0");
    if (!h_) throw std::invalid_argument("delay evaluator required");
}

double normalize_lag(double lag, double period) {
    if (!(lag > 0) || !(period > 0))
        throw std::invalid_argument("lag and period must be positive");
    if (lag <= period) return lag;
    const double n = std::floor(lag / period);
    double r = lag - n * period;
    if (r <= 0) r += period;  // multiples of the period map to the period itself
    return r;
}

ProblemSpec::ProblemSpec(std::string name, ImplicitManifold manifold, FieldFn f,
                         std::vector<CoefficientBlock> blocks,
                         std::optional<DelayPerturbation> perturbation)
    : name_(std::move(name)),
      manifold_(std::move(manifold)),
      f_(std::move(f)),
      blocks_(std::move(blocks)),
      perturbation_(std::move(perturbation)) {
    if (!f_) throw std::invalid_argument("autonomous field f required");
    if (blocks_.empty()) throw std::invalid_argument("at least one coefficient block");
    int total = 0;
    for (const auto& b : blocks_) {
        if (b.dim <= 0) throw std::invalid_argument("block dimension must be >= 1");
        total += b.dim;
    }
    if (total != manifold_.intrinsic_dim())
        throw std::invalid_argument("block dimensions must sum to the intrinsic dimension");
    period_ = blocks_.front().coefficient.period();
    for (const auto& b : blocks_)
        if (std::abs(b.coefficient.period() - period_) > 1e-12 * period_)
            throw std::invalid_argument("all blocks must share one period");
    if (!manifold_.is_flat() && blocks_.size() > 1)
        throw std::invalid_argument("block coefficients are supported on flat state spaces only");
    if (perturbation_) {
        lag_ = normalize_lag(perturbation_->lag(), period_);
        if (lag_ != perturbation_->lag()) perturbation_ = perturbation_->with_lag(lag_);
    }
}

Vec ProblemSpec::weighted_f(double t, const Vec& p) const {
    Vec v = f_(p);
    int offset = 0;
    for (const auto& b : blocks_) {
        v.segment(offset, b.dim) *= b.coefficient(t);
        offset += b.dim;
    }
    return v;
}

Vec ProblemSpec::phi(const Vec& p) const { return manifold_.tangent_lift(p, f_(p)); }

Vec ProblemSpec::unperturbed_rhs(double t, const Vec& p) const {
    return manifold_.tangent_lift(p, weighted_f(t, p));
}

Vec ProblemSpec::rhs(double t, const Vec& p, const Vec& delayed, double lambda) const {
    Vec u = weighted_f(t, p);
    if (lambda != 0.0 && perturbation_)
        u += lambda * (*perturbation_)(t, p, delayed);
    return manifold_.tangent_lift(p, u);
}

std::vector<double> ProblemSpec::coefficient_breakpoints(double t0, double t1) const {
    std::vector<double> out;
    for (const auto& b : blocks_) {
        auto bp = b.coefficient.breakpoints(t0, t1);
        out.insert(out.end(), bp.begin(), bp.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              out.end());
    return out;
}

ValidationReport ProblemSpec::validate() const {
    ValidationReport report;
    auto fail = [&report](std::string check, std::string detail) {
        report.passed = false;
        report.failures.push_back({std::move(check), std::move(detail)});
    };

    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const auto& c = blocks_[i].coefficient;
        if (std::abs(c.average()) < 1e-12)
            fail("nonzero-average", "coefficient of block " + std::to_string(i) +
                                        " has average " + std::to_string(c.average()));
        // Statistical periodicity check, 256 samples.
        double worst = 0.0;
        for (int j = 0; j < 256; ++j) {
            const double t = period_ * (j + 0.21) / 256.0;
            worst = std::max(worst, std::abs(c(t + period_) - c(t)));
        }
        if (worst > 1e-12 * (1.0 + std::abs(c.average())))
            fail("coefficient-periodicity",
                 "block " + std::to_string(i) + " deviation " + std::to_string(worst));
    }

    if (perturbation_) {
        if (!(lag_ > 0.0) || lag_ > period_ * (1.0 + 1e-12))
            fail("lag-normalization", "lag " + std::to_string(lag_) +
                                          " not in (0, T] after normalization");
        double worst = 0.0;
        QuasiRandomSequence seq(state_dim(), 7);
        for (int j = 0; j < 32; ++j) {
            const Vec p = seq.next_in(manifold_.ambient_box());
            const Vec q = seq.next_in(manifold_.ambient_box());
            const double t = period_ * (j + 0.37) / 32.0;
            Vec d = (*perturbation_)(t + period_, p, q) - (*perturbation_)(t, p, q);
            worst = std::max(worst, d.lpNorm<Eigen::Infinity>());
        }
        if (worst > 1e-10) fail("perturbation-periodicity", "deviation " + std::to_string(worst));
    }

    if (!manifold_.is_flat()) {
        // Tangency of the lifted field at sampled on-manifold points: by
        // construction the lift solves the linear tangency system, so this
        // check guards the supplied Jacobians.
        QuasiRandomSequence seq(state_dim(), 11);
        double worst = 0.0;
        int tested = 0;
        for (int j = 0; j < 64 && tested < 16; ++j) {
            Vec p = seq.next_in(manifold_.ambient_box());
            try {
                p = manifold_.project(p);
            } catch (const NumericError&) {
                continue;
            }
            if (!manifold_.ambient_box().contains(p)) continue;
            ++tested;
            const Vec v = phi(p);
            Mat grad(manifold_.constraint_dim(), state_dim());
            grad.leftCols(manifold_.intrinsic_dim()) = manifold_.dg1(p);
            grad.rightCols(manifold_.constraint_dim()) = manifold_.dg2(p);
            const double err = (grad * v).lpNorm<Eigen::Infinity>() /
                               (1.0 + v.lpNorm<Eigen::Infinity>());
            worst = std::max(worst, err);
        }
        if (worst > 1e-8) fail("tangency", "worst relative defect " + std::to_string(worst));
    }

    report.warnings.push_back(
        "uniqueness of solutions requires locally Lipschitz field evaluators; "
        "this is not checked and is the caller's responsibility");
    return report;
}

}  // namespace perbranch
