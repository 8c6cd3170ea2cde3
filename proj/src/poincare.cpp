#include "perbranch/poincare.hpp"

#include <cmath>
#include <numbers>

namespace perbranch {

HistoryDiscretization HistoryDiscretization::chebyshev(int m, double lag) {
    if (m < 1) throw std::invalid_argument("history discretization needs m >= 1");
    if (!(lag > 0)) throw std::invalid_argument("history discretization needs lag > 0");
    HistoryDiscretization d;
    d.lag_ = lag;
    d.nodes_.resize(m + 1);
    d.weights_.resize(m + 1);
    for (int j = 0; j <= m; ++j) {
        // Ascending mesh: theta_j = -(r/2)(1 + cos(j pi / m)).
        d.nodes_[j] = -0.5 * lag * (1.0 + std::cos(j * std::numbers::pi / m));
        double w = (j == 0 || j == m) ? 0.5 : 1.0;
        if (j % 2 == 1) w = -w;
        d.weights_[j] = w;
    }
    d.nodes_.front() = -lag;
    d.nodes_.back() = 0.0;
    return d;
}

Vec HistoryDiscretization::interpolate(const std::vector<Vec>& values,
                                       double theta) const {
    if (values.size() != nodes_.size())
        throw std::invalid_argument("value count does not match the node mesh");
    for (std::size_t j = 0; j < nodes_.size(); ++j)
        if (theta == nodes_[j]) return values[j];
    double denom = 0.0;
    Vec num = Vec::Zero(values.front().size());
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        const double c = weights_[j] / (theta - nodes_[j]);
        num += c * values[j];
        denom += c;
    }
    return num / denom;
}

DiscretizedHistory DiscretizedHistory::constant(const HistoryDiscretization& d,
                                                const Vec& p) {
    DiscretizedHistory h;
    h.disc = d;
    h.values.assign(d.node_count(), p);
    return h;
}

DiscretizedHistory DiscretizedHistory::sample(const HistoryDiscretization& d,
                                              const std::function<Vec(double)>& f) {
    DiscretizedHistory h;
    h.disc = d;
    h.values.reserve(d.node_count());
    for (double theta : d.nodes()) h.values.push_back(f(theta));
    return h;
}

Vec DiscretizedHistory::flatten() const {
    const int n = state_dim();
    Vec flat(n * static_cast<int>(values.size()));
    for (std::size_t j = 0; j < values.size(); ++j)
        flat.segment(static_cast<int>(j) * n, n) = values[j];
    return flat;
}

DiscretizedHistory DiscretizedHistory::unflatten(const HistoryDiscretization& d,
                                                 int dim, const Vec& flat) {
    if (flat.size() != dim * d.node_count())
        throw std::invalid_argument("flat vector size mismatch");
    DiscretizedHistory h;
    h.disc = d;
    h.values.resize(d.node_count());
    for (int j = 0; j < d.node_count(); ++j) h.values[j] = flat.segment(j * dim, dim);
    return h;
}

namespace {

ProblemSpec coefficient_free(const ProblemSpec& spec) {
    std::vector<CoefficientBlock> ones;
    for (const auto& b : spec.blocks())
        ones.push_back({PeriodicCoefficient::constant(spec.period(), 1.0), b.dim});
    auto f = [&spec](const Vec& p) { return spec.f(p); };
    std::optional<DelayPerturbation> pert;
    if (spec.has_perturbation())
        pert = DelayPerturbation(spec.lag(), [&spec](double t, const Vec& c, const Vec& d) {
            return spec.perturbation()(t, c, d);
        });
    return ProblemSpec(spec.name() + "#phi", spec.manifold(), f, std::move(ones),
                       std::move(pert));
}

}  // namespace

Vec poincare_map(const ProblemSpec& spec, bool use_coefficient, const Vec& x0,
                 const IntegrateOptions& opts) {
    TrajectorySegment seg;
    if (use_coefficient) {
        seg = integrate_ode(spec, x0, 0.0, spec.period(), opts);
    } else {
        ProblemSpec plain = coefficient_free(spec);
        seg = integrate_ode(plain, x0, 0.0, spec.period(), opts);
    }
    if (seg.truncated())
        throw DomainError("x0 is not in the domain of the T-translation operator "
                          "(trajectory escaped before T)");
    return seg.eval(spec.period());
}

DiscretizedHistory q_operator(const ProblemSpec& spec, const DiscretizedHistory& phi,
                              const IntegrateOptions& opts) {
    return lambda_translation(spec, 0.0, phi, opts);
}

DiscretizedHistory lambda_translation(const ProblemSpec& spec, double lambda,
                                      const DiscretizedHistory& phi,
                                      const IntegrateOptions& opts) {
    const double T = spec.period();
    const double r = phi.disc.lag();
    if (spec.has_perturbation() && std::abs(r - spec.lag()) > 1e-12 * (1 + r))
        throw std::invalid_argument("history discretization lag differs from the problem lag");
    if (r > T * (1.0 + 1e-12))
        throw std::invalid_argument("translation operator needs T >= r");

    auto history_eval = [&phi](double theta) { return phi.eval(theta); };
    TrajectorySegment traj =
        integrate_dde(spec, lambda, history_eval, phi.disc.nodes(), T, opts);
    if (traj.truncated())
        throw DomainError("history is not in the domain of the translation operator "
                          "(trajectory escaped before T)");

    DiscretizedHistory out;
    out.disc = phi.disc;
    out.values.reserve(phi.disc.node_count());
    const bool constrained = !spec.manifold().is_flat();
    for (double theta : phi.disc.nodes()) {
        Vec v = traj.eval(T + theta);
        if (constrained) v = spec.manifold().project(v);
        out.values.push_back(std::move(v));
    }
    return out;
}

Vec shooting_residual(const ProblemSpec& spec, double lambda,
                      const DiscretizedHistory& phi, const IntegrateOptions& opts) {
    DiscretizedHistory image = lambda_translation(spec, lambda, phi, opts);
    return image.flatten() - phi.flatten();
}

int fixed_point_index(const MapFn& map, const Box& box, const DegreeOptions& opts) {
    auto displacement = [&map](const Vec& x) -> Vec { return x - map(x); };
    const DegreeResult deg = brouwer_degree(displacement, box, opts);
    if (!deg.certified)
        throw NumericError("fixed point index could not be certified: " + deg.diagnostic);
    return deg.value;
}

}  // namespace perbranch
