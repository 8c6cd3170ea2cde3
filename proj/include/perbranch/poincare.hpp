#pragma once

#include "perbranch/degree.hpp"
#include "perbranch/integrate.hpp"

namespace perbranch {

/// Chebyshev-Lobatto mesh on [-r, 0] with barycentric interpolation data;
/// the finite model of the history space C([-r, 0], N).
class HistoryDiscretization {
  public:
    static HistoryDiscretization chebyshev(int m, double lag);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int degree() const { return node_count() - 1; }
    double lag() const { return lag_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Barycentric evaluation of data given per node.
    Vec interpolate(const std::vector<Vec>& values, double theta) const;

  private:
    double lag_ = 0.0;
    std::vector<double> nodes_;    // ascending, nodes.front() = -r, nodes.back() = 0
    std::vector<double> weights_;  // barycentric weights
};

/// History function sampled on a HistoryDiscretization.
struct DiscretizedHistory {
    HistoryDiscretization disc;
    std::vector<Vec> values;

    static DiscretizedHistory constant(const HistoryDiscretization& d, const Vec& p);
    static DiscretizedHistory sample(const HistoryDiscretization& d,
                                     const std::function<Vec(double)>& f);

    Vec eval(double theta) const { return disc.interpolate(values, theta); }
    int state_dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }

    Vec flatten() const;
    static DiscretizedHistory unflatten(const HistoryDiscretization& d, int dim,
                                        const Vec& flat);
};

/// Poincare T-translation operator: endpoint at T of the unperturbed flow
/// from x0. With use_coefficient the equation is zdot = a(t) Phi(z),
/// otherwise zdot = Phi(z). A trajectory truncated at the escape radius
/// means x0 left the operator's (open) domain: DomainError.
Vec poincare_map(const ProblemSpec& spec, bool use_coefficient, const Vec& x0,
                 const IntegrateOptions& opts = {});

/// Discretized infinite-dimensional translation operator of the unperturbed
/// equation: integrates from phi(0) over [0, T] and samples at T + theta.
/// Requires T >= r (guaranteed by lag normalization). The output depends on
/// phi only through phi(0).
DiscretizedHistory q_operator(const ProblemSpec& spec, const DiscretizedHistory& phi,
                              const IntegrateOptions& opts = {});

/// Translation operator of the full delay equation at parameter lambda;
/// at lambda = 0 it coincides with q_operator.
DiscretizedHistory lambda_translation(const ProblemSpec& spec, double lambda,
                                      const DiscretizedHistory& phi,
                                      const IntegrateOptions& opts = {});

/// Nodewise fixed-point defect of the translation operator, flattened:
/// zero iff phi extends to a T-periodic solution.
Vec shooting_residual(const ProblemSpec& spec, double lambda,
                      const DiscretizedHistory& phi, const IntegrateOptions& opts = {});

/// Fixed point index of a self-map on a box: the degree of (identity - map).
/// Admissibility on the boundary is checked by sampling.
int fixed_point_index(const MapFn& map, const Box& box, const DegreeOptions& opts = {});

}  // namespace perbranch
