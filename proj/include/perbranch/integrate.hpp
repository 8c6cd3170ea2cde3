#pragma once

#include <functional>

#include "perbranch/fields.hpp"

namespace perbranch {

struct IntegrateOptions {
    double tol = 1e-10;          // local error per step (mixed abs/rel)
    double escape_radius = 1e8;  // blow-up detection threshold (inf-norm)
    double initial_step = 0.0;   // 0 = automatic
    long max_steps = 4000000;
    bool project = true;         // constraint stabilization after each step
};

/// Dense-output solution piece on [t0, t1]: strictly increasing node mesh,
/// states and derivatives per node, piecewise cubic Hermite in between.
/// Evaluation outside [t0, t1] throws; no extrapolation.
class TrajectorySegment {
  public:
    TrajectorySegment() = default;
    TrajectorySegment(std::vector<double> nodes, std::vector<Vec> states,
                      std::vector<Vec> derivatives, double max_constraint_residual,
                      bool truncated);

    double t0() const { return nodes_.front(); }
    double t1() const { return nodes_.back(); }
    int dim() const { return states_.empty() ? 0 : static_cast<int>(states_.front().size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<Vec>& states() const { return states_; }
    const std::vector<Vec>& derivatives() const { return derivatives_; }

    /// True when integration stopped early at the escape radius; the segment
    /// then covers only the reached span.
    bool truncated() const { return truncated_; }
    double max_constraint_residual() const { return max_constraint_residual_; }

    Vec eval(double t) const;
    Vec eval_derivative(double t) const;

    /// Max inf-norm of the state over [a, b], refined beyond the node mesh.
    double max_norm(double a, double b) const;

    /// Joins two segments sharing one seam node (right.t0() == left.t1()).
    static TrajectorySegment join(const TrajectorySegment& left,
                                  const TrajectorySegment& right);

  private:
    int locate(double t) const;
    std::vector<double> nodes_;
    std::vector<Vec> states_;
    std::vector<Vec> derivatives_;
    double max_constraint_residual_ = 0.0;
    bool truncated_ = false;
};

/// History function on [-r, 0].
class HistorySegment {
  public:
    explicit HistorySegment(TrajectorySegment segment);
    double lag() const { return -segment_.t0(); }
    Vec eval(double theta) const { return segment_.eval(theta); }
    const TrajectorySegment& segment() const { return segment_; }

  private:
    TrajectorySegment segment_;
};

/// Constant history at the given point.
HistorySegment constant_history(const Vec& point, double lag);

/// Integrates zdot = a(t) Phi(z) from `start` over [span_t0, span_t1] with an
/// adaptive Runge-Kutta 5(4) pair and cubic Hermite dense output. Each
/// accepted step is followed by manifold projection. Blow-up truncates the
/// segment and flags it; step underflow throws StiffnessError.
TrajectorySegment integrate_ode(const ProblemSpec& spec, const Vec& start,
                                double span_t0, double span_t1,
                                const IntegrateOptions& opts = {});

/// Integrates the delay equation by the method of steps from the given
/// history; the returned segment covers [-r, t1] with the history prepended.
TrajectorySegment integrate_dde(const ProblemSpec& spec, double lambda,
                                const HistorySegment& history, double t1,
                                const IntegrateOptions& opts = {});

/// Same, with the history given as a raw evaluator on [-lag, 0] (used by the
/// discretized translation operators; `history_nodes` seeds the prepended
/// part of the output segment).
TrajectorySegment integrate_dde(const ProblemSpec& spec, double lambda,
                                const std::function<Vec(double)>& history,
                                const std::vector<double>& history_nodes, double t1,
                                const IntegrateOptions& opts = {});

/// Generic driver: integrates ydot = rhs(t, y) over [t0, t1] without any
/// manifold attached (used for the index machinery's plain flows and tests).
TrajectorySegment integrate_rhs(const std::function<Vec(double, const Vec&)>& rhs,
                                const Vec& start, double t0, double t1,
                                const std::vector<double>& forced_breakpoints,
                                const IntegrateOptions& opts = {});

}  // namespace perbranch
