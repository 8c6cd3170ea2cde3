#include "perbranch/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace perbranch {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                 e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                 e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

struct Mesh {
    std::vector<double> t;
    std::vector<Vec> y;
    std::vector<Vec> dy;

    int locate(double time) const {
        auto it = std::upper_bound(t.begin(), t.end(), time);
        int i = static_cast<int>(it - t.begin()) - 1;
        return std::clamp(i, 0, static_cast<int>(t.size()) - 2);
    }

    Vec eval(double time) const {
        if (t.size() == 1) return y.front();
        const int i = locate(time);
        const double h = t[i + 1] - t[i];
        const double s = (time - t[i]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y[i] + (s3 - 2 * s2 + s) * h * dy[i] +
               (-2 * s3 + 3 * s2) * y[i + 1] + (s3 - s2) * h * dy[i + 1];
    }
};

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double tol) {
    double acc = 0.0;
    for (int i = 0; i < err.size(); ++i) {
        const double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sc;
        acc += q * q;
    }
    return std::sqrt(acc / err.size());
}

struct RunResult {
    bool truncated = false;
    double max_residual = 0.0;
};

// Adaptive RK5(4) driver appending nodes into `mesh` (which must already
// hold the initial node). Forced breakpoints are landed on exactly; the
// controller's step memory survives the clamping.
RunResult run_rk(const std::function<Vec(double, const Vec&)>& rhs, Mesh& mesh,
                 double t_end, const std::vector<double>& breakpoints,
                 const IntegrateOptions& opts, const ImplicitManifold* manifold) {
    RunResult result;
    double t = mesh.t.back();
    Vec y = mesh.y.back();
    Vec k1 = mesh.dy.back();
    if (!(t_end > t)) throw std::invalid_argument("integration span must be forward");

    std::size_t bp_index = 0;
    auto next_stop = [&]() {
        while (bp_index < breakpoints.size() &&
               breakpoints[bp_index] <= t + 1e-13 * (1 + std::abs(t)))
            ++bp_index;
        return bp_index < breakpoints.size() ? std::min(breakpoints[bp_index], t_end)
                                             : t_end;
    };

    double h = opts.initial_step;
    if (h <= 0) {
        const double scale = (1.0 + y.lpNorm<Eigen::Infinity>()) /
                             (1.0 + k1.lpNorm<Eigen::Infinity>());
        h = std::min(0.01 * (t_end - t), 0.1 * scale);
    }

    long steps = 0;
    Vec k2, k3, k4, k5, k6, k7, ynew, yerr;
    const bool constrained = manifold && !manifold->is_flat();

    while (t < t_end - 1e-13 * (1 + std::abs(t_end))) {
        if (++steps > opts.max_steps)
            throw StiffnessError("integration exceeded the step budget");
        const double stop = next_stop();
        double h_try = h;
        bool hit_stop = false;
        if (t + h_try >= stop - 1e-13 * (1 + std::abs(stop))) {
            h_try = stop - t;
            hit_stop = true;
        }

        k2 = rhs(t + c2 * h_try, y + h_try * (a21 * k1));
        k3 = rhs(t + c3 * h_try, y + h_try * (a31 * k1 + a32 * k2));
        k4 = rhs(t + c4 * h_try, y + h_try * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(t + c5 * h_try,
                 y + h_try * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(t + h_try,
                 y + h_try * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        ynew = y + h_try * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);

        double err;
        if (!ynew.allFinite()) {
            err = 1e10;
            k7 = k1;  // unused
        } else {
            k7 = rhs(t + h_try, ynew);
            yerr = h_try * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            err = error_norm(yerr, y, ynew, opts.tol);
            if (!std::isfinite(err)) err = 1e10;
        }

        if (err <= 1.0) {
            const double t_new = hit_stop ? stop : t + h_try;
            if (ynew.lpNorm<Eigen::Infinity>() > opts.escape_radius) {
                // Record the escaping node unprojected, flag, and stop.
                mesh.t.push_back(t_new);
                mesh.y.push_back(ynew);
                mesh.dy.push_back(k7.allFinite() ? k7 : Vec::Zero(ynew.size()));
                result.truncated = true;
                return result;
            }
            bool projected = false;
            if (constrained && opts.project) {
                Vec yp = manifold->project(ynew);
                projected = (yp - ynew).lpNorm<Eigen::Infinity>() > 0;
                ynew = std::move(yp);
            }
            Vec dynew = projected ? rhs(t_new, ynew) : k7;
            if (constrained) {
                result.max_residual =
                    std::max(result.max_residual, manifold->residual(ynew));
                // Constraint defect at the Hermite midpoint of the new interval.
                const Vec ymid = 0.5 * (y + ynew) + 0.125 * h_try * (k1 - dynew);
                if (manifold->ambient_box().contains(ymid, 1e-9))
                    result.max_residual =
                        std::max(result.max_residual, manifold->residual(ymid));
            }
            mesh.t.push_back(t_new);
            mesh.y.push_back(ynew);
            mesh.dy.push_back(dynew);
            t = t_new;
            y = ynew;
            k1 = dynew;
            const double grow =
                std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 1.0, 5.0);
            if (hit_stop)
                h = std::max(h, h_try * grow);  // keep the controller's memory
            else
                h = h_try * grow;
        } else {
            h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            if (h < 1e-14 * (1 + std::abs(t)))
                throw StiffnessError("step size underflow at t = " + std::to_string(t));
        }
    }
    return result;
}

std::vector<double> merge_breakpoints(std::vector<double> a,
                                      const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-13; }),
            a.end());
    return a;
}

}  // namespace

TrajectorySegment::TrajectorySegment(std::vector<double> nodes, std::vector<Vec> states,
                                     std::vector<Vec> derivatives,
                                     double max_constraint_residual, bool truncated)
    : nodes_(std::move(nodes)),
      states_(std::move(states)),
      derivatives_(std::move(derivatives)),
      max_constraint_residual_(max_constraint_residual),
      truncated_(truncated) {
    if (nodes_.size() < 2 || nodes_.size() != states_.size() ||
        nodes_.size() != derivatives_.size())
        throw std::invalid_argument("segment needs matching nodes/states/derivatives");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
        if (!(nodes_[i + 1] > nodes_[i]))
            throw std::invalid_argument("segment mesh must be strictly increasing");
}

int TrajectorySegment::locate(double t) const {
    const double slack = 1e-10 * (1.0 + std::abs(t0()) + std::abs(t1()));
    if (t < t0() - slack || t > t1() + slack)
        throw DomainError("evaluation at t = " + std::to_string(t) +
                          " outside segment [" + std::to_string(t0()) + ", " +
                          std::to_string(t1()) + "]");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    int i = static_cast<int>(it - nodes_.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(nodes_.size()) - 2);
}

Vec TrajectorySegment::eval(double t) const {
    const int i = locate(t);
    if (t == nodes_[i]) return states_[i];
    if (t == nodes_[i + 1]) return states_[i + 1];
    const double h = nodes_[i + 1] - nodes_[i];
    const double s = (t - nodes_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * states_[i] + (s3 - 2 * s2 + s) * h * derivatives_[i] +
           (-2 * s3 + 3 * s2) * states_[i + 1] + (s3 - s2) * h * derivatives_[i + 1];
}

Vec TrajectorySegment::eval_derivative(double t) const {
    const int i = locate(t);
    const double h = nodes_[i + 1] - nodes_[i];
    const double s = (t - nodes_[i]) / h;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * states_[i] +
            (3 * s2 - 4 * s + 1) * h * derivatives_[i] +
            (-6 * s2 + 6 * s) * states_[i + 1] +
            (3 * s2 - 2 * s) * h * derivatives_[i + 1]) /
           h;
}

double TrajectorySegment::max_norm(double a, double b) const {
    a = std::max(a, t0());
    b = std::min(b, t1());
    if (!(b >= a)) throw std::invalid_argument("max_norm: empty window");
    double best = std::max(eval(a).lpNorm<Eigen::Infinity>(),
                           eval(b).lpNorm<Eigen::Infinity>());
    // Per interval and component the Hermite cubic's interior extrema solve a
    // quadratic; enumerate those candidates exactly.
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        const double lo = std::max(a, nodes_[i]);
        const double hi = std::min(b, nodes_[i + 1]);
        if (!(hi > lo)) continue;
        const double h = nodes_[i + 1] - nodes_[i];
        if (nodes_[i] >= a && nodes_[i] <= b)
            best = std::max(best, states_[i].lpNorm<Eigen::Infinity>());
        for (int c = 0; c < dim(); ++c) {
            const double y0 = states_[i][c], y1 = states_[i + 1][c];
            const double d0 = derivatives_[i][c] * h, d1 = derivatives_[i + 1][c] * h;
            const double alpha = 2 * (y0 - y1) + d0 + d1;
            const double beta = -3 * (y0 - y1) - 2 * d0 - d1;
            const double gamma = d0;
            const double A = 3 * alpha, B = 2 * beta, C = gamma;
            double roots[2];
            int nroots = 0;
            if (std::abs(A) < 1e-300) {
                if (std::abs(B) > 1e-300) roots[nroots++] = -C / B;
            } else {
                const double disc = B * B - 4 * A * C;
                if (disc >= 0) {
                    const double sq = std::sqrt(disc);
                    roots[nroots++] = (-B + sq) / (2 * A);
                    roots[nroots++] = (-B - sq) / (2 * A);
                }
            }
            for (int j = 0; j < nroots; ++j) {
                const double s = roots[j];
                const double time = nodes_[i] + s * h;
                if (time <= lo || time >= hi) continue;
                const double v = std::abs(((alpha * s + beta) * s + gamma) * s + y0);
                best = std::max(best, v);
            }
        }
    }
    return best;
}

TrajectorySegment TrajectorySegment::join(const TrajectorySegment& left,
                                          const TrajectorySegment& right) {
    const double gap = std::abs(right.t0() - left.t1());
    if (gap > 1e-9 * (1.0 + std::abs(left.t1())))
        throw NumericError("interpolant gap: segment seams misaligned by " +
                           std::to_string(gap));
    // The right segment's seam node wins (it carries the projected state).
    std::vector<double> nodes(left.nodes_.begin(), left.nodes_.end() - 1);
    std::vector<Vec> states(left.states_.begin(), left.states_.end() - 1);
    std::vector<Vec> derivs(left.derivatives_.begin(), left.derivatives_.end() - 1);
    nodes.insert(nodes.end(), right.nodes_.begin(), right.nodes_.end());
    states.insert(states.end(), right.states_.begin(), right.states_.end());
    derivs.insert(derivs.end(), right.derivatives_.begin(), right.derivatives_.end());
    return TrajectorySegment(std::move(nodes), std::move(states), std::move(derivs),
                             std::max(left.max_constraint_residual_,
                                      right.max_constraint_residual_),
                             left.truncated_ || right.truncated_);
}

HistorySegment::HistorySegment(TrajectorySegment segment) : segment_(std::move(segment)) {
    if (std::abs(segment_.t1()) > 1e-12)
        throw std::invalid_argument("history segment must end at t = 0");
    if (!(segment_.t0() < 0))
        throw std::invalid_argument("history segment must start at t = -r < 0");
}

HistorySegment constant_history(const Vec& point, double lag) {
    if (!(lag > 0)) throw std::invalid_argument("history lag must be > 0");
    const Vec zero = Vec::Zero(point.size());
    return HistorySegment(
        TrajectorySegment({-lag, 0.0}, {point, point}, {zero, zero}, 0.0, false));
}

TrajectorySegment integrate_rhs(const std::function<Vec(double, const Vec&)>& rhs,
                                const Vec& start, double t0, double t1,
                                const std::vector<double>& forced_breakpoints,
                                const IntegrateOptions& opts) {
    Mesh mesh;
    mesh.t.push_back(t0);
    mesh.y.push_back(start);
    mesh.dy.push_back(rhs(t0, start));
    RunResult res = run_rk(rhs, mesh, t1, forced_breakpoints, opts, nullptr);
    return TrajectorySegment(std::move(mesh.t), std::move(mesh.y), std::move(mesh.dy),
                             0.0, res.truncated);
}

TrajectorySegment integrate_ode(const ProblemSpec& spec, const Vec& start,
                                double span_t0, double span_t1,
                                const IntegrateOptions& opts) {
    const ImplicitManifold& m = spec.manifold();
    Vec y0 = start;
    if (!m.is_flat() && opts.project) y0 = m.project(y0);
    auto rhs = [&spec](double t, const Vec& y) { return spec.unperturbed_rhs(t, y); };
    Mesh mesh;
    mesh.t.push_back(span_t0);
    mesh.y.push_back(y0);
    mesh.dy.push_back(rhs(span_t0, y0));
    const double residual0 = m.is_flat() ? 0.0 : m.residual(y0);
    RunResult res = run_rk(rhs, mesh, span_t1,
                           spec.coefficient_breakpoints(span_t0, span_t1), opts, &m);
    return TrajectorySegment(std::move(mesh.t), std::move(mesh.y), std::move(mesh.dy),
                             std::max(residual0, res.max_residual), res.truncated);
}

namespace {

TrajectorySegment integrate_dde_impl(const ProblemSpec& spec, double lambda,
                                     const std::function<Vec(double)>& history_eval,
                                     const TrajectorySegment& history_part, double r,
                                     double t1, const IntegrateOptions& opts) {
    const ImplicitManifold& m = spec.manifold();
    if (!(t1 > 0)) throw std::invalid_argument("integrate_dde needs t1 > 0");

    Vec y0 = history_eval(0.0);
    if (!m.is_flat() && opts.project) y0 = m.project(y0);

    Mesh mesh;  // integration part, from t = 0
    mesh.t.push_back(0.0);
    mesh.y.push_back(y0);

    const bool with_delay = lambda != 0.0 && spec.has_perturbation();
    auto delayed = [&](double t) -> Vec {
        const double tau = t - r;
        if (tau <= 0.0) return history_eval(std::max(tau, -r));
        return mesh.eval(tau);
    };
    std::function<Vec(double, const Vec&)> rhs;
    if (with_delay)
        rhs = [&](double t, const Vec& y) { return spec.rhs(t, y, delayed(t), lambda); };
    else  // the delay term vanishes; reduce to the unperturbed equation
        rhs = [&spec](double t, const Vec& y) { return spec.unperturbed_rhs(t, y); };
    mesh.dy.push_back(rhs(0.0, y0));

    // Method of steps: force mesh points at the derivative-jump times
    // r, 2r, ... so delayed lookups never read an unfinished interval.
    std::vector<double> seams;
    if (with_delay)
        for (double s = r; s < t1 - 1e-12 * (1 + t1); s += r) seams.push_back(s);
    std::vector<double> breaks =
        merge_breakpoints(std::move(seams), spec.coefficient_breakpoints(0.0, t1));

    const double residual0 = m.is_flat() ? 0.0 : m.residual(y0);
    RunResult res = run_rk(rhs, mesh, t1, breaks, opts, &m);

    TrajectorySegment tail(std::move(mesh.t), std::move(mesh.y), std::move(mesh.dy),
                           std::max(residual0, res.max_residual), res.truncated);
    return TrajectorySegment::join(history_part, tail);
}

}  // namespace

TrajectorySegment integrate_dde(const ProblemSpec& spec, double lambda,
                                const HistorySegment& history, double t1,
                                const IntegrateOptions& opts) {
    if (spec.has_perturbation() &&
        std::abs(history.lag() - spec.lag()) > 1e-12 * (1 + spec.lag()))
        throw std::invalid_argument("history lag does not match the problem lag");
    auto eval = [&history](double theta) { return history.eval(theta); };
    return integrate_dde_impl(spec, lambda, eval, history.segment(), history.lag(), t1,
                              opts);
}

TrajectorySegment integrate_dde(const ProblemSpec& spec, double lambda,
                                const std::function<Vec(double)>& history,
                                const std::vector<double>& history_nodes, double t1,
                                const IntegrateOptions& opts) {
    const double r = -history_nodes.front();
    if (spec.has_perturbation() && std::abs(r - spec.lag()) > 1e-12 * (1 + spec.lag()))
        throw std::invalid_argument("history lag does not match the problem lag");
    std::vector<double> nodes = history_nodes;
    if (nodes.size() < 2 || std::abs(nodes.front() + r) > 1e-12 * (1 + r) ||
        std::abs(nodes.back()) > 1e-12)
        throw std::invalid_argument("history nodes must span [-r, 0]");
    nodes.front() = -r;
    nodes.back() = 0.0;

    // Five-point finite-difference derivative at each node, stencil shifted
    // to stay inside [-r, 0]; weights from the scaled Vandermonde system.
    const double h = std::max(1e-5 * r, 1e-9);
    std::vector<Vec> states(nodes.size());
    std::vector<Vec> derivs(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        states[i] = history(nodes[i]);
        const double base = std::clamp(nodes[i], -r + 2 * h, -2 * h);
        Eigen::Matrix<double, 5, 5> V;
        for (int row = 0; row < 5; ++row) {
            const double u = (base + (row - 2) * h - nodes[i]) / h;
            double p = 1.0;
            for (int col = 0; col < 5; ++col) {
                V(col, row) = p;
                p *= u;
            }
        }
        Eigen::Matrix<double, 5, 1> e1v = Eigen::Matrix<double, 5, 1>::Zero();
        e1v(1) = 1.0;
        const Eigen::Matrix<double, 5, 1> w = V.partialPivLu().solve(e1v);
        Vec d = Vec::Zero(states[i].size());
        for (int row = 0; row < 5; ++row)
            d += (w(row) / h) * history(base + (row - 2) * h);
        derivs[i] = d;
    }
    TrajectorySegment history_part(std::move(nodes), std::move(states),
                                   std::move(derivs), 0.0, false);
    return integrate_dde_impl(spec, lambda, history, history_part, r, t1, opts);
}

}  // namespace perbranch
