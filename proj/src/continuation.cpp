#include "perbranch/continuation.hpp"

#include <algorithm>
#include <cmath>

namespace perbranch {

const char* to_string(BranchTermination t) {
    switch (t) {
        case BranchTermination::lambda_max_reached: return "lambda_max_reached";
        case BranchTermination::norm_escape: return "norm_escape";
        case BranchTermination::boundary_of_region: return "boundary_of_region";
        case BranchTermination::step_failure: return "step_failure";
    }
    return "unknown";
}

namespace {

double orbit_oscillation(const TrajectorySegment& orbit) {
    Vec lo = orbit.states().front(), hi = orbit.states().front();
    for (const Vec& s : orbit.states()) {
        lo = lo.cwiseMin(s);
        hi = hi.cwiseMax(s);
    }
    return (hi - lo).lpNorm<Eigen::Infinity>();
}

void classify_trivial(const ProblemSpec& spec, PeriodicPair& pair) {
    if (pair.lambda != 0.0) {
        pair.is_trivial = false;
        return;
    }
    const Vec p = pair.history.values.front();
    pair.is_trivial = orbit_oscillation(pair.orbit) <= 1e-8 &&
                      spec.phi(p).lpNorm<Eigen::Infinity>() <= 1e-8;
}

PeriodicPair assemble_pair(const ProblemSpec& spec, double lambda,
                           const DiscretizedHistory& history, double residual_norm,
                           const ContinuationOptions& opts) {
    PeriodicPair pair;
    pair.lambda = lambda;
    pair.history = history;
    auto eval = [&history](double theta) { return history.eval(theta); };
    pair.orbit = integrate_dde(spec, lambda, eval, history.disc.nodes(), spec.period(),
                               opts.integrate);
    pair.residual_norm = residual_norm;
    classify_trivial(spec, pair);
    return pair;
}

struct NewtonState {
    DiscretizedHistory phi;
    Vec residual;
    double norm = 0.0;
};

Vec flatten_residual(const ProblemSpec& spec, double lambda,
                     const DiscretizedHistory& phi, const ContinuationOptions& opts) {
    return shooting_residual(spec, lambda, phi, opts.integrate);
}

// Forward-difference Jacobian of the shooting residual in the history nodes.
Mat residual_jacobian(const ProblemSpec& spec, double lambda,
                      const DiscretizedHistory& phi, const Vec& base,
                      const ContinuationOptions& opts) {
    const int dim = phi.state_dim();
    const int n = dim * phi.disc.node_count();
    Mat J(n, n);
    Vec flat = phi.flatten();
    for (int j = 0; j < n; ++j) {
        const double h = opts.fd_step * (1.0 + std::abs(flat[j]));
        Vec bumped = flat;
        bumped[j] += h;
        DiscretizedHistory phi_b = DiscretizedHistory::unflatten(phi.disc, dim, bumped);
        J.col(j) = (flatten_residual(spec, lambda, phi_b, opts) - base) / h;
    }
    return J;
}

Vec residual_lambda_derivative(const ProblemSpec& spec, double lambda,
                               const DiscretizedHistory& phi, const Vec& base,
                               const ContinuationOptions& opts) {
    const double h = opts.fd_step * (1.0 + std::abs(lambda));
    return (flatten_residual(spec, lambda + h, phi, opts) - base) / h;
}

}  // namespace

PeriodicPair make_trivial_pair(const ProblemSpec& spec, const Vec& zero,
                               const ContinuationOptions& opts) {
    const double lag = spec.has_perturbation() ? spec.lag() : spec.period();
    HistoryDiscretization disc =
        HistoryDiscretization::chebyshev(opts.history_nodes, lag);
    Vec p = zero;
    if (!spec.manifold().is_flat()) p = spec.manifold().project(p);
    DiscretizedHistory history = DiscretizedHistory::constant(disc, p);
    const Vec res = flatten_residual(spec, 0.0, history, opts);
    return assemble_pair(spec, 0.0, history, res.lpNorm<Eigen::Infinity>(), opts);
}

TrivialPairsResult find_trivial_pairs(const ProblemSpec& spec, const Box& box,
                                      const ContinuationOptions& opts,
                                      const DegreeOptions& degree_opts) {
    TrivialPairsResult result;
    auto f = [&spec](const Vec& p) { return spec.f(p); };
    result.degree = field_degree(spec.manifold(), f, box, degree_opts);
    for (const ZeroRecord& z : result.degree.brouwer.zeros) {
        PeriodicPair pair = make_trivial_pair(spec, z.location, opts);
        pair.index = z.degenerate ? std::nullopt : std::optional<int>(z.sign);
        pair.uncertified = z.degenerate;
        result.pairs.push_back(std::move(pair));
    }
    return result;
}

PeriodicPair solve_periodic(const ProblemSpec& spec, double lambda,
                            const DiscretizedHistory& guess,
                            const ContinuationOptions& opts) {
    DiscretizedHistory phi = guess;
    if (!spec.manifold().is_flat())
        for (Vec& v : phi.values) v = spec.manifold().project(v);

    const int dim = phi.state_dim();
    std::vector<double> history;
    Vec res = flatten_residual(spec, lambda, phi, opts);
    double norm = res.lpNorm<Eigen::Infinity>();
    history.push_back(norm);

    for (int it = 0; it < opts.max_corrector_iters; ++it) {
        if (norm <= opts.newton_res_tol)
            return assemble_pair(spec, lambda, phi, norm, opts);
        Mat J = residual_jacobian(spec, lambda, phi, res, opts);
        Vec step = J.partialPivLu().solve(res);
        if (!step.allFinite())
            throw ConvergenceError("shooting Newton produced a non-finite step", history);

        // Damped update: backtrack until the residual decreases.
        double alpha = 1.0;
        Vec flat = phi.flatten();
        DiscretizedHistory best = phi;
        Vec best_res = res;
        double best_norm = norm;
        bool improved = false;
        for (int half = 0; half < 7; ++half) {
            DiscretizedHistory trial =
                DiscretizedHistory::unflatten(phi.disc, dim, flat - alpha * step);
            Vec trial_res;
            try {
                trial_res = flatten_residual(spec, lambda, trial, opts);
            } catch (const NumericError&) {
                alpha *= 0.5;
                continue;
            }
            const double trial_norm = trial_res.lpNorm<Eigen::Infinity>();
            if (trial_norm < best_norm) {
                best = std::move(trial);
                best_res = std::move(trial_res);
                best_norm = trial_norm;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        const double step_norm = step.lpNorm<Eigen::Infinity>();
        if (!improved) {
            if (norm <= 10 * opts.newton_res_tol)
                return assemble_pair(spec, lambda, phi, norm, opts);
            throw ConvergenceError("shooting Newton stagnated (residual " +
                                       std::to_string(norm) + ")",
                                   history);
        }
        phi = std::move(best);
        res = std::move(best_res);
        norm = best_norm;
        history.push_back(norm);
        if (step_norm < opts.newton_step_tol * (1.0 + flat.lpNorm<Eigen::Infinity>()) &&
            norm <= 10 * opts.newton_res_tol)
            return assemble_pair(spec, lambda, phi, norm, opts);
    }
    if (norm <= 10 * opts.newton_res_tol)
        return assemble_pair(spec, lambda, phi, norm, opts);
    throw ConvergenceError(
        "shooting Newton did not reach the residual tolerance (last " +
            std::to_string(norm) + ")",
        history);
}

namespace {

struct Unknown {
    double lambda;
    Vec state;  // flattened history values

    Vec stacked(double state_scale) const {
        Vec u(state.size() + 1);
        u[0] = lambda;
        u.tail(state.size()) = state / state_scale;
        return u;
    }
};

}  // namespace

Branch continue_branch(const ProblemSpec& spec, const PeriodicPair& origin,
                       const BranchRegion& region, const ContinuationOptions& opts) {
    if (!origin.is_trivial)
        throw std::invalid_argument("continue_branch must start from a trivial pair");
    if (region.state_box.dim() != spec.state_dim())
        throw std::invalid_argument("state box dimension mismatch");

    Branch branch;
    branch.pairs.push_back(origin);
    branch.termination = BranchTermination::step_failure;

    const int dim = origin.history.state_dim();
    const int n_state = dim * origin.history.disc.node_count();
    const double scale = opts.state_scale;

    Unknown current{origin.lambda, origin.history.flatten()};

    // Initial tangent from the linearization at the origin:
    // J_w dw = -R_lambda, tangent ~ (1, dw), oriented toward growing lambda.
    Vec tangent;
    try {
        const Vec base = flatten_residual(spec, current.lambda, origin.history, opts);
        Mat J = residual_jacobian(spec, current.lambda, origin.history, base, opts);
        Vec rl = residual_lambda_derivative(spec, current.lambda, origin.history, base, opts);
        Eigen::PartialPivLU<Mat> lu(J);
        Vec dw = lu.solve(-rl);
        if (!dw.allFinite()) throw NumericError("singular shooting Jacobian at the origin");
        tangent = Vec(n_state + 1);
        tangent[0] = 1.0;
        tangent.tail(n_state) = dw / scale;
        tangent.normalize();
    } catch (const NumericError&) {
        branch.termination = BranchTermination::step_failure;
        return branch;
    }

    double h = opts.initial_step;
    int failures_in_a_row = 0;

    while (static_cast<int>(branch.pairs.size()) < opts.max_pairs) {
        const Vec u_now = current.stacked(scale);
        const Vec u_pred = u_now + h * tangent;

        // Corrector: Newton on [shooting residual; tangent-plane constraint].
        double lam = u_pred[0];
        Vec w = u_pred.tail(n_state) * scale;
        bool converged = false;
        double res_norm = 0.0;
        int iters_used = 0;
        for (int it = 0; it < opts.max_corrector_iters; ++it) {
            iters_used = it + 1;
            DiscretizedHistory phi =
                DiscretizedHistory::unflatten(origin.history.disc, dim, w);
            Vec res;
            try {
                res = flatten_residual(spec, lam, phi, opts);
            } catch (const NumericError&) {
                break;
            }
            res_norm = res.lpNorm<Eigen::Infinity>();
            Vec u_cur(n_state + 1);
            u_cur[0] = lam;
            u_cur.tail(n_state) = w / scale;
            const double plane = tangent.dot(u_cur - u_pred);
            if (res_norm <= opts.newton_res_tol && std::abs(plane) <= 1e-10) {
                converged = true;
                break;
            }
            Mat J = residual_jacobian(spec, lam, phi, res, opts);
            Vec rl = residual_lambda_derivative(spec, lam, phi, res, opts);
            Mat A(n_state + 1, n_state + 1);
            A.block(0, 0, n_state, 1) = rl;
            A.block(0, 1, n_state, n_state) = J;
            A(n_state, 0) = tangent[0];
            A.block(n_state, 1, 1, n_state) = tangent.tail(n_state).transpose() / scale;
            Vec rhs(n_state + 1);
            rhs.head(n_state) = res;
            rhs[n_state] = plane;
            Vec delta = A.partialPivLu().solve(rhs);
            if (!delta.allFinite()) break;
            lam -= delta[0];
            w -= delta.tail(n_state);
            if (delta.lpNorm<Eigen::Infinity>() <
                opts.newton_step_tol * (1.0 + std::abs(lam) + w.lpNorm<Eigen::Infinity>())) {
                DiscretizedHistory phi2 =
                    DiscretizedHistory::unflatten(origin.history.disc, dim, w);
                try {
                    res = flatten_residual(spec, lam, phi2, opts);
                } catch (const NumericError&) {
                    break;
                }
                res_norm = res.lpNorm<Eigen::Infinity>();
                converged = res_norm <= opts.newton_res_tol;
                break;
            }
        }

        if (!converged) {
            ++failures_in_a_row;
            h *= 0.5;
            if (h < opts.min_step || failures_in_a_row > 40) {
                branch.termination = BranchTermination::step_failure;
                return branch;
            }
            continue;
        }
        failures_in_a_row = 0;

        // Accept the pair.
        DiscretizedHistory phi = DiscretizedHistory::unflatten(origin.history.disc, dim, w);
        PeriodicPair pair;
        try {
            pair = assemble_pair(spec, lam, phi, res_norm, opts);
        } catch (const NumericError&) {
            branch.termination = BranchTermination::norm_escape;
            return branch;
        }
        if (pair.orbit.truncated()) {
            branch.termination = BranchTermination::norm_escape;
            return branch;
        }
        Unknown next{lam, w};
        const Vec u_next = next.stacked(scale);
        branch.arclength += (u_next - u_now).norm();
        if (pair.lambda <= 1e-10 && !pair.is_trivial) ++branch.lambda_zero_nontrivial;
        branch.pairs.push_back(pair);

        // Secant tangent for the next prediction.
        Vec new_tangent = u_next - u_now;
        if (new_tangent.norm() > 0) tangent = new_tangent.normalized();

        // Termination verdicts on the accepted pair.
        if (pair.lambda >= region.lambda_max) {
            branch.termination = BranchTermination::lambda_max_reached;
            return branch;
        }
        if (pair.lambda < region.lambda_min - 1e-12) {
            branch.termination = BranchTermination::boundary_of_region;
            return branch;
        }
        bool outside = false;
        double worst = 0.0;
        for (const Vec& v : phi.values) {
            if (!region.state_box.contains(v)) outside = true;
            worst = std::max(worst, v.lpNorm<Eigen::Infinity>());
        }
        if (worst > opts.escape_norm) {
            branch.termination = BranchTermination::norm_escape;
            return branch;
        }
        if (outside) {
            branch.termination = BranchTermination::boundary_of_region;
            return branch;
        }

        current = std::move(next);
        if (iters_used <= 5) h = std::min(h * 1.3, opts.max_step);  // easy success
    }
    branch.termination = BranchTermination::step_failure;
    return branch;
}

StartingPair pair_to_starting_pair(const PeriodicPair& pair) {
    StartingPair sp;
    sp.lambda = pair.lambda;
    sp.history.disc = pair.history.disc;
    sp.history.values.reserve(pair.history.disc.node_count());
    for (double theta : pair.history.disc.nodes())
        sp.history.values.push_back(pair.orbit.eval(theta));
    return sp;
}

}  // namespace perbranch
