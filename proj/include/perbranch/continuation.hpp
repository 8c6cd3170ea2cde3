#pragma once

#include "perbranch/poincare.hpp"

namespace perbranch {

/// A pair (lambda, zeta) with zeta a discretized T-periodic solution.
struct PeriodicPair {
    double lambda = 0.0;
    DiscretizedHistory history;
    TrajectorySegment orbit;  // covers [-r, T]
    double residual_norm = 0.0;
    bool is_trivial = false;
    std::optional<int> index;  // sign of the field Jacobian at a trivial pair
    bool uncertified = false;  // set when the underlying zero was degenerate
};

struct StartingPair {
    double lambda = 0.0;
    DiscretizedHistory history;
};

enum class BranchTermination {
    lambda_max_reached,
    norm_escape,
    boundary_of_region,
    step_failure,
};

const char* to_string(BranchTermination t);

/// Region in which a branch is continued: lambda range times a state box.
struct BranchRegion {
    double lambda_min = 0.0;
    double lambda_max = 10.0;
    Box state_box;
};

struct Branch {
    std::vector<PeriodicPair> pairs;  // pairs.front() is the trivial origin
    BranchTermination termination = BranchTermination::step_failure;
    double arclength = 0.0;
    int lambda_zero_nontrivial = 0;  // nonconstant T-periodic pairs seen at lambda = 0
};

struct ContinuationOptions {
    int history_nodes = 16;        // Chebyshev-Lobatto degree m
    double newton_res_tol = 1e-9;  // accepted-pair residual target
    double newton_step_tol = 1e-10;
    int max_corrector_iters = 30;
    double fd_step = 1e-7;         // forward differences of the shooting map
    double initial_step = 0.05;
    double max_step = 0.5;
    double min_step = 1e-6;
    double state_scale = 1.0;      // arclength weighting of the state block
    int max_pairs = 100000;
    double escape_norm = 1e6;      // norm_escape verdict threshold
    IntegrateOptions integrate{1e-12, 1e8, 0.0, 4000000, true};
};

struct TrivialPairsResult {
    std::vector<PeriodicPair> pairs;
    FieldDegreeResult degree;  // degree of the field over the search box
};

/// Zeros of the autonomous field over the box, each wrapped as a trivial
/// T-periodic pair, along with the degree of the box (the branch-existence
/// hypothesis). Degenerate zeros are included flagged, not dropped.
TrivialPairsResult find_trivial_pairs(const ProblemSpec& spec, const Box& box,
                                      const ContinuationOptions& opts = {},
                                      const DegreeOptions& degree_opts = {});

/// Damped Newton on the shooting residual at fixed lambda.
/// Throws ConvergenceError (with the residual history) on stagnation.
PeriodicPair solve_periodic(const ProblemSpec& spec, double lambda,
                            const DiscretizedHistory& guess,
                            const ContinuationOptions& opts = {});

/// Pseudo-arclength continuation of T-periodic pairs from a trivial origin.
Branch continue_branch(const ProblemSpec& spec, const PeriodicPair& origin,
                       const BranchRegion& region, const ContinuationOptions& opts = {});

/// Restriction of the orbit to [-r, 0], resampled on the history mesh.
StartingPair pair_to_starting_pair(const PeriodicPair& pair);

/// Wraps a field zero as a trivial pair (constant history and orbit).
PeriodicPair make_trivial_pair(const ProblemSpec& spec, const Vec& zero,
                               const ContinuationOptions& opts = {});

}  // namespace perbranch
