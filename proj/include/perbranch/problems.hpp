#pragma once

#include "perbranch/config.hpp"

namespace perbranch {

struct ProblemRegistryEntry {
    std::string name;
    std::string documentation;
    std::function<ProblemConfig()> config;
};

/// Built-in problems, by name.
const std::vector<ProblemRegistryEntry>& problem_registry();

/// Config for a registry problem; throws ConfigError for unknown names.
ProblemConfig registry_config(const std::string& name);

/// Builds a problem from a registry name or, failing that, a config file path.
ProblemSpec build_problem(const std::string& name_or_path);

/// Matrices of the 3D linear system E xdot = A(t) x: E, its verified inverse,
/// A(t), the assembled B(t) = E^{-1} A(t), and the displayed diagonal-times-
/// unit-triangular factorization of B(t).
struct Linear3dMatrices {
    Mat E;
    Mat E_inverse;
    double det_E = 0.0;
    std::function<Mat(double)> A;
    std::function<Mat(double)> B;           // assembled numerically
    std::function<Mat(double)> B_factored;  // diag(|cos t|, 2+sin t, 2+sin t) * U
};

Linear3dMatrices linear3d_matrices();

ProblemSpec build_paper_linear_3d();

struct TwoSpeciesParams {
    double a1 = 1.0, a2 = 1.0;          // intrinsic growth (constant part)
    double a1_sin = 0.0, a2_sin = 0.0;  // optional sin-mode modulation
    double a11 = 1.0, a22 = 1.0;        // intraspecific strengths
    double a12 = 0.5, a21 = 0.5;        // interspecific strengths
    double lag = 1.0;
    double period = 6.283185307179586476925286766559;
};

/// Weakly coupled two-species build: per-species growth blocks, the delayed
/// interaction multiplied by lambda. All strengths must be positive and the
/// growth coefficients must have positive averages.
ProblemSpec build_two_species(const TwoSpeciesParams& params = {});

/// Steady-state variant: the full interaction field is the autonomous part
/// (a single unit coefficient) and lambda adds the delayed interaction on
/// top, so the coexistence equilibria move with lambda.
ProblemSpec build_two_species_steady(const TwoSpeciesParams& params = {});

ProblemSpec build_circle_rotation();
ProblemSpec build_sphere_gradient();
ProblemSpec build_linear_forced_1d();

}  // namespace perbranch
