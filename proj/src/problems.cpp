#include "perbranch/problems.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

namespace perbranch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Monomial mono(double coef, std::vector<int> exps) { return Monomial{coef, std::move(exps)}; }

PerturbationTerm pterm(double coef, std::vector<int> exps,
                       PerturbationTerm::Time time = PerturbationTerm::Time::none,
                       int mode = 1) {
    PerturbationTerm t;
    t.coef = coef;
    t.exponents = std::move(exps);
    t.time = time;
    t.mode = mode;
    return t;
}

CoefficientConfig const_coeff(double value) {
    CoefficientConfig c;
    c.constant = value;
    return c;
}

CoefficientConfig sin_coeff(double constant, double sin_amp) {
    CoefficientConfig c;
    c.constant = constant;
    if (sin_amp != 0.0) c.fourier.push_back({1, 0.0, sin_amp});
    return c;
}

ProblemConfig circle_rotation_config() {
    ProblemConfig cfg;
    cfg.name = "circle-rotation";
    cfg.dimension = 2;
    cfg.period = kTwoPi;
    cfg.lag = 1.0;
    cfg.ambient_box = {{-2.0, 2.0}, {-2.0, 2.0}};
    cfg.constraints = {{mono(1, {2, 0}), mono(1, {0, 2}), mono(-1, {0, 0})}};
    cfg.blocks = {{1, sin_coeff(1.0, 1.0)}};
    cfg.field = {{mono(-1, {0, 1})}};
    // The forcing vanishes with y so its tangent lift stays bounded at the
    // split points (+-1, 0), which the orbit passes through.
    cfg.perturbation = {{pterm(0.5, {0, 1, 0, 0}, PerturbationTerm::Time::sin_t),
                         pterm(0.15, {0, 1, 1, 0}, PerturbationTerm::Time::sin_t)}};
    return cfg;
}

ProblemConfig sphere_gradient_config() {
    ProblemConfig cfg;
    cfg.name = "sphere-gradient";
    cfg.dimension = 3;
    cfg.period = kTwoPi;
    cfg.lag = 1.0;
    cfg.ambient_box = {{-1.5, 1.5}, {-1.5, 1.5}, {-1.5, 1.5}};
    cfg.constraints = {{mono(1, {2, 0, 0}), mono(1, {0, 2, 0}), mono(1, {0, 0, 2}),
                        mono(-1, {0, 0, 0})}};
    cfg.blocks = {{2, sin_coeff(1.0, 1.0)}};
    // First two components of the tangential height gradient e_z - z * xi.
    cfg.field = {{mono(-1, {1, 0, 1})}, {mono(-1, {0, 1, 1})}};
    cfg.perturbation = {
        {pterm(0.1, {0, 0, 0, 0, 0, 0}, PerturbationTerm::Time::sin_t)}, {}};
    return cfg;
}

ProblemConfig linear_forced_1d_config() {
    ProblemConfig cfg;
    cfg.name = "linear-forced-1d";
    cfg.dimension = 1;
    cfg.period = kTwoPi;
    cfg.lag = 1.0;
    cfg.ambient_box = {{-50.0, 50.0}};
    cfg.blocks = {{1, const_coeff(1.0)}};
    cfg.field = {{mono(-1, {1})}};
    cfg.perturbation = {{pterm(1.0, {0, 0}, PerturbationTerm::Time::sin_t)}};
    return cfg;
}

void check_two_species(const TwoSpeciesParams& p) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0))
            throw ConfigError(std::string("two-species: ") + what + " must be positive");
    };
    positive(p.a11, "a11");
    positive(p.a12, "a12");
    positive(p.a21, "a21");
    positive(p.a22, "a22");
    positive(p.a1, "average of a1");
    positive(p.a2, "average of a2");
    positive(p.lag, "lag");
    positive(p.period, "period");
}

std::vector<PerturbationRow> two_species_interaction(const TwoSpeciesParams& p) {
    // x1 (a12 x2(t-r) - a11 x1(t-r)),  x2 (a22 x2(t-r) - a21 x1(t-r))
    return {{pterm(p.a12, {1, 0, 0, 1}), pterm(-p.a11, {1, 0, 1, 0})},
            {pterm(p.a22, {0, 1, 0, 1}), pterm(-p.a21, {0, 1, 1, 0})}};
}

ProblemConfig two_species_config(const TwoSpeciesParams& p) {
    check_two_species(p);
    ProblemConfig cfg;
    cfg.name = "two-species";
    cfg.dimension = 2;
    cfg.period = p.period;
    cfg.lag = p.lag;
    cfg.ambient_box = {{-10.0, 10.0}, {-10.0, 10.0}};
    cfg.blocks = {{1, sin_coeff(p.a1, p.a1_sin)}, {1, sin_coeff(p.a2, p.a2_sin)}};
    cfg.field = {{mono(1, {1, 0})}, {mono(1, {0, 1})}};
    cfg.perturbation = two_species_interaction(p);
    return cfg;
}

ProblemConfig two_species_steady_config(const TwoSpeciesParams& p) {
    check_two_species(p);
    ProblemConfig cfg;
    cfg.name = "two-species-steady";
    cfg.dimension = 2;
    cfg.period = p.period;
    cfg.lag = p.lag;
    cfg.ambient_box = {{-10.0, 10.0}, {-10.0, 10.0}};
    cfg.blocks = {{2, const_coeff(1.0)}};
    cfg.field = {{mono(p.a1, {1, 0}), mono(p.a12, {1, 1}), mono(-p.a11, {2, 0})},
                 {mono(p.a2, {0, 1}), mono(p.a22, {0, 2}), mono(-p.a21, {1, 1})}};
    cfg.perturbation = two_species_interaction(p);
    return cfg;
}

ProblemConfig paper_linear_3d_config() {
    const Linear3dMatrices m = linear3d_matrices();

    ProblemConfig cfg;
    cfg.name = "paper-linear-3d";
    cfg.dimension = 3;
    cfg.period = kTwoPi;
    cfg.lag = 1.0;
    cfg.ambient_box = {{-100.0, 100.0}, {-100.0, 100.0}, {-100.0, 100.0}};
    // B(t) = diag(|cos t|, 2+sin t, 2+sin t) * U with U unit upper triangular,
    // so the blocks carry the diagonal factors and the field is U x.
    CoefficientConfig abs_cos;
    abs_cos.abs = PeriodicCoefficient::AbsPrimitive::abs_cos;
    abs_cos.abs_scale = 1.0;
    cfg.blocks = {{1, abs_cos}, {2, sin_coeff(2.0, 1.0)}};
    cfg.field = {{mono(1, {1, 0, 0})},
                 {mono(1, {0, 1, 0}), mono(1, {0, 0, 1})},
                 {mono(1, {0, 0, 1})}};

    // Forcing in the original coordinates: (sin t, 0.2 x1(t-r), 0); the
    // reduced term is E^{-1} times that, folded symbolically row by row.
    std::vector<PerturbationRow> calH = {
        {pterm(1.0, {0, 0, 0, 0, 0, 0}, PerturbationTerm::Time::sin_t)},
        {pterm(0.2, {0, 0, 0, 1, 0, 0})},
        {}};
    cfg.perturbation.assign(3, {});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double w = m.E_inverse(i, j);
            if (w == 0.0) continue;
            for (PerturbationTerm t : calH[static_cast<std::size_t>(j)]) {
                t.coef *= w;
                cfg.perturbation[static_cast<std::size_t>(i)].push_back(std::move(t));
            }
        }
    return cfg;
}

}  // namespace

Linear3dMatrices linear3d_matrices() {
    Linear3dMatrices m;
    m.E = Mat(3, 3);
    m.E << 0, 1, 0, 1, 0, -1, 0, -1, 1;
    Eigen::PartialPivLU<Mat> lu(m.E);
    m.det_E = lu.determinant();
    if (std::abs(m.det_E) < 1e-12)
        throw NumericError("linear 3d system: E is numerically singular (det " +
                           std::to_string(m.det_E) + ")");
    m.E_inverse = lu.inverse();
    const double inv_defect =
        (m.E * m.E_inverse - Mat::Identity(3, 3)).cwiseAbs().maxCoeff();
    if (inv_defect > 1e-14)
        throw NumericError("linear 3d system: E inverse check failed (defect " +
                           std::to_string(inv_defect) + ")");
    m.A = [](double t) {
        const double s = 2.0 + std::sin(t);
        const double c = std::abs(std::cos(t));
        Mat A(3, 3);
        A << 0, s, s, c, 0, -s, 0, -s, 0;
        return A;
    };
    const Mat Einv = m.E_inverse;
    auto A = m.A;
    m.B = [Einv, A](double t) -> Mat { return Einv * A(t); };
    m.B_factored = [](double t) -> Mat {
        Mat D = Mat::Zero(3, 3);
        D(0, 0) = std::abs(std::cos(t));
        D(1, 1) = 2.0 + std::sin(t);
        D(2, 2) = 2.0 + std::sin(t);
        Mat U(3, 3);
        U << 1, 0, 0, 0, 1, 1, 0, 0, 1;
        return D * U;
    };
    return m;
}

const std::vector<ProblemRegistryEntry>& problem_registry() {
    static const std::vector<ProblemRegistryEntry> registry = {
        {"circle-rotation",
         "rotation field on the unit circle given implicitly, sin-modulated "
         "coefficient, bounded tangential forcing",
         circle_rotation_config},
        {"sphere-gradient",
         "height-gradient flow on the unit sphere given implicitly, "
         "sin-modulated coefficient, bounded forcing",
         sphere_gradient_config},
        {"linear-forced-1d",
         "scalar xdot = -x + lambda sin t; the branch of periodic responses "
         "has the closed form amplitude lambda/sqrt(2)",
         linear_forced_1d_config},
        {"two-species",
         "weakly coupled competing-species model: per-species growth blocks, "
         "delayed quadratic interaction scaled by lambda",
         []() { return two_species_config(TwoSpeciesParams{}); }},
        {"two-species-steady",
         "two-species variant with the full interaction field as the "
         "autonomous part and the delayed interaction added by lambda",
         []() { return two_species_steady_config(TwoSpeciesParams{}); }},
        {"paper-linear-3d",
         "3D linear system E xdot = A(t) x reduced to separated-variables "
         "blocks with |cos| and 2+sin coefficient factors, plus a bounded "
         "delay-using forcing",
         paper_linear_3d_config},
    };
    return registry;
}

ProblemConfig registry_config(const std::string& name) {
    for (const auto& entry : problem_registry())
        if (entry.name == name) return entry.config();
    throw ConfigError("unknown problem name: " + name);
}

ProblemSpec build_problem(const std::string& name_or_path) {
    for (const auto& entry : problem_registry())
        if (entry.name == name_or_path) return assemble_problem(entry.config());
    if (std::filesystem::exists(name_or_path))
        return assemble_problem(load_problem_config(name_or_path));
    throw ConfigError("problem \"" + name_or_path +
                      "\" is neither a registry name nor an existing file");
}

ProblemSpec build_paper_linear_3d() { return assemble_problem(paper_linear_3d_config()); }

ProblemSpec build_two_species(const TwoSpeciesParams& params) {
    return assemble_problem(two_species_config(params));
}

ProblemSpec build_two_species_steady(const TwoSpeciesParams& params) {
    return assemble_problem(two_species_steady_config(params));
}

ProblemSpec build_circle_rotation() { return assemble_problem(circle_rotation_config()); }

ProblemSpec build_sphere_gradient() { return assemble_problem(sphere_gradient_config()); }

ProblemSpec build_linear_forced_1d() {
    return assemble_problem(linear_forced_1d_config());
}

}  // namespace perbranch
