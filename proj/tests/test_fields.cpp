#include <doctest.h>

#include <cmath>
#include <numbers>

#include "perbranch/problems.hpp"

using namespace perbranch;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

PeriodicCoefficient two_plus_sin() {
    return PeriodicCoefficient::fourier(kTwoPi, 2.0, {{1, 0.0, 1.0}});
}

PeriodicCoefficient abs_cos() {
    return PeriodicCoefficient::fourier(kTwoPi, 0.0, {},
                                        PeriodicCoefficient::AbsPrimitive::abs_cos,
                                        1.0);
}
}  // namespace

TEST_CASE("coefficient averages") {
    CHECK(two_plus_sin().average() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(abs_cos().average() ==
          doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-10));
    // Odd integrand averages to zero; downstream validation must reject it.
    PeriodicCoefficient pure_sin =
        PeriodicCoefficient::fourier(kTwoPi, 0.0, {{1, 0.0, 1.0}});
    CHECK(std::abs(pure_sin.average()) <= 1e-10);
}

TEST_CASE("running integral of the coefficient") {
    PeriodicCoefficient one = PeriodicCoefficient::constant(kTwoPi, 1.0);
    for (double t : {-1.0, 0.0, 0.7, 3.2, 9.0})
        CHECK(one.integral(t) == doctest::Approx(t).epsilon(1e-12).scale(1));

    PeriodicCoefficient one_sin =
        PeriodicCoefficient::fourier(kTwoPi, 1.0, {{1, 0.0, 1.0}});
    CHECK(one_sin.integral(kTwoPi) == doctest::Approx(kTwoPi).epsilon(1e-10));
    CHECK(two_plus_sin().integral(kTwoPi) ==
          doctest::Approx(2.0 * kTwoPi).epsilon(1e-10));
    // Closed form of the running integral: t + 1 - cos t.
    for (double t : {0.3, 1.9, 4.4})
        CHECK(one_sin.integral(t) ==
              doctest::Approx(t + 1.0 - std::cos(t)).epsilon(1e-10));
}

TEST_CASE("average is phase-shift invariant") {
    for (double shift : {0.0, 0.4, 1.3, 5.0}) {
        PeriodicCoefficient shifted(kTwoPi, [shift](double t) {
            return 2.0 + std::sin(t + shift) + 0.25 * std::cos(2 * (t + shift));
        });
        CHECK(shifted.average() == doctest::Approx(2.0).epsilon(1e-10));
    }
}

TEST_CASE("integral shift identity") {
    PeriodicCoefficient c = two_plus_sin();
    for (int i = 0; i < 12; ++i) {
        const double t = -3.0 + 0.9 * i;
        CHECK(c.integral(t + kTwoPi) - c.integral(t) ==
              doctest::Approx(kTwoPi * c.average()).epsilon(1e-10));
    }
}

TEST_CASE("abs-primitive breakpoints") {
    auto bp = abs_cos().breakpoints(0.0, kTwoPi);
    REQUIRE(bp.size() == 2);
    CHECK(bp[0] == doctest::Approx(std::numbers::pi / 2));
    CHECK(bp[1] == doctest::Approx(3 * std::numbers::pi / 2));
}

TEST_CASE("lag normalization") {
    const double T = kTwoPi;
    CHECK(normalize_lag(1.0, T) == 1.0);
    CHECK(normalize_lag(T, T) == T);
    CHECK(normalize_lag(2.5 * T, T) == doctest::Approx(0.5 * T).epsilon(1e-12));
    CHECK(normalize_lag(2.0 * T, T) == doctest::Approx(T).epsilon(1e-12));
    CHECK_THROWS_AS(normalize_lag(-1.0, T), std::invalid_argument);

    // A built spec normalizes the lag it was given.
    TwoSpeciesParams params;
    params.lag = 2.5 * params.period;
    ProblemSpec spec = build_two_species(params);
    CHECK(spec.lag() == doctest::Approx(0.5 * params.period).epsilon(1e-12));
}

TEST_CASE("validation of well-formed and broken specs") {
    ProblemSpec good = build_two_species();
    ValidationReport r = good.validate();
    CHECK(r.passed);
    CHECK(!r.warnings.empty());  // the Lipschitz/uniqueness caveat

    // Zero-average coefficient fails validation.
    std::vector<CoefficientBlock> blocks;
    blocks.push_back({PeriodicCoefficient::fourier(kTwoPi, 0.0, {{1, 0.0, 1.0}}), 1});
    ProblemSpec bad("zero-average", ImplicitManifold::flat(1, Box::cube(1, -1, 1)),
                    [](const Vec& x) { return Vec(-x); }, blocks, std::nullopt);
    ValidationReport rb = bad.validate();
    CHECK(!rb.passed);
    REQUIRE(!rb.failures.empty());
    CHECK(rb.failures.front().check == "nonzero-average");

    // A perturbation of period T/2 is T-periodic, so it passes.
    DelayPerturbation half(1.0, [](double t, const Vec&, const Vec&) {
        Vec v(1);
        v[0] = std::sin(2.0 * t);
        return v;
    });
    ProblemSpec divisor("half-period", ImplicitManifold::flat(1, Box::cube(1, -1, 1)),
                        [](const Vec& x) { return Vec(-x); },
                        {{PeriodicCoefficient::constant(kTwoPi, 1.0), 1}}, half);
    CHECK(divisor.validate().passed);

    // A genuinely non-T-periodic perturbation fails.
    DelayPerturbation off(1.0, [](double t, const Vec&, const Vec&) {
        Vec v(1);
        v[0] = std::sin(0.37 * t);
        return v;
    });
    ProblemSpec broken("off-period", ImplicitManifold::flat(1, Box::cube(1, -1, 1)),
                       [](const Vec& x) { return Vec(-x); },
                       {{PeriodicCoefficient::constant(kTwoPi, 1.0), 1}}, off);
    CHECK(!broken.validate().passed);
}

TEST_CASE("blockwise weighting of the field") {
    ProblemSpec spec = build_paper_linear_3d();
    REQUIRE(spec.blocks().size() == 2);
    Vec x(3);
    x << 1.0, 2.0, 3.0;
    const double t = 0.9;
    const Vec w = spec.weighted_f(t, x);
    const double a1 = std::abs(std::cos(t));
    const double a2 = 2.0 + std::sin(t);
    CHECK(w[0] == doctest::Approx(a1 * 1.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(a2 * 5.0).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(a2 * 3.0).epsilon(1e-12));

    // The same right-hand side must match B(t) x entrywise.
    const Linear3dMatrices mats = linear3d_matrices();
    const Vec bx = mats.B(t) * x;
    CHECK((w - bx).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("two-species positivity validation") {
    TwoSpeciesParams params;
    params.a12 = -0.5;
    CHECK_THROWS_AS((void)build_two_species(params), ConfigError);
    params = {};
    params.a2 = 0.0;
    CHECK_THROWS_AS((void)build_two_species(params), ConfigError);
}
