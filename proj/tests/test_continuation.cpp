#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "perbranch/continuation.hpp"
#include "perbranch/problems.hpp"

using namespace perbranch;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ProblemSpec scalar_spec(const char* name, std::function<Vec(const Vec&)> f,
                        std::optional<DelayPerturbation> pert = std::nullopt,
                        double period = kTwoPi) {
    return ProblemSpec(name, ImplicitManifold::flat(1, Box::cube(1, -50, 50)),
                       std::move(f), {{PeriodicCoefficient::constant(period, 1.0), 1}},
                       std::move(pert));
}

Vec scalar(double v) { return Vec::Constant(1, v); }

// Two-species interaction field with the reference weights folded in:
// (x1 (1 + x2/2 - x1), x2 (1 + x2 - x1/2)).
Vec steady_field(const Vec& x) {
    Vec v(2);
    v << x[0] * (1.0 + 0.5 * x[1] - x[0]), x[1] * (1.0 + x[1] - 0.5 * x[0]);
    return v;
}

}  // namespace

TEST_CASE("trivial pairs of the scalar linear field") {
    ProblemSpec spec = scalar_spec("tp-lin", [](const Vec& x) { return Vec(-x); });
    TrivialPairsResult r = find_trivial_pairs(spec, Box::cube(1, -1, 1));
    REQUIRE(r.pairs.size() == 1);
    const PeriodicPair& pair = r.pairs.front();
    CHECK(pair.is_trivial);
    CHECK(pair.lambda == 0.0);
    CHECK(std::abs(pair.history.values.front()[0]) <= 1e-9);
    CHECK(pair.index.value() == -1);
    CHECK(r.degree.brouwer.value == -1);
    CHECK(pair.residual_norm <= 1e-9);
}

TEST_CASE("trivial pairs of the folded two-species field") {
    // The displayed stationarity equations 1 + x2/2 - x1 = 0 and
    // 1 + x2 - x1/2 = 0 solve to (2/3, -2/3); together with the origin and
    // the two axial points that makes four equilibria.
    ProblemSpec spec("two-species-folded", ImplicitManifold::flat(2, Box::cube(2, -5, 5)),
                     steady_field, {{PeriodicCoefficient::constant(kTwoPi, 1.0), 2}},
                     std::nullopt);
    TrivialPairsResult r = find_trivial_pairs(spec, Box::cube(2, -2, 3));
    REQUIRE(r.pairs.size() == 4);
    bool found_coexistence = false, found_origin = false;
    for (const auto& pair : r.pairs) {
        const Vec p = pair.history.values.front();
        if ((p - scalar(0.0).replicate(2, 1)).lpNorm<Eigen::Infinity>() <= 1e-9)
            found_origin = true;
        Vec coexist(2);
        coexist << 2.0 / 3.0, -2.0 / 3.0;
        if ((p - coexist).lpNorm<Eigen::Infinity>() <= 1e-9) {
            found_coexistence = true;
            CHECK(pair.index.value() == 1);  // det J = 1/3 > 0
            CHECK(steady_field(p).lpNorm<Eigen::Infinity>() <= 1e-12);
        }
    }
    CHECK(found_origin);
    CHECK(found_coexistence);
}

TEST_CASE("trivial pairs of the 3d linear problem") {
    ProblemSpec spec = build_paper_linear_3d();
    TrivialPairsResult r = find_trivial_pairs(spec, Box::cube(3, -1, 1));
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs.front().history.values.front().lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(r.degree.magnitude == 1);
}

TEST_CASE("solve_periodic refines the forced linear orbit") {
    ProblemSpec spec = build_linear_forced_1d();
    ContinuationOptions copts;
    const HistoryDiscretization d =
        HistoryDiscretization::chebyshev(copts.history_nodes, spec.lag());

    PeriodicPair pair =
        solve_periodic(spec, 1.0, DiscretizedHistory::constant(d, scalar(0.0)), copts);
    CHECK(pair.residual_norm <= 1e-8);
    CHECK(!pair.is_trivial);
    // Orbit x(t) = (sin t - cos t)/2 has amplitude sqrt(2)/2.
    CHECK(pair.orbit.max_norm(0.0, spec.period()) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-7));
    for (int j = 0; j < d.node_count(); ++j) {
        const double theta = d.nodes()[j];
        CHECK(std::abs(pair.history.values[j][0] -
                       0.5 * (std::sin(theta) - std::cos(theta))) <= 1e-8);
    }
}

TEST_CASE("solve_periodic at lambda zero returns the trivial pair") {
    ProblemSpec spec = scalar_spec("sp-trivial", [](const Vec& x) { return Vec(-x); });
    ContinuationOptions copts;
    const HistoryDiscretization d =
        HistoryDiscretization::chebyshev(copts.history_nodes, spec.period());
    PeriodicPair pair =
        solve_periodic(spec, 0.0, DiscretizedHistory::constant(d, scalar(0.0)), copts);
    CHECK(pair.is_trivial);
    CHECK(pair.residual_norm <= 1e-10);
}

TEST_CASE("solve_periodic finds the constant solution with a full-period lag") {
    // xdot = -x + lambda (x(t - r) + 1) with r = T and lambda = 1/2:
    // the constant solution is lambda/(1 - lambda) = 1.
    DelayPerturbation pert(kTwoPi, [](double, const Vec&, const Vec& del) {
        return Vec(del.array() + 1.0);
    });
    ProblemSpec spec = scalar_spec("sp-const", [](const Vec& x) { return Vec(-x); },
                                   pert);
    CHECK(spec.lag() == doctest::Approx(kTwoPi));  // r = T survives normalization
    ContinuationOptions copts;
    const HistoryDiscretization d =
        HistoryDiscretization::chebyshev(copts.history_nodes, spec.lag());
    PeriodicPair pair =
        solve_periodic(spec, 0.5, DiscretizedHistory::constant(d, scalar(0.8)), copts);
    CHECK(pair.residual_norm <= 1e-9);
    for (const Vec& v : pair.history.values)
        CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("lag normalization leaves periodic residuals unchanged") {
    // Delay-using problem; r and r - 2T give the same T-periodic solutions.
    auto make = [](double lag) {
        DelayPerturbation pert(lag, [](double t, const Vec&, const Vec& del) {
            return Vec(scalar(std::sin(t) + 0.5 * del[0]));
        });
        return scalar_spec("lag-norm", [](const Vec& x) { return Vec(-x); }, pert);
    };
    ProblemSpec normalized = make(0.5 * kTwoPi);
    ProblemSpec wrapped = make(2.5 * kTwoPi);
    CHECK(wrapped.lag() == doctest::Approx(normalized.lag()));

    ContinuationOptions copts;
    const HistoryDiscretization d =
        HistoryDiscretization::chebyshev(copts.history_nodes, normalized.lag());
    const DiscretizedHistory guess = DiscretizedHistory::constant(d, scalar(0.1));
    PeriodicPair a = solve_periodic(normalized, 1.0, guess, copts);
    PeriodicPair b = solve_periodic(wrapped, 1.0, guess, copts);
    CHECK(a.residual_norm <= 1e-9);
    CHECK(b.residual_norm <= 1e-9);
    for (int j = 0; j < d.node_count(); ++j)
        CHECK(std::abs(a.history.values[j][0] - b.history.values[j][0]) <= 1e-8);
}

TEST_CASE("branch of the forced linear problem grows linearly") {
    ProblemSpec spec = build_linear_forced_1d();
    ContinuationOptions copts;
    PeriodicPair origin = make_trivial_pair(spec, scalar(0.0), copts);
    REQUIRE(origin.is_trivial);
    BranchRegion region{0.0, 10.0, Box::cube(1, -20, 20)};
    const Branch branch = continue_branch(spec, origin, region, copts);
    CHECK(branch.termination == BranchTermination::lambda_max_reached);
    CHECK(branch.pairs.back().lambda >= 10.0);
    CHECK(branch.pairs.front().is_trivial);
    for (const auto& pair : branch.pairs) {
        CHECK(pair.residual_norm <= 1e-8);
        if (pair.lambda > 0.5) {
            const double amplitude = pair.orbit.max_norm(0.0, spec.period());
            CHECK(std::abs(amplitude - pair.lambda * std::sqrt(0.5)) <=
                  1e-6 * amplitude);
        }
    }
}

TEST_CASE("equilibrium persists when the perturbation vanishes there") {
    // h = 0 identically: the branch is the constant family (lambda, 0).
    DelayPerturbation zero_pert(1.0, [](double, const Vec&, const Vec&) {
        return Vec(Vec::Zero(1));
    });
    ProblemSpec spec = scalar_spec("persist", [](const Vec& x) { return Vec(-x); },
                                   zero_pert);
    ContinuationOptions copts;
    PeriodicPair origin = make_trivial_pair(spec, scalar(0.0), copts);
    BranchRegion region{0.0, 10.0, Box::cube(1, -5, 5)};
    const Branch branch = continue_branch(spec, origin, region, copts);
    CHECK(branch.termination == BranchTermination::lambda_max_reached);
    for (const auto& pair : branch.pairs) {
        CHECK(pair.residual_norm <= 1e-10);
        for (const Vec& v : pair.history.values) CHECK(std::abs(v[0]) <= 1e-9);
    }
}

TEST_CASE("tight state box fires the boundary verdict at the predicted lambda") {
    ProblemSpec spec = build_two_species_steady();
    ContinuationOptions copts;
    Vec zero(2);
    zero << 2.0 / 3.0, -2.0 / 3.0;
    PeriodicPair origin = make_trivial_pair(spec, zero, copts);
    REQUIRE(origin.is_trivial);
    Vec lo = zero.array() - 0.1, hi = zero.array() + 0.1;
    BranchRegion region{0.0, 10.0, Box(lo, hi)};
    const Branch branch = continue_branch(spec, origin, region, copts);
    CHECK(branch.termination == BranchTermination::boundary_of_region);

    // The branch consists of the constants ((1 + lambda)^{-1} 2/3) (1, -1)
    // once rescaled, which cross the 0.1 edge at lambda = 3/17.
    const PeriodicPair& exit_pair = branch.pairs.back();
    CHECK(exit_pair.lambda >= 3.0 / 17.0 - 1e-3);
    CHECK(exit_pair.lambda < 0.6);
    bool outside = false;
    for (const Vec& v : exit_pair.history.values)
        if (!region.state_box.contains(v)) outside = true;
    CHECK(outside);
    for (const auto& pair : branch.pairs) {
        CHECK(pair.residual_norm <= 1e-8);
        // Closed form of the moved equilibrium at this lambda.
        const double expected = 2.0 / (3.0 * (1.0 + pair.lambda));
        CHECK(pair.history.values.front()[0] ==
              doctest::Approx(expected).epsilon(1e-7));
    }
}

TEST_CASE("degenerate origin is still continued through the cube-root branch") {
    // Phi(x) = x^3 has a degenerate zero; the shooting Jacobian at the
    // trivial pair is singular, but pseudo-arclength rides the lambda^{1/3}
    // branch anyway.
    DelayPerturbation pert(1.0, [](double t, const Vec&, const Vec&) {
        return Vec(scalar(std::sin(t)));
    });
    ProblemSpec spec = scalar_spec("singular",
                                   [](const Vec& x) {
                                       return Vec(x.array().cube());
                                   },
                                   pert);
    ContinuationOptions copts;
    PeriodicPair origin = make_trivial_pair(spec, scalar(0.0), copts);
    REQUIRE(origin.is_trivial);
    BranchRegion region{0.0, 1.0, Box::cube(1, -5, 5)};
    const Branch branch = continue_branch(spec, origin, region, copts);
    CHECK(branch.pairs.size() > 1);
    for (const auto& pair : branch.pairs) CHECK(pair.residual_norm <= 1e-8);
}

TEST_CASE("failure to step at the origin yields a length-one branch") {
    // Cripple the corrector's integration budget so the very first
    // linearization at the origin fails; the branch must report step_failure
    // with only the origin pair instead of fabricating progress.
    ProblemSpec spec = build_linear_forced_1d();
    ContinuationOptions copts;
    PeriodicPair origin = make_trivial_pair(spec, scalar(0.0), copts);
    REQUIRE(origin.is_trivial);
    ContinuationOptions crippled = copts;
    crippled.integrate.max_steps = 5;
    BranchRegion region{0.0, 1.0, Box::cube(1, -5, 5)};
    const Branch branch = continue_branch(spec, origin, region, crippled);
    CHECK(branch.pairs.size() == 1);
    CHECK(branch.termination == BranchTermination::step_failure);
}

TEST_CASE("starting pairs restrict the orbit and round-trip") {
    ProblemSpec spec = build_linear_forced_1d();
    ContinuationOptions copts;
    const HistoryDiscretization d =
        HistoryDiscretization::chebyshev(copts.history_nodes, spec.lag());
    PeriodicPair pair =
        solve_periodic(spec, 1.0, DiscretizedHistory::constant(d, scalar(0.0)), copts);

    StartingPair sp = pair_to_starting_pair(pair);
    CHECK(sp.lambda == pair.lambda);
    for (int j = 0; j < d.node_count(); ++j) {
        const double theta = d.nodes()[j];
        CHECK(std::abs(sp.history.values[j][0] -
                       0.5 * (std::sin(theta) - std::cos(theta))) <= 1e-8);
    }

    // Extending the starting pair reproduces the pair's endpoint.
    auto eval = [&sp](double theta) { return sp.history.eval(theta); };
    const TrajectorySegment seg = integrate_dde(spec, sp.lambda, eval,
                                                sp.history.disc.nodes(), spec.period(),
                                                copts.integrate);
    CHECK((seg.eval(spec.period()) - pair.orbit.eval(spec.period()))
              .lpNorm<Eigen::Infinity>() <= 1e-8);

    // A trivial pair restricts to the constant starting pair.
    PeriodicPair trivial = make_trivial_pair(spec, scalar(0.0), copts);
    StartingPair tsp = pair_to_starting_pair(trivial);
    CHECK(tsp.lambda == 0.0);
    for (const Vec& v : tsp.history.values) CHECK(std::abs(v[0]) <= 1e-10);
}

TEST_CASE("manifold branch keeps the orbit on the constraint set") {
    ProblemSpec sphere = build_sphere_gradient();
    ContinuationOptions copts;
    Vec north(3);
    north << 0.0, 0.0, 1.0;
    PeriodicPair origin = make_trivial_pair(sphere, north, copts);
    REQUIRE(origin.is_trivial);
    BranchRegion region{0.0, 0.5, Box::cube(3, -2, 2)};
    const Branch branch = continue_branch(sphere, origin, region, copts);
    CHECK(branch.termination == BranchTermination::lambda_max_reached);
    CHECK(branch.pairs.size() >= 3);
    for (const auto& pair : branch.pairs) {
        CHECK(pair.residual_norm <= 1e-8);
        CHECK(pair.orbit.max_constraint_residual() <= 1e-6);
    }
    // The forcing genuinely moves the orbit away from the pole.
    const PeriodicPair& last = branch.pairs.back();
    CHECK((last.history.values.front() - north).lpNorm<Eigen::Infinity>() > 1e-4);
}

TEST_CASE("branches are bitwise deterministic") {
    ProblemSpec spec = build_linear_forced_1d();
    ContinuationOptions copts;
    PeriodicPair origin = make_trivial_pair(spec, scalar(0.0), copts);
    BranchRegion region{0.0, 3.0, Box::cube(1, -20, 20)};
    const Branch a = continue_branch(spec, origin, region, copts);
    const Branch b = continue_branch(spec, origin, region, copts);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        CHECK(std::memcmp(&a.pairs[i].lambda, &b.pairs[i].lambda, sizeof(double)) == 0);
        for (int j = 0; j < a.pairs[i].history.disc.node_count(); ++j)
            CHECK(a.pairs[i].history.values[j] == b.pairs[i].history.values[j]);
    }
}
