#include <doctest.h>

#include <cmath>
#include <numbers>

#include "perbranch/integrate.hpp"
#include "perbranch/problems.hpp"

using namespace perbranch;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ProblemSpec scalar_spec(const char* name, std::function<Vec(const Vec&)> f,
                        PeriodicCoefficient coeff, double box_half = 50.0,
                        std::optional<DelayPerturbation> pert = std::nullopt) {
    return ProblemSpec(name, ImplicitManifold::flat(1, Box::cube(1, -box_half, box_half)),
                       std::move(f), {{std::move(coeff), 1}}, std::move(pert));
}

Vec one() { return Vec::Ones(1); }

}  // namespace

TEST_CASE("zero field gives a constant trajectory") {
    ProblemSpec spec = scalar_spec("const", [](const Vec& x) { return Vec(0 * x); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0));
    const TrajectorySegment seg = integrate_ode(spec, one(), 0.0, 3.0);
    CHECK(seg.eval(3.0)[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(seg.eval(1.7)[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("exponential benchmark") {
    ProblemSpec spec = scalar_spec("exp", [](const Vec& x) { return x; },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0));
    IntegrateOptions io;
    io.tol = 1e-10;
    const TrajectorySegment seg = integrate_ode(spec, one(), 0.0, 1.0, io);
    CHECK(std::abs(seg.eval(1.0)[0] - std::numbers::e) <= 1e-9);
}

TEST_CASE("rescaled exponential over a period") {
    // a(t) = 1 + sin t has average 1, so the endpoint matches e^{2 pi}.
    ProblemSpec spec = scalar_spec(
        "exp-rescaled", [](const Vec& x) { return x; },
        PeriodicCoefficient::fourier(kTwoPi, 1.0, {{1, 0.0, 1.0}}));
    IntegrateOptions io;
    io.tol = 1e-11;
    const TrajectorySegment seg = integrate_ode(spec, one(), 0.0, kTwoPi, io);
    const double expected = std::exp(kTwoPi);
    CHECK(std::abs(seg.eval(kTwoPi)[0] - expected) <= 1e-8 * expected);
}

TEST_CASE("tolerance scaling on the exponential benchmark") {
    ProblemSpec spec = scalar_spec("exp-order", [](const Vec& x) { return x; },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0));
    // Tightening the tolerance by a decade gains at least a factor 4 until
    // the roundoff floor.
    double previous = -1.0;
    for (double tol : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10}) {
        IntegrateOptions io;
        io.tol = tol;
        const TrajectorySegment seg = integrate_ode(spec, one(), 0.0, 1.0, io);
        const double err =
            std::max(std::abs(seg.eval(1.0)[0] - std::numbers::e), 1e-12);
        if (previous > 1e-12) CHECK(err <= previous / 4.0);
        previous = err;
    }
}

TEST_CASE("node states are reproduced exactly by the interpolant") {
    ProblemSpec spec = scalar_spec("nodes", [](const Vec& x) { return Vec(-x); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0));
    const TrajectorySegment seg = integrate_ode(spec, one(), 0.0, 2.0);
    for (std::size_t i = 0; i < seg.nodes().size(); ++i)
        CHECK(seg.eval(seg.nodes()[i])[0] == seg.states()[i][0]);
}

TEST_CASE("evaluation outside the span throws") {
    ProblemSpec spec = scalar_spec("outside", [](const Vec& x) { return Vec(-x); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0));
    const TrajectorySegment seg = integrate_ode(spec, one(), 0.0, 1.0);
    CHECK_THROWS_AS((void)seg.eval(1.5), DomainError);
    CHECK_THROWS_AS((void)seg.eval(-0.5), DomainError);
}

TEST_CASE("blow-up truncates and flags the segment") {
    ProblemSpec spec = scalar_spec("blowup",
                                   [](const Vec& x) { return Vec(x.array().square()); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0));
    IntegrateOptions io;
    io.escape_radius = 1e6;
    const TrajectorySegment seg =
        integrate_ode(spec, 2.0 * one(), 0.0, 1.0, io);  // exact blow-up at t = 0.5
    CHECK(seg.truncated());
    CHECK(seg.t1() < 0.55);
}

TEST_CASE("dde with lambda = 0 equals the unperturbed flow") {
    DelayPerturbation pert(1.0, [](double t, const Vec&, const Vec&) {
        Vec v(1);
        v[0] = std::sin(t);
        return v;
    });
    ProblemSpec spec = scalar_spec("dde-lambda0", [](const Vec& x) { return Vec(-x); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0), 50.0,
                                   pert);
    const HistorySegment history = constant_history(one(), 1.0);
    const TrajectorySegment dde = integrate_dde(spec, 0.0, history, 4.0);
    const TrajectorySegment ode = integrate_ode(spec, one(), 0.0, 4.0);
    for (double t : {0.5, 1.0, 2.5, 4.0})
        CHECK(std::abs(dde.eval(t)[0] - ode.eval(t)[0]) <= 1e-12);
    CHECK(dde.t0() == doctest::Approx(-1.0));
}

TEST_CASE("dde with an inert delay matches the closed form") {
    // xdot = -x + 1 from history 0: x(t) = 1 - e^{-t}.
    DelayPerturbation pert(1.0, [](double, const Vec&, const Vec&) {
        return Vec(Vec::Ones(1));
    });
    ProblemSpec spec = scalar_spec("dde-inert", [](const Vec& x) { return Vec(-x); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0), 50.0,
                                   pert);
    const HistorySegment history = constant_history(Vec::Zero(1), 1.0);
    IntegrateOptions io;
    io.tol = 1e-11;
    const TrajectorySegment seg = integrate_dde(spec, 1.0, history, 5.0, io);
    for (double t : {0.5, 1.0, 2.0, 5.0})
        CHECK(std::abs(seg.eval(t)[0] - (1.0 - std::exp(-t))) <= 1e-9);
}

TEST_CASE("method of steps against the hand solution") {
    // xdot(t) = -x(t - 1), history 1: piecewise polynomials with
    // x(1) = 0, x(2) = -1/2, x(3) = -1/6.
    DelayPerturbation pert(1.0, [](double, const Vec&, const Vec& del) {
        return Vec(-del);
    });
    ProblemSpec spec = scalar_spec("dde-steps", [](const Vec& x) { return Vec(0 * x); },
                                   PeriodicCoefficient::constant(kTwoPi, 1.0), 50.0,
                                   pert);
    IntegrateOptions io;
    io.tol = 1e-12;
    const TrajectorySegment seg =
        integrate_dde(spec, 1.0, constant_history(one(), 1.0), 3.0, io);
    CHECK(std::abs(seg.eval(1.0)[0] - 0.0) <= 1e-9);
    CHECK(std::abs(seg.eval(2.0)[0] - (-0.5)) <= 1e-9);
    CHECK(std::abs(seg.eval(3.0)[0] - (-1.0 / 6.0)) <= 1e-9);
    // The jump times are forced mesh points.
    for (double seam : {1.0, 2.0}) {
        bool found = false;
        for (double node : seg.nodes())
            if (node == seam) found = true;
        CHECK(found);
    }
}

TEST_CASE("constant history evaluates to the point everywhere") {
    Vec p(2);
    p << 0.0, 1.0;
    const HistorySegment h = constant_history(p, 1.0);
    CHECK((h.eval(-1.0) - p).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((h.eval(0.0) - p).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((h.eval(-0.5) - p).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("manifold integration preserves the constraint") {
    ProblemSpec circle = build_circle_rotation();
    Vec start(2);
    start << 0.6, 0.8;
    IntegrateOptions io;
    io.tol = 1e-10;
    const TrajectorySegment seg =
        integrate_ode(circle, start, 0.0, 10.0 * circle.period(), io);
    CHECK(seg.max_constraint_residual() <= 1e-6);
    CHECK(!seg.truncated());

    // The intrinsic block of the stored derivative matches a(t) f.
    for (double t : {1.0, 7.7, 31.0}) {
        const Vec y = seg.eval(t);
        const Vec dy = seg.eval_derivative(t);
        const Vec expected = circle.unperturbed_rhs(t, y);
        CHECK((dy - expected).lpNorm<Eigen::Infinity>() <=
              1e-5 * (1 + expected.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("segment max-norm finds interior peaks") {
    // Solve xdot = -x + sin t via the DDE path with an inert delay, starting
    // on the periodic orbit x(t) = (sin t - cos t)/2.
    DelayPerturbation pert(1.0, [](double t, const Vec&, const Vec&) {
        Vec v(1);
        v[0] = std::sin(t);
        return v;
    });
    ProblemSpec forced = scalar_spec("peak-forced", [](const Vec& x) { return Vec(-x); },
                                     PeriodicCoefficient::constant(kTwoPi, 1.0), 50.0,
                                     pert);
    IntegrateOptions io;
    io.tol = 1e-12;
    auto history_eval = [](double theta) {
        Vec v(1);
        v[0] = 0.5 * (std::sin(theta) - std::cos(theta));
        return v;
    };
    const TrajectorySegment seg = integrate_dde(
        forced, 1.0, history_eval, {-1.0, -0.5, 0.0}, kTwoPi, io);
    // Peak value sqrt(2)/2 occurs at 3 pi / 4, far from mesh symmetry.
    CHECK(seg.max_norm(0.0, kTwoPi) ==
          doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-9));
}
