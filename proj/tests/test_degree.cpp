#include <doctest.h>

#include <cmath>
#include <random>

#include "perbranch/degree.hpp"
#include "perbranch/problems.hpp"

using namespace perbranch;

namespace {

Vec pt(std::initializer_list<double> v) {
    Vec p(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

// Independent reference: seed Newton from a dense grid and sum the signs of
// the Jacobian determinants over the distinct zeros found.
int grid_degree_oracle(const MapFn& F, const Box& box, int per_axis) {
    const int n = box.dim();
    std::vector<Vec> zeros;
    std::vector<int> idx(n, 0);
    while (true) {
        Vec seed(n);
        for (int i = 0; i < n; ++i)
            seed[i] = box.lo()[i] +
                      (idx[i] + 0.5) * (box.hi()[i] - box.lo()[i]) / per_axis;
        Vec x = seed;
        bool converged = false;
        for (int it = 0; it < 80; ++it) {
            Mat J = fd_jacobian(F, x, 1e-7);
            Vec step = J.partialPivLu().solve(F(x));
            if (!step.allFinite()) break;
            x -= step;
            if (step.lpNorm<Eigen::Infinity>() < 1e-12) {
                converged = F(x).lpNorm<Eigen::Infinity>() < 1e-9;
                break;
            }
        }
        if (converged && box.contains(x, 1e-9)) {
            bool dup = false;
            for (const Vec& z : zeros)
                if ((z - x).lpNorm<Eigen::Infinity>() < 1e-6) dup = true;
            if (!dup) zeros.push_back(x);
        }
        int axis = 0;
        while (axis < n && ++idx[axis] == per_axis) idx[axis++] = 0;
        if (axis == n) break;
    }
    int degree = 0;
    for (const Vec& z : zeros) {
        Mat J(n, n);
        Vec q = z;
        for (int j = 0; j < n; ++j) {
            const double h = 1e-6 * (1 + std::abs(z[j]));
            q[j] = z[j] + h;
            Vec fp = F(q);
            q[j] = z[j] - h;
            Vec fm = F(q);
            q[j] = z[j];
            J.col(j) = (fp - fm) / (2 * h);
        }
        degree += J.determinant() > 0 ? 1 : -1;
    }
    return degree;
}

}  // namespace

TEST_CASE("identity and reflection degrees") {
    auto id = [](const Vec& x) { return x; };
    auto neg = [](const Vec& x) { return Vec(-x); };
    DegreeResult r = brouwer_degree(id, Box::cube(3, -1, 1));
    CHECK(r.value == 1);
    CHECK(r.certified);
    REQUIRE(r.zeros.size() == 1);
    CHECK(r.zeros.front().location.lpNorm<Eigen::Infinity>() <= 1e-9);

    r = brouwer_degree(neg, Box::cube(3, -1, 1));
    CHECK(r.value == -1);
    CHECK(r.certified);
}

TEST_CASE("3d block fields have |degree| 1 with opposite raw signs") {
    // As displayed, (p, q1+q2, q1) has determinant -1; the variant consistent
    // with the diagonal-times-unit-triangular factorization, (p, q1+q2, q2),
    // has determinant +1. Only the magnitude is meaningful for the manifold
    // reduction, and both are 1.
    auto displayed = [](const Vec& x) {
        Vec v(3);
        v << x[0], x[1] + x[2], x[1];
        return v;
    };
    auto factored = [](const Vec& x) {
        Vec v(3);
        v << x[0], x[1] + x[2], x[2];
        return v;
    };
    const DegreeResult a = brouwer_degree(displayed, Box::cube(3, -1, 1));
    const DegreeResult b = brouwer_degree(factored, Box::cube(3, -1, 1));
    CHECK(a.value == -1);
    CHECK(b.value == 1);
    CHECK(std::abs(a.value) == 1);
    CHECK(std::abs(b.value) == 1);
    CHECK(a.certified);
    CHECK(b.certified);
}

TEST_CASE("two zeros with cancelling signs, against the grid oracle") {
    auto F = [](const Vec& x) {
        Vec v(2);
        v << x[0] * x[0] - x[1], x[1] - 1.0;
        return v;
    };
    const Box box = Box::cube(2, -2, 2);
    const DegreeResult r = brouwer_degree(F, box);
    CHECK(r.certified);
    CHECK(r.zeros.size() == 2);
    CHECK(r.value == 0);
    CHECK(r.value == grid_degree_oracle(F, box, 200));
}

TEST_CASE("boundary zeros raise an admissibility error") {
    auto F = [](const Vec& x) {
        Vec v(1);
        v[0] = x[0] - 1.0;  // zero exactly on the boundary
        return v;
    };
    CHECK_THROWS_AS((void)brouwer_degree(F, Box::cube(1, -1, 1)), AdmissibilityError);
}

TEST_CASE("degenerate zero yields an uncertified result") {
    auto F = [](const Vec& x) {
        Vec v(1);
        v[0] = x[0] * x[0];
        return v;
    };
    // x^2 vanishes only at 0 with vanishing derivative.
    const DegreeResult r = brouwer_degree(F, Box::cube(1, -1, 1));
    CHECK(!r.certified);
}

TEST_CASE("zero_index signs") {
    auto id = [](const Vec& x) { return x; };
    auto neg = [](const Vec& x) { return Vec(-x); };
    CHECK(zero_index(id, pt({0.2})).value() == 1);
    CHECK(zero_index(neg, pt({-0.3})).value() == -1);

    // Hand Jacobian at (1, 1): [[2, -1], [0, 1]], det 2 > 0.
    auto F = [](const Vec& x) {
        Vec v(2);
        v << x[0] * x[0] - x[1], x[1] - 1.0;
        return v;
    };
    CHECK(zero_index(F, pt({1.2, 0.9})).value() == 1);

    auto flat = [](const Vec& x) {
        Vec v(1);
        v[0] = x[0] * x[0] * x[0];
        return v;
    };
    CHECK(!zero_index(flat, pt({0.1})).has_value());
}

TEST_CASE("field degree on the circle matches the hand computation") {
    ProblemSpec circle = build_circle_rotation();
    auto f = [&circle](const Vec& p) { return circle.f(p); };

    // Over the whole box the zeros of F = (-y, g) sit at (1, 0) and (-1, 0)
    // with determinant signs +1 and -1.
    FieldDegreeResult full =
        field_degree(circle.manifold(), f, circle.manifold().ambient_box());
    CHECK(full.magnitude == 0);
    CHECK(full.sign_ambiguous);
    REQUIRE(full.brouwer.zeros.size() == 2);
    int plus = 0, minus = 0;
    for (const auto& z : full.brouwer.zeros) {
        CHECK(std::abs(std::abs(z.location[0]) - 1.0) <= 1e-8);
        CHECK(std::abs(z.location[1]) <= 1e-8);
        (z.sign > 0 ? plus : minus) += 1;
    }
    CHECK(plus == 1);
    CHECK(minus == 1);

    // A small box around (0, 1) contains no zero of F at all.
    Vec lo(2), hi(2);
    lo << -0.4, 0.6;
    hi << 0.4, 1.4;
    FieldDegreeResult pole = field_degree(circle.manifold(), f, Box(lo, hi));
    CHECK(pole.magnitude == 0);
    CHECK(pole.brouwer.zeros.empty());
}

TEST_CASE("field degree reduces to the plain degree on flat problems") {
    ImplicitManifold flat = ImplicitManifold::flat(2, Box::cube(2, -1, 1));
    auto f = [](const Vec& x) { return Vec(-x); };
    FieldDegreeResult r = field_degree(flat, f, Box::cube(2, -1, 1));
    CHECK(r.magnitude == 1);
    CHECK(r.brouwer.value == 1);
    CHECK(!r.sign_ambiguous);
}

TEST_CASE("block degree examples") {
    auto id1 = [](const Vec& x) { return x; };
    auto neg2 = [](const Vec& x) { return Vec(-x); };
    // deg(-id, R^2) = (-1)^2 = 1, so the product is 1.
    CHECK(block_degree({{id1, Box::cube(1, -1, 1)}, {neg2, Box::cube(2, -1, 1)}}) == 1);

    auto cubic = [](const Vec& x) {
        Vec v(1);
        v[0] = x[0] - x[0] * x[0] * x[0];
        return v;
    };
    CHECK(block_degree({{cubic, Box::cube(1, -1.5, 1.5)}}) ==
          brouwer_degree(cubic, Box::cube(1, -1.5, 1.5)).value);
}

TEST_CASE("degree is deterministic across thread counts") {
    auto F = [](const Vec& x) {
        Vec v = x.array().square() - 0.25;
        return v;
    };
    DegreeOptions seq;
    DegreeOptions par;
    par.threads = 4;
    const DegreeResult a = brouwer_degree(F, Box::cube(3, -1, 1), seq);
    const DegreeResult b = brouwer_degree(F, Box::cube(3, -1, 1), par);
    CHECK(a.value == b.value);
    REQUIRE(a.zeros.size() == b.zeros.size());
    for (std::size_t i = 0; i < a.zeros.size(); ++i)
        CHECK((a.zeros[i].location - b.zeros[i].location).lpNorm<Eigen::Infinity>() ==
              0.0);
}

TEST_CASE("random cubic maps agree with the grid oracle") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    int certified_cases = 0;
    int attempts = 0;
    while (certified_cases < 20 && attempts < 200) {
        ++attempts;
        const int n = 1 + static_cast<int>(rng() % 3);
        // Random polynomial map of degree <= 3 per component.
        std::vector<std::vector<double>> coeffs(n);
        for (int i = 0; i < n; ++i) {
            coeffs[i].resize(1 + n + n + n);  // constant, linear, square, cubic
            for (double& c : coeffs[i]) c = coef(rng);
        }
        auto F = [n, coeffs](const Vec& x) {
            Vec v(n);
            for (int i = 0; i < n; ++i) {
                double acc = 0.5 * coeffs[i][0];
                for (int j = 0; j < n; ++j) {
                    acc += coeffs[i][1 + j] * x[j];
                    acc += coeffs[i][1 + n + j] * x[j] * x[j];
                    acc += coeffs[i][1 + 2 * n + j] * x[j] * x[j] * x[j];
                }
                v[i] = acc;
            }
            return v;
        };
        const Box box = Box::cube(n, -1.21, 1.17);
        DegreeResult r;
        try {
            r = brouwer_degree(F, box);
        } catch (const AdmissibilityError&) {
            continue;
        }
        if (!r.certified) continue;
        ++certified_cases;
        CHECK(r.value == grid_degree_oracle(F, box, n == 3 ? 24 : 60));
    }
    CHECK(certified_cases == 20);
}
