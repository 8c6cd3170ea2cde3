#include "perbranch/verify.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace perbranch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ProblemSpec flat_spec(std::string name, const Box& box, ProblemSpec::FieldFn f,
                      PeriodicCoefficient coeff,
                      std::optional<DelayPerturbation> pert = std::nullopt) {
    std::vector<CoefficientBlock> blocks{{std::move(coeff), box.dim()}};
    return ProblemSpec(std::move(name), ImplicitManifold::flat(box.dim(), box),
                       std::move(f), std::move(blocks), std::move(pert));
}

PeriodicCoefficient one_plus_sin() {
    return PeriodicCoefficient::fourier(kTwoPi, 1.0, {{1, 0.0, 1.0}});
}

int sign_pow(int base_sign, int n) {
    return (base_sign < 0 && n % 2 == 1) ? -1 : 1;
}

struct TestField {
    std::string name;
    int dim;
    std::function<Vec(const Vec&)> f;
    Box box;
};

// Fields with bounded forward dynamics from the sample box, dims 1-3.
std::vector<TestField> rescale_fields() {
    std::vector<TestField> fields;
    fields.push_back({"1d-linear", 1, [](const Vec& x) { return Vec(-x); },
                      Box::cube(1, -1, 1)});
    fields.push_back({"1d-cubic", 1,
                      [](const Vec& x) {
                          Vec v(1);
                          v[0] = x[0] - x[0] * x[0] * x[0];
                          return v;
                      },
                      Box::cube(1, -1.4, 1.4)});
    fields.push_back({"2d-rotation", 2,
                      [](const Vec& x) {
                          Vec v(2);
                          v << -x[1], x[0];
                          return v;
                      },
                      Box::cube(2, -1, 1)});
    fields.push_back({"2d-hopf", 2,
                      [](const Vec& x) {
                          const double rho = 1.0 - x.squaredNorm();
                          Vec v(2);
                          v << -x[1] + x[0] * rho, x[0] + x[1] * rho;
                          return v;
                      },
                      Box::cube(2, -1.3, 1.3)});
    fields.push_back({"3d-linear", 3,
                      [](const Vec& x) {
                          Vec v(3);
                          v << x[1], -x[0], -x[2];
                          return v;
                      },
                      Box::cube(3, -1, 1)});
    fields.push_back({"3d-cubic-contraction", 3,
                      [](const Vec& x) { return Vec(-x.squaredNorm() * x); },
                      Box::cube(3, -1.2, 1.2)});
    return fields;
}

VerifyCheck check_rescale_endpoint(const VerifyOptions& vo) {
    VerifyCheck check{"rescale/endpoint-agreement", false, 0.0, 1e-7, "", 0.0};
    IntegrateOptions io;
    io.tol = 1e-11;
    int count = 0;
    for (const TestField& tf : rescale_fields()) {
        ProblemSpec spec = flat_spec("rescale-" + tf.name, tf.box, tf.f, one_plus_sin());
        QuasiRandomSequence seq(tf.dim, vo.seed);
        for (int i = 0; i < 50; ++i) {
            const Vec x0 = seq.next_in(tf.box);
            const Vec pa = poincare_map(spec, true, x0, io);
            const Vec p1 = poincare_map(spec, false, x0, io);
            check.measured = std::max(check.measured,
                                      (pa - p1).lpNorm<Eigen::Infinity>());
            ++count;
        }
    }
    check.passed = check.measured <= check.tolerance;
    check.detail = std::to_string(count) + " start points over 6 fields, dims 1-3";
    return check;
}

VerifyCheck check_rescale_interior(const VerifyOptions&) {
    VerifyCheck check{"rescale/interior-states", false, 0.0, 1e-7, "", 0.0};
    IntegrateOptions io;
    io.tol = 1e-11;
    auto fields = rescale_fields();
    for (std::size_t fi : {std::size_t{0}, std::size_t{2}, std::size_t{4}}) {
        const TestField& tf = fields[fi];
        ProblemSpec weighted =
            flat_spec("rescale-int-a", tf.box, tf.f, one_plus_sin());
        ProblemSpec plain = flat_spec("rescale-int-1", tf.box, tf.f,
                                      PeriodicCoefficient::constant(kTwoPi, 1.0));
        Vec x0 = Vec::Constant(tf.dim, 0.45);
        const TrajectorySegment xi = integrate_ode(weighted, x0, 0.0, kTwoPi, io);
        const TrajectorySegment u = integrate_ode(plain, x0, 0.0, kTwoPi, io);
        const PeriodicCoefficient& a = weighted.blocks().front().coefficient;
        for (int i = 1; i <= 32; ++i) {
            const double t = kTwoPi * i / 32.0;
            const Vec diff = xi.eval(t) - u.eval(a.integral(t));
            check.measured = std::max(check.measured, diff.lpNorm<Eigen::Infinity>());
        }
    }
    check.passed = check.measured <= check.tolerance;
    check.detail = "flow states against the rescaled reference at 32 times";
    return check;
}

VerifyCheck check_rescale_phi(const VerifyOptions&) {
    VerifyCheck check{"rescale/running-integral", false, 0.0, 1e-10, "", 0.0};
    std::vector<PeriodicCoefficient> coeffs = {
        one_plus_sin(),
        PeriodicCoefficient::fourier(kTwoPi, 2.0, {{1, 0.0, 1.0}}),
        PeriodicCoefficient::fourier(kTwoPi, -1.0, {{1, 0.0, 1.0}}),
        PeriodicCoefficient::fourier(kTwoPi, 0.0, {},
                                     PeriodicCoefficient::AbsPrimitive::abs_cos, 1.0),
    };
    for (const auto& c : coeffs) {
        check.measured = std::max(check.measured,
                                  std::abs(c.integral(kTwoPi) - kTwoPi * c.average()));
        for (int i = 0; i < 8; ++i) {
            const double t = -2.0 + 1.1 * i;
            const double d = c.integral(t + kTwoPi) - c.integral(t) -
                             kTwoPi * c.average();
            check.measured = std::max(check.measured, std::abs(d));
        }
    }
    check.passed = check.measured <= check.tolerance;
    check.detail = "phi_a(T) = T<a> and the period-shift identity, 4 coefficients";
    return check;
}

struct DegreeField {
    std::string name;
    int dim;
    MapFn v;
    Box box;
};

std::vector<DegreeField> degree_fields() {
    std::vector<DegreeField> fields;
    for (int n : {1, 2, 3}) {
        fields.push_back({"id-" + std::to_string(n), n,
                          [](const Vec& x) { return x; }, Box::cube(n, -1, 1)});
        fields.push_back({"neg-id-" + std::to_string(n), n,
                          [](const Vec& x) { return Vec(-x); }, Box::cube(n, -1, 1)});
    }
    fields.push_back({"1d-cubic", 1,
                      [](const Vec& x) {
                          Vec v(1);
                          v[0] = x[0] - x[0] * x[0] * x[0];
                          return v;
                      },
                      Box::cube(1, -1.5, 1.5)});
    fields.push_back({"2d-rotation", 2,
                      [](const Vec& x) {
                          Vec v(2);
                          v << -x[1], x[0];
                          return v;
                      },
                      Box::cube(2, -1, 1)});
    fields.push_back({"3d-rotation-contraction", 3,
                      [](const Vec& x) {
                          Vec v(3);
                          v << -x[1], x[0], -x[2];
                          return v;
                      },
                      Box::cube(3, -1, 1)});
    fields.push_back({"3d-linear-blocks", 3,
                      [](const Vec& x) {
                          Vec v(3);
                          v << x[0], x[1] + x[2], x[2];
                          return v;
                      },
                      Box::cube(3, -1, 1)});
    return fields;
}

VerifyCheck check_degree_scaling(const VerifyOptions& vo) {
    VerifyCheck check{"degree/scaling-law", false, 0.0, 0.0, "", 0.0};
    DegreeOptions dopts;
    dopts.threads = vo.threads;
    dopts.seed = vo.seed;
    int mismatches = 0, cases = 0;
    for (const DegreeField& df : degree_fields()) {
        const int base = brouwer_degree(df.v, df.box, dopts).value;
        for (double c : {1.0, -1.0, 2.0, -2.0, 0.5, -0.5}) {
            auto scaled = [&df, c](const Vec& x) { return Vec(-c * df.v(x)); };
            const int got = brouwer_degree(scaled, df.box, dopts).value;
            const int expected = sign_pow(c > 0 ? -1 : 1, df.dim) * base;
            if (got != expected) ++mismatches;
            ++cases;
        }
    }
    check.measured = mismatches;
    check.passed = mismatches == 0;
    check.detail = std::to_string(cases) + " scaled-field degree identities, exact";
    return check;
}

VerifyCheck check_degree_additivity(const VerifyOptions& vo) {
    VerifyCheck check{"degree/additivity", false, 0.0, 0.0, "", 0.0};
    DegreeOptions dopts;
    dopts.threads = vo.threads;
    dopts.seed = vo.seed;
    int mismatches = 0, cases = 0;
    for (int n : {1, 2, 3}) {
        auto w = [](const Vec& x) {
            Vec v = x.array().square() - 0.25;
            return v;
        };
        const Box whole = Box::cube(n, -1, 1);
        const int total = brouwer_degree(w, whole, dopts).value;
        int sum = 0;
        for (int mask = 0; mask < (1 << n); ++mask) {
            Vec lo(n), hi(n);
            for (int i = 0; i < n; ++i) {
                lo[i] = (mask >> i & 1) ? 0.0 : -1.0;
                hi[i] = (mask >> i & 1) ? 1.0 : 0.0;
            }
            sum += brouwer_degree(w, Box(lo, hi), dopts).value;
        }
        if (sum != total) ++mismatches;
        ++cases;
        if (n == 1) {
            // Uneven partition whose cut also avoids the zeros.
            const int left = brouwer_degree(w, Box::cube(1, -1, 0.1), dopts).value;
            const int right = brouwer_degree(w, Box::cube(1, 0.1, 1), dopts).value;
            if (left + right != total) ++mismatches;
            ++cases;
        }
    }
    check.measured = mismatches;
    check.passed = mismatches == 0;
    check.detail = std::to_string(cases) + " partition sums, exact";
    return check;
}

VerifyCheck check_degree_blocks(const VerifyOptions& vo) {
    VerifyCheck check{"degree/block-law", false, 0.0, 0.0, "", 0.0};
    DegreeOptions dopts;
    dopts.threads = vo.threads;
    dopts.seed = vo.seed;
    int mismatches = 0;

    auto expect_product = [&](const std::vector<BlockPart>& parts, const MapFn& stacked,
                              const Box& stacked_box) {
        const int prod = block_degree(parts, dopts);
        const int full = brouwer_degree(stacked, stacked_box, dopts).value;
        if (prod != full) ++mismatches;
    };

    auto id1 = [](const Vec& x) { return x; };
    auto neg = [](const Vec& x) { return Vec(-x); };
    auto rot = [](const Vec& x) {
        Vec v(2);
        v << -x[1], x[0];
        return v;
    };
    auto cubic = [](const Vec& x) {
        Vec v(1);
        v[0] = x[0] - x[0] * x[0] * x[0];
        return v;
    };
    auto logistic = [](const Vec& x) {
        Vec v(1);
        v[0] = x[0] * (1.0 - x[0]);
        return v;
    };

    // 1: (x) x (-id on R^2); deg(-id, R^2) = 1.
    expect_product({{id1, Box::cube(1, -1, 1)}, {neg, Box::cube(2, -1, 1)}},
                   [](const Vec& x) {
                       Vec v(3);
                       v << x[0], -x[1], -x[2];
                       return v;
                   },
                   Box::cube(3, -1, 1));
    // 2: single block equals the plain degree.
    {
        const int single = block_degree({{cubic, Box::cube(1, -1.5, 1.5)}}, dopts);
        const int plain = brouwer_degree(cubic, Box::cube(1, -1.5, 1.5), dopts).value;
        if (single != plain) ++mismatches;
    }
    // 3: (-x) x rotation.
    expect_product({{neg, Box::cube(1, -1, 1)}, {rot, Box::cube(2, -1, 1)}},
                   [](const Vec& x) {
                       Vec v(3);
                       v << -x[0], -x[2], x[1];
                       return v;
                   },
                   Box::cube(3, -1, 1));
    // 4: decoupled logistic pair around its coexistence equilibrium (1, 1).
    expect_product({{logistic, Box::cube(1, 0.5, 1.5)}, {logistic, Box::cube(1, 0.5, 1.5)}},
                   [](const Vec& x) {
                       Vec v(2);
                       v << x[0] * (1.0 - x[0]), x[1] * (1.0 - x[1]);
                       return v;
                   },
                   Box::cube(2, 0.5, 1.5));
    // 5: scaled axes (2x) x (-3y).
    expect_product({{[](const Vec& x) { return Vec(2 * x); }, Box::cube(1, -1, 1)},
                    {[](const Vec& x) { return Vec(-3 * x); }, Box::cube(1, -1, 1)}},
                   [](const Vec& x) {
                       Vec v(2);
                       v << 2 * x[0], -3 * x[1];
                       return v;
                   },
                   Box::cube(2, -1, 1));

    check.measured = mismatches;
    check.passed = mismatches == 0;
    check.detail = "5 block/product identities, exact";
    return check;
}

VerifyCheck check_degree_manifold(const VerifyOptions& vo) {
    VerifyCheck check{"degree/manifold-consistency", false, 0.0, 0.0, "", 0.0};
    DegreeOptions dopts;
    dopts.threads = vo.threads;
    dopts.seed = vo.seed;
    int mismatches = 0;

    ProblemSpec circle = build_circle_rotation();
    auto fc = [&circle](const Vec& p) { return circle.f(p); };
    FieldDegreeResult c =
        field_degree(circle.manifold(), fc, circle.manifold().ambient_box(), dopts);
    if (c.magnitude != 0 || !c.brouwer.certified || c.brouwer.zeros.size() != 2)
        ++mismatches;

    ProblemSpec sphere = build_sphere_gradient();
    auto fs = [&sphere](const Vec& p) { return sphere.f(p); };
    Vec lo(3), hi(3);
    lo << -0.5, -0.5, 0.5;
    hi << 0.5, 0.5, 1.5;
    FieldDegreeResult north = field_degree(sphere.manifold(), fs, Box(lo, hi), dopts);
    lo << -0.5, -0.5, -1.5;
    hi << 0.5, 0.5, -0.5;
    FieldDegreeResult south = field_degree(sphere.manifold(), fs, Box(lo, hi), dopts);
    if (north.magnitude != 1 || south.magnitude != 1 ||
        north.magnitude + south.magnitude != 2 || !north.brouwer.certified ||
        !south.brouwer.certified)
        ++mismatches;

    check.measured = mismatches;
    check.passed = mismatches == 0;
    check.detail = "rotation field over the whole circle -> 0; height gradient over "
                   "the two sphere poles -> 1 + 1 = 2";
    return check;
}

VerifyCheck check_linear3d_quantities(const VerifyOptions& vo) {
    VerifyCheck check{"degree/linear3d-quantities", false, 0.0, 1.0, "", 0.0};
    DegreeOptions dopts;
    dopts.threads = vo.threads;
    dopts.seed = vo.seed;
    double worst = 0.0;  // max over (deviation / its tolerance)

    const Linear3dMatrices m = linear3d_matrices();
    worst = std::max(worst, std::abs(m.det_E - (-1.0)) / 1e-12);
    worst = std::max(worst,
                     (m.E * m.E_inverse - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() /
                         1e-14);
    for (double t : {0.0, std::numbers::pi / 3.0, std::numbers::pi}) {
        const double dev = (m.B(t) - m.B_factored(t)).cwiseAbs().maxCoeff();
        worst = std::max(worst, dev / 1e-12);
    }

    auto phi3 = [](const Vec& x) {
        Vec v(3);
        v << x[0], x[1] + x[2], x[2];
        return v;
    };
    const DegreeResult deg = brouwer_degree(phi3, Box::cube(3, -1, 1), dopts);
    if (std::abs(deg.value) != 1 || !deg.certified) worst = std::max(worst, 2.0);

    const double avg_sin =
        PeriodicCoefficient::fourier(kTwoPi, 2.0, {{1, 0.0, 1.0}}).average();
    const double avg_abs =
        PeriodicCoefficient::fourier(kTwoPi, 0.0, {},
                                     PeriodicCoefficient::AbsPrimitive::abs_cos, 1.0)
            .average();
    worst = std::max(worst, std::abs(avg_sin - 2.0) / 1e-10);
    worst = std::max(worst, std::abs(avg_abs - 2.0 / std::numbers::pi) / 1e-10);

    check.measured = worst;
    check.passed = worst <= check.tolerance;
    check.detail = "det E, E inverse, B(t) factorization at 3 times, |deg| = 1, "
                   "coefficient averages 2 and 2/pi (deviation / tolerance)";
    return check;
}

struct IndexCase {
    std::string name;
    int dim;
    std::function<Vec(const Vec&)> f;
    Box box;
};

std::vector<IndexCase> index_fields() {
    std::vector<IndexCase> cases;
    for (int n : {1, 2, 3}) {
        cases.push_back({"neg-id-" + std::to_string(n), n,
                         [](const Vec& x) { return Vec(-x); }, Box::cube(n, -1, 1)});
        cases.push_back({"id-" + std::to_string(n), n, [](const Vec& x) { return x; },
                         Box::cube(n, -1, 1)});
    }
    cases.push_back({"2d-spiral", 2,
                     [](const Vec& x) {
                         Vec v(2);
                         v << -0.3 * x[0] - x[1], x[0] - 0.3 * x[1];
                         return v;
                     },
                     Box::cube(2, -1, 1)});
    cases.push_back({"1d-cubic", 1,
                     [](const Vec& x) {
                         Vec v(1);
                         v[0] = x[0] - x[0] * x[0] * x[0];
                         return v;
                     },
                     Box::cube(1, -0.5, 0.5)});
    return cases;
}

VerifyCheck check_index_chain(const VerifyOptions& vo) {
    VerifyCheck check{"index/p-map-chain", false, 0.0, 0.0, "", 0.0};
    struct Coeff {
        const char* name;
        int sign;
        PeriodicCoefficient c;
    };
    std::vector<Coeff> coeffs = {
        {"avg-2", 1, PeriodicCoefficient::fourier(kTwoPi, 2.0, {{1, 0.0, 1.0}})},
        {"avg-1", 1, one_plus_sin()},
        {"avg-neg-1", -1, PeriodicCoefficient::fourier(kTwoPi, -1.0, {{1, 0.0, 1.0}})},
        {"avg-2-over-pi", 1,
         PeriodicCoefficient::fourier(kTwoPi, 0.0, {},
                                      PeriodicCoefficient::AbsPrimitive::abs_cos, 1.0)},
    };
    DegreeOptions field_opts;
    field_opts.threads = vo.threads;
    field_opts.seed = vo.seed;
    DegreeOptions map_opts = field_opts;
    map_opts.min_box_rel = 5e-3;
    // Newton must sit above the integrated map's noise floor, and boundary
    // admissibility asks for |map(x) - x| > 10 tol.
    map_opts.newton_xtol = 1e-9;
    map_opts.newton_ftol = 1e-7;
    map_opts.boundary_floor = 10.0 * map_opts.newton_ftol;
    IntegrateOptions io;
    io.tol = 1e-10;

    int mismatches = 0, cases = 0;
    std::string failures;
    for (const IndexCase& ic : index_fields()) {
        const int deg_phi = brouwer_degree(ic.f, ic.box, field_opts).value;
        for (const Coeff& co : coeffs) {
            ProblemSpec spec = flat_spec("index-" + ic.name + "-" + co.name, ic.box,
                                         ic.f, co.c);
            auto pmap = [&spec, &io](const Vec& x) {
                return poincare_map(spec, true, x, io);
            };
            ++cases;
            try {
                const int ind = fixed_point_index(pmap, ic.box, map_opts);
                const int expected = sign_pow(-co.sign, ic.dim) * deg_phi;
                if (ind != expected) {
                    ++mismatches;
                    failures += std::string(" ") + ic.name + "/" + co.name + "(got " +
                                std::to_string(ind) + ", want " +
                                std::to_string(expected) + ")";
                }
            } catch (const NumericError& e) {
                ++mismatches;
                failures += std::string(" ") + ic.name + "/" + co.name + "(" +
                            e.what() + ")";
            }
        }
    }
    check.measured = mismatches;
    check.passed = mismatches == 0;
    check.detail = std::to_string(cases) +
                   " index/degree identities, exact" + failures;
    return check;
}

VerifyCheck check_fixed_points_coincide(const VerifyOptions&) {
    VerifyCheck check{"index/fixed-points-coincide", false, 0.0, 1e-8, "", 0.0};
    IntegrateOptions io;
    io.tol = 1e-12;
    auto spiral = [](const Vec& x) {
        Vec v(2);
        v << -0.3 * x[0] - x[1], x[0] - 0.3 * x[1];
        return v;
    };
    ProblemSpec spec = flat_spec("fp-coincide", Box::cube(2, -2, 2), spiral,
                                 one_plus_sin());
    DegreeOptions nopts;
    auto refine = [&](bool with_coeff) {
        auto disp = [&](const Vec& x) {
            return Vec(x - poincare_map(spec, with_coeff, x, io));
        };
        Vec x(2);
        x << 0.4, -0.3;
        for (int it = 0; it < 40; ++it) {
            Mat J = fd_jacobian(disp, x, 1e-7);
            Vec step = J.partialPivLu().solve(disp(x));
            x -= step;
            if (step.lpNorm<Eigen::Infinity>() < 1e-12) break;
        }
        return x;
    };
    const Vec fa = refine(true);
    const Vec f1 = refine(false);
    check.measured = (fa - f1).lpNorm<Eigen::Infinity>();
    check.passed = check.measured <= check.tolerance;
    check.detail = "Newton-refined fixed points of the weighted and plain flows";
    return check;
}

VerifyCheck check_dae_constraint(const std::string& name, const ProblemSpec& spec,
                                 const Vec& start) {
    VerifyCheck check{name, false, 0.0, 1e-6, "", 0.0};
    IntegrateOptions io;
    io.tol = 1e-10;
    const TrajectorySegment seg =
        integrate_ode(spec, start, 0.0, 10.0 * spec.period(), io);
    check.measured = seg.max_constraint_residual();
    check.passed = !seg.truncated() && check.measured <= check.tolerance;
    check.detail = "constraint defect along the lifted flow over [0, 10T]";
    return check;
}

// Piecewise-polynomial reference for xdot(t) = -x(t-1), x = 1 on [-1, 0]:
// on each unit interval the solution is a polynomial, advanced exactly.
double dde_steps_reference(double t) {
    std::vector<double> poly{1.0};  // covers [left, left + 1], u = t - left
    double left = -1.0;
    while (t > left + 1.0 + 1e-12) {
        double x_right = 0.0;  // value at the right end of the current interval
        for (double c : poly) x_right += c;
        std::vector<double> next(poly.size() + 1, 0.0);
        next[0] = x_right;
        for (std::size_t m = 0; m < poly.size(); ++m)
            next[m + 1] = -poly[m] / static_cast<double>(m + 1);
        poly = std::move(next);
        left += 1.0;
    }
    const double u = t - left;
    double value = 0.0, p = 1.0;
    for (double c : poly) {
        value += c * p;
        p *= u;
    }
    return value;
}

VerifyCheck check_dde_oracle(const VerifyOptions&) {
    VerifyCheck check{"dde/method-of-steps-oracle", false, 0.0, 1e-9, "", 0.0};
    auto zero_field = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    DelayPerturbation pert(1.0, [](double, const Vec&, const Vec& del) {
        return Vec(-del);
    });
    ProblemSpec spec = flat_spec("dde-steps", Box::cube(1, -50, 50), zero_field,
                                 PeriodicCoefficient::constant(kTwoPi, 1.0), pert);
    IntegrateOptions io;
    io.tol = 1e-12;
    const HistorySegment history = constant_history(Vec::Ones(1), 1.0);
    const TrajectorySegment seg = integrate_dde(spec, 1.0, history, 3.0, io);

    const double frozen[3] = {0.0, -0.5, -1.0 / 6.0};  // hand values at t = 1, 2, 3
    for (int t = 1; t <= 3; ++t) {
        const double ref = dde_steps_reference(t);
        if (std::abs(ref - frozen[t - 1]) > 1e-14)
            throw NumericError("method-of-steps reference disagrees with the frozen "
                               "hand values");
        check.measured =
            std::max(check.measured, std::abs(seg.eval(t)[0] - ref));
    }
    check.passed = check.measured <= check.tolerance;
    check.detail = "x(1), x(2), x(3) of xdot = -x(t-1) against the piecewise "
                   "polynomial solution";
    return check;
}

VerifyCheck check_branch_closed_form(const VerifyOptions&) {
    VerifyCheck check{"branch/closed-form-amplitude", false, 0.0, 1e-6, "", 0.0};
    ProblemSpec spec = build_linear_forced_1d();
    ContinuationOptions copts;
    PeriodicPair origin = make_trivial_pair(spec, Vec::Zero(1), copts);
    BranchRegion region{0.0, 10.0, Box::cube(1, -20, 20)};
    const Branch branch = continue_branch(spec, origin, region, copts);

    bool ok = branch.termination == BranchTermination::lambda_max_reached;
    const double root_half = std::sqrt(0.5);
    int checkpoints = 0;
    for (int k = 1; k <= 20 && ok; ++k) {
        const double target = 0.5 * k;
        const PeriodicPair* best = nullptr;
        double dist = 1e300;
        for (const auto& pair : branch.pairs) {
            const double d = std::abs(pair.lambda - target);
            if (d < dist) {
                dist = d;
                best = &pair;
            }
        }
        if (!best || best->lambda <= 0.1) {
            ok = false;
            break;
        }
        const double amplitude = best->orbit.max_norm(0.0, spec.period());
        const double expected = best->lambda * root_half;
        check.measured =
            std::max(check.measured, std::abs(amplitude - expected) / expected);
        ++checkpoints;
    }
    check.passed = ok && checkpoints == 20 && check.measured <= check.tolerance;
    check.detail = "amplitude(lambda) = lambda/sqrt(2) at 20 checkpoints up to "
                   "lambda = 10; termination " +
                   std::string(to_string(branch.termination));
    return check;
}

VerifyCheck check_branch_existence(const std::string& name, const ProblemSpec& spec,
                                   const Box& zero_box, const BranchRegion& region) {
    VerifyCheck check{name, false, 0.0, 1e-8, "", 0.0};
    ContinuationOptions copts;
    DegreeOptions dopts;
    const TrivialPairsResult trivial = find_trivial_pairs(spec, zero_box, copts, dopts);
    if (trivial.pairs.empty() || trivial.degree.magnitude < 1) {
        check.detail = "no trivial pair with nonzero degree found";
        return check;
    }
    const Branch branch = continue_branch(spec, trivial.pairs.front(), region, copts);
    for (const auto& pair : branch.pairs)
        check.measured = std::max(check.measured, pair.residual_norm);
    const bool verdict_ok = branch.termination != BranchTermination::step_failure;
    check.passed = verdict_ok && branch.arclength >= 1.0 &&
                   check.measured <= check.tolerance;
    check.detail = "|degree| = " + std::to_string(trivial.degree.magnitude) +
                   ", arclength " + std::to_string(branch.arclength) + ", " +
                   std::to_string(branch.pairs.size()) + " pairs, termination " +
                   to_string(branch.termination);
    return check;
}

VerifyCheck check_branch_boundary(const VerifyOptions&) {
    VerifyCheck check{"branch/two-species-steady-boundary", false, 0.0, 1e-8, "", 0.0};
    ProblemSpec spec = build_two_species_steady();
    ContinuationOptions copts;
    Vec zero(2);
    zero << 2.0 / 3.0, -2.0 / 3.0;
    PeriodicPair origin = make_trivial_pair(spec, zero, copts);
    Vec lo = zero.array() - 0.1, hi = zero.array() + 0.1;
    BranchRegion region{0.0, 10.0, Box(lo, hi)};
    const Branch branch = continue_branch(spec, origin, region, copts);
    for (const auto& pair : branch.pairs)
        check.measured = std::max(check.measured, pair.residual_norm);

    // The constants along the branch solve (1 + lambda) * interaction = -1,
    // so the box edge at distance 0.1 is crossed at lambda = 3/17.
    const double lambda_exit = branch.pairs.back().lambda;
    const double lambda_pred = 3.0 / 17.0;
    const bool exit_ok = branch.termination == BranchTermination::boundary_of_region &&
                         lambda_exit >= lambda_pred - 1e-3 && lambda_exit < 0.6;
    check.passed = exit_ok && check.measured <= check.tolerance;
    check.detail = "termination " + std::string(to_string(branch.termination)) +
                   ", exit lambda " + std::to_string(lambda_exit) +
                   " (edge crossing at 3/17)";
    return check;
}

VerifyCheck timed(const std::function<VerifyCheck()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    VerifyCheck check = fn();
    check.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  start)
                        .count();
    return check;
}

void run_suite_rescale(const VerifyOptions& vo, std::vector<VerifyCheck>& out) {
    out.push_back(timed([&] { return check_rescale_endpoint(vo); }));
    out.push_back(timed([&] { return check_rescale_interior(vo); }));
    out.push_back(timed([&] { return check_rescale_phi(vo); }));
}

void run_suite_degree(const VerifyOptions& vo, std::vector<VerifyCheck>& out) {
    out.push_back(timed([&] { return check_degree_scaling(vo); }));
    out.push_back(timed([&] { return check_degree_additivity(vo); }));
    out.push_back(timed([&] { return check_degree_blocks(vo); }));
    out.push_back(timed([&] { return check_degree_manifold(vo); }));
    out.push_back(timed([&] { return check_linear3d_quantities(vo); }));
}

void run_suite_index(const VerifyOptions& vo, std::vector<VerifyCheck>& out) {
    out.push_back(timed([&] { return check_index_chain(vo); }));
    out.push_back(timed([&] { return check_fixed_points_coincide(vo); }));
}

void run_suite_dae(const VerifyOptions& vo, std::vector<VerifyCheck>& out) {
    out.push_back(timed([&] {
        ProblemSpec circle = build_circle_rotation();
        Vec start(2);
        start << 0.6, 0.8;
        return check_dae_constraint("dae/constraint-circle", circle, start);
    }));
    out.push_back(timed([&] {
        ProblemSpec sphere = build_sphere_gradient();
        Vec start(3);
        start << 0.6, 0.0, 0.8;
        return check_dae_constraint("dae/constraint-sphere", sphere, start);
    }));
    out.push_back(timed([&] { return check_dde_oracle(vo); }));
}

void run_suite_branches(const VerifyOptions& vo, std::vector<VerifyCheck>& out) {
    out.push_back(timed([&] { return check_branch_closed_form(vo); }));
    out.push_back(timed([&] {
        return check_branch_existence("branch/linear3d", build_paper_linear_3d(),
                                      Box::cube(3, -1, 1),
                                      BranchRegion{0.0, 2.0, Box::cube(3, -50, 50)});
    }));
    out.push_back(timed([&] {
        return check_branch_existence("branch/two-species", build_two_species(),
                                      Box::cube(2, -1, 1),
                                      BranchRegion{0.0, 2.0, Box::cube(2, -5, 5)});
    }));
    out.push_back(timed([&] { return check_branch_boundary(vo); }));
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names = {"rescale", "degree-laws",
                                                   "index-chain", "dae", "branches",
                                                   "all"};
    return names;
}

VerifyReport run_verify(const std::string& suite, const VerifyOptions& opts) {
    VerifyReport report;
    report.suite = suite;
    const bool all = suite == "all";
    if (suite == "rescale" || all) run_suite_rescale(opts, report.checks);
    if (suite == "degree-laws" || all) run_suite_degree(opts, report.checks);
    if (suite == "index-chain" || all) run_suite_index(opts, report.checks);
    if (suite == "dae" || all) run_suite_dae(opts, report.checks);
    if (suite == "branches" || all) run_suite_branches(opts, report.checks);
    if (report.checks.empty())
        throw ConfigError("unknown verify suite: " + suite +
                          " (expected rescale, degree-laws, index-chain, dae, "
                          "branches, or all)");
    return report;
}

nlohmann::json verify_report_json(const VerifyReport& report, const VerifyOptions& opts) {
    nlohmann::json j;
    j["suite"] = report.suite;
    j["config"] = {{"seed", opts.seed}, {"threads", opts.threads}};
    j["passed"] = report.passed();
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"measured", c.measured},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
    j["checks"] = checks;
    return j;
}

}  // namespace perbranch
