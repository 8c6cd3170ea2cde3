#include "perbranch/degree.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace perbranch {

namespace {

Mat central_jacobian(const MapFn& F, const Vec& x, double step) {
    const int n = static_cast<int>(x.size());
    Mat J(n, n);
    Vec q = x;
    for (int j = 0; j < n; ++j) {
        const double h = step * (1.0 + std::abs(x[j]));
        q[j] = x[j] + h;
        Vec fp = F(q);
        q[j] = x[j] - h;
        Vec fm = F(q);
        q[j] = x[j];
        J.col(j) = (fp - fm) / (2.0 * h);
    }
    return J;
}

struct NewtonOutcome {
    bool converged = false;
    Vec x;
    double residual = 0.0;
    double det = 0.0;
};

NewtonOutcome newton_polish(const MapFn& F, Vec x, const DegreeOptions& opts,
                            const Box& room) {
    NewtonOutcome out;
    for (int it = 0; it < opts.newton_max_iters; ++it) {
        Mat J = central_jacobian(F, x, opts.fd_step);
        Eigen::PartialPivLU<Mat> lu(J);
        Vec step = lu.solve(F(x));
        if (!step.allFinite()) return out;
        Vec x_next = x - step;
        // Keep iterates in a padded room around the search box.
        if (!room.contains(x_next, 0.5 * room.widths().maxCoeff())) return out;
        const double res = F(x_next).lpNorm<Eigen::Infinity>();
        const double step_norm = step.lpNorm<Eigen::Infinity>();
        x = std::move(x_next);
        // Converged only when both the step and the residual are small; a
        // small step with a large residual keeps iterating (steep maps need a
        // few more contractions) and runs out of iterations if truly stalled.
        if (step_norm < opts.newton_xtol * (1.0 + x.lpNorm<Eigen::Infinity>()) &&
            res <= opts.newton_ftol) {
            out.converged = true;
            out.x = x;
            out.residual = res;
            out.det = central_jacobian(F, x, opts.fd_step).determinant();
            return out;
        }
    }
    return out;
}

// Lipschitz estimate over the sub-box: max row-sum norm of the Jacobian at
// the center (and corners, unless disabled), doubled as a safety margin.
double lipschitz_bound(const MapFn& F, const Box& box, const DegreeOptions& opts) {
    double bound = 0.0;
    const int n = box.dim();
    auto visit = [&](const Vec& p) {
        Mat J = central_jacobian(F, p, opts.fd_step);
        bound = std::max(bound, J.cwiseAbs().rowwise().sum().maxCoeff());
    };
    visit(box.center());
    if (opts.corner_samples) {
        for (int mask = 0; mask < (1 << n); ++mask) {
            Vec corner(n);
            for (int i = 0; i < n; ++i)
                corner[i] = (mask >> i & 1) ? box.hi()[i] : box.lo()[i];
            visit(corner);
        }
    }
    return 2.0 * bound;
}

struct SubdivisionState {
    std::vector<Vec> candidate_zeros;
    bool exclusion_complete = true;
    std::string diagnostic;

    void merge(const SubdivisionState& other) {
        candidate_zeros.insert(candidate_zeros.end(), other.candidate_zeros.begin(),
                               other.candidate_zeros.end());
        exclusion_complete = exclusion_complete && other.exclusion_complete;
        if (diagnostic.empty()) diagnostic = other.diagnostic;
    }
};

void subdivide(const MapFn& F, const Box& box, const Box& root, double min_width,
               int depth, const DegreeOptions& opts, SubdivisionState& state) {
    const Vec center = box.center();
    const Vec fc = F(center);
    const double radius = 0.5 * box.widths().maxCoeff();  // inf-norm radius
    const double L = lipschitz_bound(F, box, opts);
    if (fc.lpNorm<Eigen::Infinity>() > L * radius) return;  // no zero possible

    if (box.max_width() <= min_width || depth >= opts.max_depth) {
        // A leaf is resolved only when Newton lands inside it (with margin);
        // convergence to a far-away zero says nothing about this box, so keep
        // splitting in that case until the basin is resolved or depth runs out.
        NewtonOutcome nt = newton_polish(F, center, opts, root);
        if (nt.converged && box.contains(nt.x, 0.5 * box.max_width())) {
            state.candidate_zeros.push_back(nt.x);
            return;
        }
        if (depth >= opts.max_depth) {
            state.exclusion_complete = false;
            if (state.diagnostic.empty())
                state.diagnostic = "unresolved sub-box near (" +
                                   std::to_string(center[0]) + ", ...)";
            return;
        }
    }
    subdivide(F, box.split(0), root, min_width, depth + 1, opts, state);
    subdivide(F, box.split(1), root, min_width, depth + 1, opts, state);
}

void check_boundary(const MapFn& F, const Box& box, const DegreeOptions& opts) {
    const int n = box.dim();
    const int per_face = std::max(1, opts.boundary_samples_per_dim * n / (2 * n));
    double min_norm = std::numeric_limits<double>::infinity();
    QuasiRandomSequence seq(std::max(1, n - 1), opts.seed);
    for (int axis = 0; axis < n; ++axis) {
        for (int side = 0; side < 2; ++side) {
            for (int s = 0; s < per_face; ++s) {
                Vec p(n);
                const Vec u = seq.next();
                int uj = 0;
                for (int i = 0; i < n; ++i) {
                    if (i == axis) {
                        p[i] = side ? box.hi()[i] : box.lo()[i];
                    } else {
                        p[i] = box.lo()[i] + u[uj++] * (box.hi()[i] - box.lo()[i]);
                    }
                }
                min_norm = std::min(min_norm, F(p).lpNorm<Eigen::Infinity>());
            }
        }
    }
    if (!(min_norm > opts.boundary_floor))
        throw AdmissibilityError(
            "boundary-zero suspicion: min sampled |F| on the box boundary is " +
                std::to_string(min_norm),
            min_norm);
}

}  // namespace

Mat fd_jacobian(const MapFn& F, const Vec& x, double step) {
    const int n = static_cast<int>(x.size());
    const Vec f0 = F(x);
    Mat J(f0.size(), n);
    Vec q = x;
    for (int j = 0; j < n; ++j) {
        const double h = step * (1.0 + std::abs(x[j]));
        q[j] = x[j] + h;
        J.col(j) = (F(q) - f0) / h;
        q[j] = x[j];
    }
    return J;
}

DegreeResult brouwer_degree(const MapFn& F, const Box& box, const DegreeOptions& opts) {
    if (box.dim() <= 0) throw std::invalid_argument("degree needs a box");
    check_boundary(F, box, opts);

    const double min_width = opts.min_box_rel * box.widths().maxCoeff();
    SubdivisionState state;
    if (opts.threads > 1) {
        // Deterministic split: fixed initial frontier, one task per sub-box,
        // merged in box order.
        std::vector<Box> frontier{box};
        while (static_cast<int>(frontier.size()) < 4 * opts.threads &&
               static_cast<int>(frontier.size()) < 64) {
            std::vector<Box> next;
            for (const Box& b : frontier) {
                next.push_back(b.split(0));
                next.push_back(b.split(1));
            }
            frontier = std::move(next);
        }
        const int depth0 = static_cast<int>(std::round(std::log2(frontier.size())));
        std::vector<std::future<SubdivisionState>> futures;
        futures.reserve(frontier.size());
        for (const Box& b : frontier)
            futures.push_back(std::async(std::launch::async, [&, b]() {
                SubdivisionState local;
                subdivide(F, b, box, min_width, depth0, opts, local);
                return local;
            }));
        for (auto& fut : futures) state.merge(fut.get());
    } else {
        subdivide(F, box, box, min_width, 0, opts, state);
    }

    // Deduplicate candidates; separation scale is far above Newton noise.
    const double sep = std::max(1e3 * opts.newton_xtol, 1e-9) *
                       (1.0 + box.widths().maxCoeff());
    std::sort(state.candidate_zeros.begin(), state.candidate_zeros.end(),
              [](const Vec& a, const Vec& b) {
                  for (int i = 0; i < a.size(); ++i) {
                      if (a[i] < b[i] - 1e-14) return true;
                      if (a[i] > b[i] + 1e-14) return false;
                  }
                  return false;
              });
    std::vector<Vec> zeros;
    for (const Vec& z : state.candidate_zeros) {
        if (!box.contains(z, 1e-9 * (1.0 + box.widths().maxCoeff()))) continue;
        bool dup = false;
        for (const Vec& w : zeros)
            if ((z - w).lpNorm<Eigen::Infinity>() < sep) {
                dup = true;
                break;
            }
        if (!dup) zeros.push_back(z);
    }

    DegreeResult result;
    result.certified = state.exclusion_complete;
    result.diagnostic = state.diagnostic;
    for (const Vec& z : zeros) {
        ZeroRecord rec;
        rec.location = z;
        rec.newton_residual = F(z).lpNorm<Eigen::Infinity>();
        rec.jacobian_det = central_jacobian(F, z, opts.fd_step).determinant();
        if (std::abs(rec.jacobian_det) > opts.degeneracy_floor) {
            rec.sign = rec.jacobian_det > 0 ? 1 : -1;
        } else {
            rec.degenerate = true;
            result.certified = false;
            if (result.diagnostic.empty())
                result.diagnostic = "degenerate zero (|det| = " +
                                    std::to_string(std::abs(rec.jacobian_det)) + ")";
        }
        result.value += rec.sign;
        result.zeros.push_back(std::move(rec));
    }
    // Pairwise separation check backing the certificate.
    for (std::size_t i = 0; i < zeros.size() && result.certified; ++i)
        for (std::size_t j = i + 1; j < zeros.size(); ++j)
            if ((zeros[i] - zeros[j]).lpNorm<Eigen::Infinity>() <=
                10.0 * opts.newton_xtol) {
                result.certified = false;
                result.diagnostic = "zero cluster below the separation floor";
            }
    return result;
}

FieldDegreeResult field_degree(const ImplicitManifold& m,
                               const std::function<Vec(const Vec&)>& f, const Box& box,
                               const DegreeOptions& opts) {
    FieldDegreeResult out;
    if (m.is_flat()) {
        out.brouwer = brouwer_degree(f, box, opts);
        out.sign_ambiguous = false;  // no reduction involved
    } else {
        if (box.dim() != m.ambient_dim())
            throw std::invalid_argument("field_degree: box must live in the ambient space");
        const int k = m.intrinsic_dim();
        auto F = [&m, &f, k](const Vec& p) {
            Vec v(p.size());
            v.head(k) = f(p);
            v.tail(p.size() - k) = m.g(p);
            return v;
        };
        out.brouwer = brouwer_degree(F, box, opts);
        out.sign_ambiguous = true;
    }
    out.magnitude = std::abs(out.brouwer.value);
    return out;
}

std::optional<int> zero_index(const MapFn& F, const Vec& location,
                              const DegreeOptions& opts) {
    const int n = static_cast<int>(location.size());
    const Vec pad = Vec::Ones(n) + location.cwiseAbs();
    const Box room(location - pad, location + pad);
    NewtonOutcome nt = newton_polish(F, location, opts, room);
    if (!nt.converged) return std::nullopt;
    if (std::abs(nt.det) <= opts.degeneracy_floor) return std::nullopt;
    return nt.det > 0 ? 1 : -1;
}

int block_degree(const std::vector<BlockPart>& parts, const DegreeOptions& opts) {
    if (parts.empty()) throw std::invalid_argument("block_degree: no blocks");
    int product = 1;
    for (const auto& part : parts) {
        const DegreeResult r = brouwer_degree(part.field, part.box, opts);
        product *= r.value;
    }
    return product;
}

}  // namespace perbranch
