#include "perbranch/manifold.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace perbranch {

ImplicitManifold ImplicitManifold::flat(int dim, Box ambient_box) {
    if (dim <= 0) throw std::invalid_argument("flat manifold needs dim >= 1");
    if (ambient_box.dim() != dim)
        throw std::invalid_argument("ambient box dimension mismatch");
    ImplicitManifold m;
    m.k_ = dim;
    m.s_ = 0;
    m.box_ = std::move(ambient_box);
    m.g_ = [](const Vec&) { return Vec(0); };
    return m;
}

ImplicitManifold::ImplicitManifold(int k, int s, Box ambient_box, MapFn g,
                                   JacFn dg1, JacFn dg2, double constraint_tol)
    : k_(k),
      s_(s),
      box_(std::move(ambient_box)),
      g_(std::move(g)),
      dg1_(std::move(dg1)),
      dg2_(std::move(dg2)),
      constraint_tol_(constraint_tol) {
    if (k_ <= 0 || s_ <= 0) throw std::invalid_argument("need k >= 1 and s >= 1");
    if (box_.dim() != k_ + s_)
        throw std::invalid_argument("ambient box dimension mismatch");
    if (!g_) throw std::invalid_argument("constraint map g is required");
    if (constraint_tol_ < 0) throw std::invalid_argument("constraint_tol < 0");
}

void ImplicitManifold::check_in_box(const Vec& p) const {
    if (p.size() != k_ + s_)
        throw DomainError("point dimension " + std::to_string(p.size()) +
                          " does not match ambient dimension " +
                          std::to_string(k_ + s_));
    if (!box_.contains(p, 1e-12 * (1.0 + box_.widths().maxCoeff())))
        throw DomainError("point outside the ambient box");
}

double ImplicitManifold::residual(const Vec& p) const {
    check_in_box(p);
    if (s_ == 0) return 0.0;
    return g_(p).lpNorm<Eigen::Infinity>();
}

bool ImplicitManifold::on_manifold(const Vec& p) const {
    return residual(p) <= constraint_tol_;
}

Vec ImplicitManifold::g(const Vec& p) const {
    if (s_ == 0) return Vec(0);
    return g_(p);
}

Mat ImplicitManifold::fd_dg1(const Vec& p) const {
    Mat J(s_, k_);
    Vec q = p;
    for (int j = 0; j < k_; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(p[j]));
        q[j] = p[j] + h;
        Vec gp = g_(q);
        q[j] = p[j] - h;
        Vec gm = g_(q);
        q[j] = p[j];
        J.col(j) = (gp - gm) / (2.0 * h);
    }
    return J;
}

Mat ImplicitManifold::fd_dg2(const Vec& p) const {
    Mat J(s_, s_);
    Vec q = p;
    for (int j = 0; j < s_; ++j) {
        const int idx = k_ + j;
        const double h = 1e-6 * (1.0 + std::abs(p[idx]));
        q[idx] = p[idx] + h;
        Vec gp = g_(q);
        q[idx] = p[idx] - h;
        Vec gm = g_(q);
        q[idx] = p[idx];
        J.col(j) = (gp - gm) / (2.0 * h);
    }
    return J;
}

Mat ImplicitManifold::dg1(const Vec& p) const {
    if (s_ == 0) return Mat(0, k_);
    return dg1_ ? dg1_(p) : fd_dg1(p);
}

Mat ImplicitManifold::dg2(const Vec& p) const {
    if (s_ == 0) return Mat(0, 0);
    return dg2_ ? dg2_(p) : fd_dg2(p);
}

Mat ImplicitManifold::solve_dg2(const Vec& p, const Mat& rhs) const {
    Mat A = dg2(p);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigma_min = svd.singularValues().minCoeff();
    if (!(sigma_min > kSigmaMinFloor))
        throw ReductionError("constraint Jacobian dg2 is numerically singular "
                             "(smallest singular value " +
                                 std::to_string(sigma_min) + ")",
                             sigma_min);
    return svd.solve(rhs);
}

Vec ImplicitManifold::tangent_lift(const Vec& p, const Vec& u) const {
    if (u.size() != k_) throw std::invalid_argument("tangent_lift: u must be in R^k");
    if (s_ == 0) return u;
    check_in_box(p);
    Vec v(k_ + s_);
    v.head(k_) = u;
    v.tail(s_) = -solve_dg2(p, dg1(p) * u);
    return v;
}

Vec ImplicitManifold::project(const Vec& p) const {
    check_in_box(p);
    if (s_ == 0) return p;
    Vec q = p;
    double res = g_(q).lpNorm<Eigen::Infinity>();
    if (res <= constraint_tol_) return q;
    for (int it = 0; it < kProjectMaxIters; ++it) {
        Vec step = solve_dg2(q, g_(q));
        q.tail(s_) -= step;
        res = g_(q).lpNorm<Eigen::Infinity>();
        if (step.lpNorm<Eigen::Infinity>() < kProjectStepTol && res <= constraint_tol_)
            return q;
        if (res <= constraint_tol_ * 1e-3) return q;  // well converged
    }
    if (res <= constraint_tol_) return q;
    throw ProjectionError("projection Newton did not converge (residual " +
                              std::to_string(res) + ")",
                          res);
}

std::function<Vec(const Vec&)> ImplicitManifold::lift_field(
    std::function<Vec(const Vec&)> f) const {
    if (s_ == 0) return f;
    return [this, f = std::move(f)](const Vec& p) { return tangent_lift(p, f(p)); };
}

}  // namespace perbranch
