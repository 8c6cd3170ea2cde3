#pragma once

#include <functional>
#include <optional>

#include "perbranch/geometry.hpp"

namespace perbranch {

/// Implicitly defined manifold M = g^{-1}(0) inside an ambient box of
/// R^{k+s}, with the coordinate split (x, y) in R^k x R^s chosen so that the
/// partial Jacobian of g with respect to y is invertible wherever a
/// reduction is performed.
///
/// The flat case s = 0 (no constraints, M = R^k) is supported as a marker;
/// every operation degenerates to the identity there.
class ImplicitManifold {
  public:
    using MapFn = std::function<Vec(const Vec&)>;  // g : box -> R^s
    using JacFn = std::function<Mat(const Vec&)>;

    /// Flat R^dim marker.
    static ImplicitManifold flat(int dim, Box ambient_box);

    /// Constrained manifold. dg1 (s x k) and dg2 (s x s) are optional; when
    /// absent they are formed by central differences of g with relative
    /// step 1e-6.
    ImplicitManifold(int k, int s, Box ambient_box, MapFn g, JacFn dg1 = {},
                     JacFn dg2 = {}, double constraint_tol = 1e-9);

    int intrinsic_dim() const { return k_; }
    int constraint_dim() const { return s_; }
    int ambient_dim() const { return k_ + s_; }
    bool is_flat() const { return s_ == 0; }
    const Box& ambient_box() const { return box_; }
    double constraint_tol() const { return constraint_tol_; }

    /// ||g(p)||_inf; throws DomainError outside the ambient box.
    double residual(const Vec& p) const;

    /// True when residual(p) <= constraint_tol.
    bool on_manifold(const Vec& p) const;

    Vec g(const Vec& p) const;
    Mat dg1(const Vec& p) const;
    Mat dg2(const Vec& p) const;

    /// Completes u in R^k to the tangent vector (u, -dg2^{-1} dg1 u).
    /// Throws ReductionError when dg2 fails the invertibility check
    /// (smallest singular value <= 1e-10).
    Vec tangent_lift(const Vec& p, const Vec& u) const;

    /// Newton in the y-block only (x frozen): returns p' with
    /// ||g(p')||_inf <= constraint_tol. Throws ProjectionError on failure.
    Vec project(const Vec& p) const;

    /// Lifts an R^k-valued field on the ambient box to a tangent field on M.
    std::function<Vec(const Vec&)> lift_field(std::function<Vec(const Vec&)> f) const;

    static constexpr double kSigmaMinFloor = 1e-10;
    static constexpr int kProjectMaxIters = 25;
    static constexpr double kProjectStepTol = 1e-13;

  private:
    ImplicitManifold() = default;
    void check_in_box(const Vec& p) const;
    Mat fd_dg1(const Vec& p) const;
    Mat fd_dg2(const Vec& p) const;
    Mat solve_dg2(const Vec& p, const Mat& rhs) const;

    int k_ = 0, s_ = 0;
    Box box_;
    MapFn g_;
    JacFn dg1_, dg2_;
    double constraint_tol_ = 1e-9;
};

}  // namespace perbranch
