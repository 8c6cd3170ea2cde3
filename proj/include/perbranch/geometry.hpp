#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "perbranch/errors.hpp"

namespace perbranch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Points of the ambient space R^{k+s}; the (x, y) split is owned by the
/// manifold that interprets them.
using AmbientPoint = Vec;

/// Axis-aligned box. Degenerate boxes (hi <= lo on some axis) are rejected.
class Box {
  public:
    Box() = default;
    Box(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_.size() != hi_.size() || lo_.size() == 0)
            throw std::invalid_argument("Box: lo/hi dimension mismatch");
        for (int i = 0; i < lo_.size(); ++i)
            if (!(hi_[i] > lo_[i]))
                throw std::invalid_argument("Box: empty or degenerate on axis " +
                                            std::to_string(i));
    }

    static Box cube(int dim, double lo, double hi) {
        return Box(Vec::Constant(dim, lo), Vec::Constant(dim, hi));
    }

    int dim() const { return static_cast<int>(lo_.size()); }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    Vec center() const { return 0.5 * (lo_ + hi_); }
    Vec widths() const { return hi_ - lo_; }
    double max_width() const { return (hi_ - lo_).maxCoeff(); }

    bool contains(const Vec& p, double tol = 0.0) const {
        if (p.size() != lo_.size()) return false;
        for (int i = 0; i < p.size(); ++i)
            if (p[i] < lo_[i] - tol || p[i] > hi_[i] + tol) return false;
        return true;
    }

    /// Half of (lo, hi) along the widest axis; side 0 keeps the lower half.
    Box split(int side) const {
        int axis = 0;
        (hi_ - lo_).maxCoeff(&axis);
        Vec lo = lo_, hi = hi_;
        double mid = 0.5 * (lo_[axis] + hi_[axis]);
        if (side == 0)
            hi[axis] = mid;
        else
            lo[axis] = mid;
        return Box(lo, hi);
    }

  private:
    Vec lo_, hi_;
};

/// Additive-recurrence (Weyl) low-discrepancy sequence on [0,1)^dim.
/// Deterministic for a given seed; used wherever the library needs
/// reproducible "random" sample points.
class QuasiRandomSequence {
  public:
    explicit QuasiRandomSequence(int dim, std::uint64_t seed = 0);
    Vec next();
    /// Next point mapped into the box.
    Vec next_in(const Box& box);

  private:
    std::vector<double> alpha_;
    std::vector<double> state_;
};

}  // namespace perbranch
