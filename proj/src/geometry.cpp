#include "perbranch/geometry.hpp"

#include <cmath>

namespace perbranch {

// Generalized golden-ratio offsets (R_d sequence): alpha_i = 1/phi_d^i where
// phi_d is the unique positive root of x^{d+1} = x + 1.
QuasiRandomSequence::QuasiRandomSequence(int dim, std::uint64_t seed) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    alpha_.resize(dim);
    state_.resize(dim);
    double a = 1.0;
    for (int i = 0; i < dim; ++i) {
        a /= phi;
        alpha_[i] = a;
        state_[i] = std::fmod(0.5 + 0.618033988749894848 * static_cast<double>(seed % 4096), 1.0);
    }
}

Vec QuasiRandomSequence::next() {
    Vec p(static_cast<int>(alpha_.size()));
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
        state_[i] += alpha_[i];
        if (state_[i] >= 1.0) state_[i] -= 1.0;
        p[static_cast<int>(i)] = state_[i];
    }
    return p;
}

Vec QuasiRandomSequence::next_in(const Box& box) {
    Vec u = next();
    return box.lo().array() + u.array() * box.widths().array();
}

}  // namespace perbranch
