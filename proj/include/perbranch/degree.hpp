#pragma once

#include <functional>
#include <optional>
#include <string>

#include "perbranch/manifold.hpp"

namespace perbranch {

struct DegreeOptions {
    double newton_xtol = 1e-12;     // Newton step tolerance
    double newton_ftol = 1e-10;     // Newton residual target
    int newton_max_iters = 60;
    double degeneracy_floor = 1e-8; // |det| at or below this is degenerate
    double min_box_rel = 1e-3;      // subdivision floor, relative to the root width
    int max_depth = 64;
    double fd_step = 1e-7;
    double boundary_floor = 1e-8;   // boundary samples must exceed this norm
    int boundary_samples_per_dim = 64;
    bool corner_samples = true;     // sample Lipschitz bounds at corners too
    int threads = 1;
    std::uint64_t seed = 0;
};

struct ZeroRecord {
    Vec location;
    int sign = 0;            // sign of det dF at the zero (0 if degenerate)
    double newton_residual = 0.0;
    double jacobian_det = 0.0;
    bool degenerate = false;
};

/// Signed zero count of a map over a box.
struct DegreeResult {
    int value = 0;
    std::vector<ZeroRecord> zeros;
    bool certified = false;  // all zeros nondegenerate and exclusion complete
    std::string diagnostic;
};

using MapFn = std::function<Vec(const Vec&)>;

/// Brouwer degree of F on the box with respect to 0, computed by recursive
/// bisection with Lipschitz exclusion, Newton polish, and summation of
/// Jacobian determinant signs. Throws AdmissibilityError when boundary
/// samples suggest a zero on the boundary.
DegreeResult brouwer_degree(const MapFn& F, const Box& box,
                            const DegreeOptions& opts = {});

/// Degree data for a tangent field on an implicit manifold, computed through
/// the assembled map F = (f, g). The reduction determines the magnitude only,
/// so the result carries |deg| next to the raw signed value.
struct FieldDegreeResult {
    int magnitude = 0;        // |deg(F, box)|
    DegreeResult brouwer;     // signed data for F = (f, g)
    bool sign_ambiguous = true;
};

FieldDegreeResult field_degree(const ImplicitManifold& m,
                               const std::function<Vec(const Vec&)>& f, const Box& box,
                               const DegreeOptions& opts = {});

/// Index of the isolated zero reached by Newton from `location`:
/// sign det dF there, or nullopt when the zero is degenerate.
std::optional<int> zero_index(const MapFn& F, const Vec& location,
                              const DegreeOptions& opts = {});

struct BlockPart {
    MapFn field;
    Box box;
};

/// Degree of a block-diagonal field as the product of block degrees.
int block_degree(const std::vector<BlockPart>& parts, const DegreeOptions& opts = {});

/// Forward-difference Jacobian helper shared with the shooting code.
Mat fd_jacobian(const MapFn& F, const Vec& x, double step);

}  // namespace perbranch
