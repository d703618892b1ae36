#pragma once

#include <functional>

#include "shed/tape.hpp"

namespace shed {

// Builds the scalar function under test on a fresh tape. The Var argument is
// the leaf holding the probed input x.
using TapeFn = std::function<Var(Tape&, Var)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    int coords_checked = 0;
};

// Compares the reverse-mode gradient of f at x against central differences
// (f(x + h e_i) - f(x - h e_i)) / 2h. Relative error per coordinate uses
// max(|ad|, |fd|) as the scale; coordinates where both magnitudes fall below
// 1e-6 count as matching (finite differencing is pure noise there).
//
// max_coords > 0 probes a deterministic random subset of coordinates, which
// keeps checks on large inputs fast. Run under Precision::f64.
GradCheckReport grad_check(const TapeFn& f, const Array& x, double h, double tol,
                           int max_coords = -1, uint64_t coord_seed = 1234);

}  // namespace shed
