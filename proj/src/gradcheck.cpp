#include "shed/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shed {

namespace {
double eval_scalar(const TapeFn& f, const Array& x) {
    Tape t;
    Var leaf = t.leaf(x);
    Var root = f(t, leaf);
    if (root.val().numel() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
    return root.val().at(0);
}
}  // namespace

GradCheckReport grad_check(const TapeFn& f, const Array& x, double h, double tol, int max_coords,
                           uint64_t coord_seed) {
    const double f0 = eval_scalar(f, x);
    if (!std::isfinite(f0)) throw std::runtime_error("grad_check: f(x) is not finite");

    Array g_ad;
    {
        Tape t;
        Var leaf = t.leaf(x);
        Var root = f(t, leaf);
        t.backward(root);
        g_ad = t.grad_of(leaf);
    }

    std::vector<int> coords(static_cast<size_t>(x.numel()));
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords > 0 && max_coords < static_cast<int>(coords.size())) {
        Rng rng(coord_seed);
        for (size_t i = 0; i < coords.size(); ++i) {
            const size_t j = i + static_cast<size_t>(rng.uniform_int(static_cast<int>(coords.size() - i)));
            std::swap(coords[i], coords[j]);
        }
        coords.resize(static_cast<size_t>(max_coords));
    }

    GradCheckReport rep;
    for (int c : coords) {
        Array xp = x, xm = x;
        xp.at(c) += h;
        xm.at(c) -= h;
        const double fd = (eval_scalar(f, xp) - eval_scalar(f, xm)) / (2.0 * h);
        const double ad = g_ad.at(c);
        const double scale = std::max(std::fabs(ad), std::fabs(fd));
        if (scale < 1e-6) {
            ++rep.coords_checked;
            continue;
        }
        rep.max_rel_err = std::max(rep.max_rel_err, std::fabs(ad - fd) / scale);
        ++rep.coords_checked;
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

}  // namespace shed
