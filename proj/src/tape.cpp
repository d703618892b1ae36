#include "shed/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "shed/kernels.hpp"

namespace shed {

namespace {

void check_same_shape(const Array& a, const Array& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

void check_same_tape(Var a, Var b, const char* op) {
    if (a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": vars from different tapes");
}

Array transposed(const Array& a) {
    Array t({a.cols(), a.rows()});
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

}  // namespace

const Array& Var::val() const { return tape->value(idx); }

Var Tape::leaf(Array value) {
    nodes_.push_back({std::move(value), Array{}, true, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Array value) {
    nodes_.push_back({std::move(value), Array{}, false, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make(Array value, std::vector<int> parents, std::function<void(Tape&, int)> backward) {
    bool needs = false;
    for (int p : parents)
        if (nodes_[static_cast<size_t>(p)].needs_grad) needs = true;
    Node nd;
    nd.value = std::move(value);
    nd.needs_grad = needs;
    if (needs) nd.backward = std::move(backward);
    nodes_.push_back(std::move(nd));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int i, const Array& g) {
    Node& nd = nodes_[static_cast<size_t>(i)];
    if (!nd.needs_grad) return;
    if (nd.grad.numel() == 0) nd.grad = Array::zeros(nd.value.shape());
    if (!nd.grad.same_shape(g)) throw std::logic_error("accumulate: gradient shape mismatch");
    const Precision p = precision();
    double* dst = nd.grad.data();
    const double* src = g.data();
    for (long k = 0; k < g.numel(); ++k) dst[k] = quantize(dst[k] + src[k], p);
}

void Tape::backward(Var root) {
    if (root.tape != this) throw std::invalid_argument("backward: var from another tape");
    if (value(root.idx).numel() != 1) throw std::invalid_argument("backward: root must be scalar");
    accumulate(root.idx, Array::full(value(root.idx).shape(), 1.0));
    for (int i = root.idx; i >= 0; --i) {
        Node& nd = nodes_[static_cast<size_t>(i)];
        if (!nd.needs_grad || nd.grad.numel() == 0 || !nd.backward) continue;
        nd.backward(*this, i);
    }
}

Array Tape::grad_of(Var v) const {
    const Node& nd = nodes_[static_cast<size_t>(v.idx)];
    if (nd.grad.numel() == 0) return Array::zeros(nd.value.shape());
    return nd.grad;
}

// ---- elementwise -------------------------------------------------------

namespace {

template <class Fwd, class Bwd>
Var unary_op(Var a, const char* name, Fwd fwd, Bwd bwd) {
    (void)name;
    const Array& av = a.val();
    Array out(av.shape());
    for (long i = 0; i < av.numel(); ++i)
        out.at(static_cast<int>(i)) = fwd(av.at(static_cast<int>(i)));
    out.quantize_mode();
    const int ai = a.idx;
    return a.tape->make(std::move(out), {ai}, [ai, bwd](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& x = t.value(ai);
        const Array& y = t.value(self);
        Array gx(x.shape());
        for (long i = 0; i < x.numel(); ++i)
            gx.at(static_cast<int>(i)) =
                g.at(static_cast<int>(i)) * bwd(x.at(static_cast<int>(i)), y.at(static_cast<int>(i)));
        t.accumulate(ai, gx);
    });
}

}  // namespace

Var add(Var a, Var b) {
    check_same_tape(a, b, "add");
    check_same_shape(a.val(), b.val(), "add");
    Array out(a.val().shape());
    for (long i = 0; i < out.numel(); ++i)
        out.at(static_cast<int>(i)) = a.val().at(static_cast<int>(i)) + b.val().at(static_cast<int>(i));
    out.quantize_mode();
    const int ai = a.idx, bi = b.idx;
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        t.accumulate(ai, g);
        t.accumulate(bi, g);
    });
}

Var sub(Var a, Var b) {
    check_same_tape(a, b, "sub");
    check_same_shape(a.val(), b.val(), "sub");
    Array out(a.val().shape());
    for (long i = 0; i < out.numel(); ++i)
        out.at(static_cast<int>(i)) = a.val().at(static_cast<int>(i)) - b.val().at(static_cast<int>(i));
    out.quantize_mode();
    const int ai = a.idx, bi = b.idx;
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        t.accumulate(ai, g);
        Array ng(g.shape());
        for (long i = 0; i < g.numel(); ++i) ng.at(static_cast<int>(i)) = -g.at(static_cast<int>(i));
        t.accumulate(bi, ng);
    });
}

Var mul(Var a, Var b) {
    check_same_tape(a, b, "mul");
    check_same_shape(a.val(), b.val(), "mul");
    Array out(a.val().shape());
    for (long i = 0; i < out.numel(); ++i)
        out.at(static_cast<int>(i)) = a.val().at(static_cast<int>(i)) * b.val().at(static_cast<int>(i));
    out.quantize_mode();
    const int ai = a.idx, bi = b.idx;
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& av = t.value(ai);
        const Array& bv = t.value(bi);
        Array ga(av.shape()), gb(bv.shape());
        for (long i = 0; i < g.numel(); ++i) {
            ga.at(static_cast<int>(i)) = g.at(static_cast<int>(i)) * bv.at(static_cast<int>(i));
            gb.at(static_cast<int>(i)) = g.at(static_cast<int>(i)) * av.at(static_cast<int>(i));
        }
        t.accumulate(ai, ga);
        t.accumulate(bi, gb);
    });
}

Var div(Var a, Var b) {
    check_same_tape(a, b, "div");
    check_same_shape(a.val(), b.val(), "div");
    Array out(a.val().shape());
    for (long i = 0; i < out.numel(); ++i)
        out.at(static_cast<int>(i)) = a.val().at(static_cast<int>(i)) / b.val().at(static_cast<int>(i));
    out.quantize_mode();
    const int ai = a.idx, bi = b.idx;
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& av = t.value(ai);
        const Array& bv = t.value(bi);
        Array ga(av.shape()), gb(bv.shape());
        for (long i = 0; i < g.numel(); ++i) {
            const double bvv = bv.at(static_cast<int>(i));
            ga.at(static_cast<int>(i)) = g.at(static_cast<int>(i)) / bvv;
            gb.at(static_cast<int>(i)) =
                -g.at(static_cast<int>(i)) * av.at(static_cast<int>(i)) / (bvv * bvv);
        }
        t.accumulate(ai, ga);
        t.accumulate(bi, gb);
    });
}

Var add_scalar(Var a, double c) {
    return unary_op(
        a, "add_scalar", [c](double x) { return x + c; },
        [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, double c) {
    return unary_op(
        a, "mul_scalar", [c](double x) { return x * c; },
        [c](double, double) { return c; });
}

Var exp_op(Var a) {
    return unary_op(
        a, "exp", [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

Var log_op(Var a) {
    return unary_op(
        a, "log", [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
}

Var sqrt_op(Var a) {
    return unary_op(
        a, "sqrt", [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Var tanh_op(Var a) {
    return unary_op(
        a, "tanh", [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var a) {
    return unary_op(
        a, "gelu",
        [](double x) {
            const double u = kGeluC * (x + kGeluA * x * x * x);
            return 0.5 * x * (1.0 + std::tanh(u));
        },
        [](double x, double) {
            const double u = kGeluC * (x + kGeluA * x * x * x);
            const double th = std::tanh(u);
            const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
            return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
        });
}

Var softplus(Var a) {
    return unary_op(
        a, "softplus",
        [](double x) {
            if (x > 30.0) return x;
            if (x < -30.0) return std::exp(x);
            return std::log1p(std::exp(x));
        },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var clamp_op(Var a, double lo, double hi) {
    return unary_op(
        a, "clamp",
        [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// ---- linear algebra -----------------------------------------------------

Var matmul(Var a, Var b) {
    check_same_tape(a, b, "matmul");
    const Array& av = a.val();
    const Array& bv = b.val();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
        throw std::invalid_argument("matmul: incompatible shapes " + av.shape_str() + " " +
                                    bv.shape_str());
    Array out({av.rows(), bv.cols()});
    kern::matmul(av.data(), bv.data(), out.data(), av.rows(), av.cols(), bv.cols());
    out.quantize_mode();
    const int ai = a.idx, bi = b.idx;
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& av2 = t.value(ai);
        const Array& bv2 = t.value(bi);
        if (t.needs_grad(ai)) {
            Array bt = transposed(bv2);
            Array ga({av2.rows(), av2.cols()});
            kern::matmul(g.data(), bt.data(), ga.data(), g.rows(), g.cols(), bt.cols());
            t.accumulate(ai, ga);
        }
        if (t.needs_grad(bi)) {
            Array at = transposed(av2);
            Array gb({bv2.rows(), bv2.cols()});
            kern::matmul(at.data(), g.data(), gb.data(), at.rows(), at.cols(), g.cols());
            t.accumulate(bi, gb);
        }
    });
}

Var transpose(Var a) {
    const Array& av = a.val();
    if (av.rank() != 2) throw std::invalid_argument("transpose: rank-2 only");
    Array out = transposed(av);
    out.quantize_mode();
    const int ai = a.idx;
    return a.tape->make(std::move(out), {ai}, [ai](Tape& t, int self) {
        t.accumulate(ai, transposed(t.grad_ref(self)));
    });
}

// ---- reductions / broadcasts ---------------------------------------------

Var sum_all(Var a) {
    const Array& av = a.val();
    double s = 0.0;
    for (long i = 0; i < av.numel(); ++i) s += av.at(static_cast<int>(i));
    Array out({1}, {quantize(s, precision())});
    const int ai = a.idx;
    return a.tape->make(std::move(out), {ai}, [ai](Tape& t, int self) {
        const double g = t.grad_ref(self).at(0);
        t.accumulate(ai, Array::full(t.value(ai).shape(), g));
    });
}

Var sum_rows(Var a) {
    const Array& av = a.val();
    if (av.rank() != 2) throw std::invalid_argument("sum_rows: rank-2 only");
    Array out({av.rows(), 1});
    for (int i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < av.cols(); ++j) s += av.at(i, j);
        out.at(i, 0) = s;
    }
    out.quantize_mode();
    const int ai = a.idx;
    return a.tape->make(std::move(out), {ai}, [ai](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& x = t.value(ai);
        Array gx(x.shape());
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j) gx.at(i, j) = g.at(i, 0);
        t.accumulate(ai, gx);
    });
}

Var sum_cols(Var a) {
    const Array& av = a.val();
    if (av.rank() != 2) throw std::invalid_argument("sum_cols: rank-2 only");
    Array out({1, av.cols()});
    for (int j = 0; j < av.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < av.rows(); ++i) s += av.at(i, j);
        out.at(0, j) = s;
    }
    out.quantize_mode();
    const int ai = a.idx;
    return a.tape->make(std::move(out), {ai}, [ai](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& x = t.value(ai);
        Array gx(x.shape());
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j) gx.at(i, j) = g.at(0, j);
        t.accumulate(ai, gx);
    });
}

Var bcast_rows(Var v, int n) {
    const Array& vv = v.val();
    if (vv.rank() != 2 || vv.rows() != 1) throw std::invalid_argument("bcast_rows: need [1 x d]");
    Array out({n, vv.cols()});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < vv.cols(); ++j) out.at(i, j) = vv.at(0, j);
    const int vi = v.idx;
    return v.tape->make(std::move(out), {vi}, [vi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        Array gv({1, g.cols()});
        for (int j = 0; j < g.cols(); ++j) {
            double s = 0.0;
            for (int i = 0; i < g.rows(); ++i) s += g.at(i, j);
            gv.at(0, j) = s;
        }
        gv.quantize_mode();
        t.accumulate(vi, gv);
    });
}

Var bcast_cols(Var v, int d) {
    const Array& vv = v.val();
    if (vv.rank() != 2 || vv.cols() != 1) throw std::invalid_argument("bcast_cols: need [n x 1]");
    Array out({vv.rows(), d});
    for (int i = 0; i < vv.rows(); ++i)
        for (int j = 0; j < d; ++j) out.at(i, j) = vv.at(i, 0);
    const int vi = v.idx;
    return v.tape->make(std::move(out), {vi}, [vi](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        Array gv({g.rows(), 1});
        for (int i = 0; i < g.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < g.cols(); ++j) s += g.at(i, j);
            gv.at(i, 0) = s;
        }
        gv.quantize_mode();
        t.accumulate(vi, gv);
    });
}

// ---- softmax --------------------------------------------------------------

Array softmax_rows(const Array& m) {
    if (m.rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 only");
    Array out(m.shape());
    for (int i = 0; i < m.rows(); ++i) {
        double mx = m.at(i, 0);
        for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, m.at(i, j));
        double denom = 0.0;
        for (int j = 0; j < m.cols(); ++j) denom += std::exp(m.at(i, j) - mx);
        for (int j = 0; j < m.cols(); ++j) out.at(i, j) = std::exp(m.at(i, j) - mx) / denom;
    }
    return out;
}

Var softmax_rows_op(Var a) {
    Array out = softmax_rows(a.val());
    out.quantize_mode();
    const int ai = a.idx;
    return a.tape->make(std::move(out), {ai}, [ai](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& y = t.value(self);
        Array gx(y.shape());
        for (int i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols(); ++j) gx.at(i, j) = (g.at(i, j) - dot) * y.at(i, j);
        }
        t.accumulate(ai, gx);
    });
}

// ---- indexing --------------------------------------------------------------

Var gather_rows(Var x, const std::vector<int>& idx) {
    const Array& xv = x.val();
    if (xv.rank() != 2) throw std::invalid_argument("gather_rows: rank-2 only");
    Array out({static_cast<int>(idx.size()), xv.cols()});
    for (size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= xv.rows()) throw std::out_of_range("gather_rows: bad index");
        for (int j = 0; j < xv.cols(); ++j) out.at(static_cast<int>(r), j) = xv.at(idx[r], j);
    }
    const int xi = x.idx;
    return x.tape->make(std::move(out), {xi}, [xi, idx](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& xv2 = t.value(xi);
        Array gx(xv2.shape());
        for (size_t r = 0; r < idx.size(); ++r)
            for (int j = 0; j < xv2.cols(); ++j) gx.at(idx[r], j) += g.at(static_cast<int>(r), j);
        t.accumulate(xi, gx);
    });
}

Var segment_mean(Var x, const std::vector<int>& labels, int n_groups) {
    const Array& xv = x.val();
    if (xv.rank() != 2) throw std::invalid_argument("segment_mean: rank-2 only");
    if (static_cast<int>(labels.size()) != xv.rows())
        throw std::invalid_argument("segment_mean: one label per row required");
    std::vector<long> count(static_cast<size_t>(n_groups), 0);
    Array out({n_groups, xv.cols()});
    for (int i = 0; i < xv.rows(); ++i) {
        const int g = labels[static_cast<size_t>(i)];
        if (g < 0 || g >= n_groups) throw std::out_of_range("segment_mean: label out of range");
        ++count[static_cast<size_t>(g)];
        for (int j = 0; j < xv.cols(); ++j) out.at(g, j) += xv.at(i, j);
    }
    for (int g = 0; g < n_groups; ++g) {
        if (count[static_cast<size_t>(g)] == 0) continue;
        const double inv = 1.0 / static_cast<double>(count[static_cast<size_t>(g)]);
        for (int j = 0; j < xv.cols(); ++j) out.at(g, j) *= inv;
    }
    out.quantize_mode();
    const int xi = x.idx;
    return x.tape->make(std::move(out), {xi}, [xi, labels, count](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& xv2 = t.value(xi);
        Array gx(xv2.shape());
        for (int i = 0; i < xv2.rows(); ++i) {
            const int gi = labels[static_cast<size_t>(i)];
            const double inv = 1.0 / static_cast<double>(count[static_cast<size_t>(gi)]);
            for (int j = 0; j < xv2.cols(); ++j) gx.at(i, j) = g.at(gi, j) * inv;
        }
        t.accumulate(xi, gx);
    });
}

// ---- concatenation / slicing ------------------------------------------------

Var concat_rows(Var a, Var b) {
    check_same_tape(a, b, "concat_rows");
    const Array& av = a.val();
    const Array& bv = b.val();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols())
        throw std::invalid_argument("concat_rows: column mismatch");
    Array out({av.rows() + bv.rows(), av.cols()});
    std::memcpy(out.data(), av.data(), sizeof(double) * static_cast<size_t>(av.numel()));
    std::memcpy(out.data() + av.numel(), bv.data(), sizeof(double) * static_cast<size_t>(bv.numel()));
    const int ai = a.idx, bi = b.idx;
    const int arows = av.rows();
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi, arows](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& av2 = t.value(ai);
        const Array& bv2 = t.value(bi);
        Array ga(av2.shape()), gb(bv2.shape());
        std::memcpy(ga.data(), g.data(), sizeof(double) * static_cast<size_t>(av2.numel()));
        std::memcpy(gb.data(), g.data() + static_cast<size_t>(arows) * g.cols(),
                    sizeof(double) * static_cast<size_t>(bv2.numel()));
        t.accumulate(ai, ga);
        t.accumulate(bi, gb);
    });
}

Var slice_rows(Var x, int start, int len) {
    const Array& xv = x.val();
    if (xv.rank() != 2 || start < 0 || start + len > xv.rows())
        throw std::invalid_argument("slice_rows: bad range");
    Array out({len, xv.cols()});
    std::memcpy(out.data(), xv.data() + static_cast<size_t>(start) * xv.cols(),
                sizeof(double) * static_cast<size_t>(out.numel()));
    const int xi = x.idx;
    return x.tape->make(std::move(out), {xi}, [xi, start, len](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& xv2 = t.value(xi);
        Array gx(xv2.shape());
        std::memcpy(gx.data() + static_cast<size_t>(start) * xv2.cols(), g.data(),
                    sizeof(double) * static_cast<size_t>(len) * xv2.cols());
        t.accumulate(xi, gx);
    });
}

Var concat_cols(Var a, Var b) {
    check_same_tape(a, b, "concat_cols");
    const Array& av = a.val();
    const Array& bv = b.val();
    if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows())
        throw std::invalid_argument("concat_cols: row mismatch");
    Array out({av.rows(), av.cols() + bv.cols()});
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(i, j);
        for (int j = 0; j < bv.cols(); ++j) out.at(i, av.cols() + j) = bv.at(i, j);
    }
    const int ai = a.idx, bi = b.idx;
    const int acols = av.cols();
    return a.tape->make(std::move(out), {ai, bi}, [ai, bi, acols](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& av2 = t.value(ai);
        const Array& bv2 = t.value(bi);
        Array ga(av2.shape()), gb(bv2.shape());
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < av2.cols(); ++j) ga.at(i, j) = g.at(i, j);
            for (int j = 0; j < bv2.cols(); ++j) gb.at(i, j) = g.at(i, acols + j);
        }
        t.accumulate(ai, ga);
        t.accumulate(bi, gb);
    });
}

Var slice_cols(Var x, int start, int len) {
    const Array& xv = x.val();
    if (xv.rank() != 2 || start < 0 || start + len > xv.cols())
        throw std::invalid_argument("slice_cols: bad range");
    Array out({xv.rows(), len});
    for (int i = 0; i < xv.rows(); ++i)
        for (int j = 0; j < len; ++j) out.at(i, j) = xv.at(i, start + j);
    const int xi = x.idx;
    return x.tape->make(std::move(out), {xi}, [xi, start, len](Tape& t, int self) {
        const Array& g = t.grad_ref(self);
        const Array& xv2 = t.value(xi);
        Array gx(xv2.shape());
        for (int i = 0; i < xv2.rows(); ++i)
            for (int j = 0; j < len; ++j) gx.at(i, start + j) = g.at(i, j);
        t.accumulate(xi, gx);
    });
}

Var reshape(Var x, std::vector<int> shape) {
    Array out = x.val().reshaped(shape);
    const int xi = x.idx;
    return x.tape->make(std::move(out), {xi}, [xi](Tape& t, int self) {
        t.accumulate(xi, t.grad_ref(self).reshaped(t.value(xi).shape()));
    });
}

// ---- structured ops -----------------------------------------------------

Var conv2d_op(Var x, Var w, Var b, int stride, int pad) {
    check_same_tape(x, w, "conv2d");
    const Array& xv = x.val();
    const Array& wv = w.val();
    if (xv.rank() != 3 || wv.rank() != 4) throw std::invalid_argument("conv2d: need [c,h,w] and [co,ci,kh,kw]");
    if (wv.dim(1) != xv.dim(0)) throw std::invalid_argument("conv2d: channel mismatch");
    const int cin = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
    const int cout = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
    const int ho = kern::conv_out_size(h, kh, stride, pad);
    const int wo = kern::conv_out_size(wd, kw, stride, pad);
    const bool has_bias = b.valid();
    if (has_bias && (b.val().numel() != cout)) throw std::invalid_argument("conv2d: bias size");
    Array out({cout, ho, wo});
    kern::conv2d(xv.data(), wv.data(), has_bias ? b.val().data() : nullptr, out.data(), cin, h, wd,
                 cout, kh, kw, stride, pad);
    out.quantize_mode();
    const int xi = x.idx, wi = w.idx, bi = has_bias ? b.idx : -1;
    return x.tape->make(
        std::move(out), has_bias ? std::vector<int>{xi, wi, bi} : std::vector<int>{xi, wi},
        [xi, wi, bi, cin, h, wd, cout, kh, kw, stride, pad, ho, wo](Tape& t, int self) {
            const Array& g = t.grad_ref(self);
            if (t.needs_grad(xi)) {
                Array gx({cin, h, wd});
                kern::conv2d_grad_input(t.value(wi).data(), g.data(), gx.data(), cin, h, wd, cout,
                                        kh, kw, stride, pad);
                t.accumulate(xi, gx);
            }
            if (t.needs_grad(wi)) {
                Array gw(t.value(wi).shape());
                kern::conv2d_grad_weight(t.value(xi).data(), g.data(), gw.data(), cin, h, wd, cout,
                                         kh, kw, stride, pad);
                t.accumulate(wi, gw);
            }
            if (bi >= 0 && t.needs_grad(bi)) {
                Array gb(t.value(bi).shape());
                kern::conv2d_grad_bias(g.data(), gb.data(), cout, ho, wo);
                t.accumulate(bi, gb);
            }
        });
}

Var bilinear_op(Var x, int ho, int wo) {
    const Array& xv = x.val();
    if (xv.rank() != 3) throw std::invalid_argument("bilinear: need [c,h,w]");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    if (ho == h && wo == w) {
        // identity short-circuit; still a node so gradients flow
        Array out = xv;
        const int xi = x.idx;
        return x.tape->make(std::move(out), {xi}, [xi](Tape& t, int self) {
            t.accumulate(xi, t.grad_ref(self));
        });
    }
    Array out({c, ho, wo});
    kern::bilinear_resize(xv.data(), out.data(), c, h, w, ho, wo);
    out.quantize_mode();
    const int xi = x.idx;
    return x.tape->make(std::move(out), {xi}, [xi, c, h, w, ho, wo](Tape& t, int self) {
        Array gx({c, h, w});
        kern::bilinear_resize_grad(t.grad_ref(self).data(), gx.data(), c, h, w, ho, wo);
        t.accumulate(xi, gx);
    });
}

}  // namespace shed
