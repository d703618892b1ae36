#pragma once

#include <functional>
#include <vector>

#include "shed/array.hpp"

namespace shed {

class Tape;

// Lightweight handle into a tape. Copyable, trivially small.
struct Var {
    Tape* tape = nullptr;
    int idx = -1;
    bool valid() const { return tape != nullptr && idx >= 0; }
    const Array& val() const;
};

// Reverse-mode tape over a fixed op vocabulary. Nodes are appended in forward
// order; creation order is a topological order, so the backward pass walks
// indices in reverse. Leaves accumulate gradients (never overwrite), which
// makes reuse of a value along several paths sum correctly.
//
// A tape serves exactly one forward/backward pass and is single threaded.
// Independent passes run concurrently on separate tapes.
class Tape {
public:
    Var leaf(Array value);      // gradient-tracked input (parameters, probes)
    Var constant(Array value);  // data that never needs a gradient

    Var make(Array value, std::vector<int> parents,
             std::function<void(Tape&, int)> backward);

    const Array& value(int i) const { return nodes_[static_cast<size_t>(i)].value; }
    bool needs_grad(int i) const { return nodes_[static_cast<size_t>(i)].needs_grad; }
    const Array& grad_ref(int i) const { return nodes_[static_cast<size_t>(i)].grad; }
    bool has_grad(int i) const { return nodes_[static_cast<size_t>(i)].grad.numel() > 0; }

    // += into a node's gradient, allocating on first touch
    void accumulate(int i, const Array& g);

    // Seed d(root)/d(root) = 1 and propagate. root must be scalar.
    void backward(Var root);

    // Gradient of a node; zeros if the node was never reached.
    Array grad_of(Var v) const;

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Array value;
        Array grad;
        bool needs_grad = false;
        std::function<void(Tape&, int)> backward;
    };
    std::vector<Node> nodes_;
};

// ---- op vocabulary ----------------------------------------------------
// Elementwise ops require identical shapes; broadcasting is explicit via
// bcast_rows / bcast_cols.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_scalar(Var a, double c);
Var mul_scalar(Var a, double c);

Var matmul(Var a, Var b);  // [m x k] * [k x n]
Var transpose(Var a);      // rank 2

Var exp_op(Var a);
Var log_op(Var a);
Var sqrt_op(Var a);
Var tanh_op(Var a);
Var gelu(Var a);      // tanh approximation
Var softplus(Var a);  // log(1 + e^x), numerically stable
Var clamp_op(Var a, double lo, double hi);  // zero gradient outside (lo, hi)

Var sum_all(Var a);   // -> [1]
Var sum_rows(Var a);  // [n x d] -> [n x 1]
Var sum_cols(Var a);  // [n x d] -> [1 x d]
Var bcast_rows(Var v, int n);  // [1 x d] -> [n x d]
Var bcast_cols(Var v, int d);  // [n x 1] -> [n x d]

Var softmax_rows_op(Var a);  // stable row softmax, rank 2

Var gather_rows(Var x, const std::vector<int>& idx);
// mean of rows sharing a label; groups with no rows produce a zero row
Var segment_mean(Var x, const std::vector<int>& labels, int n_groups);

Var concat_rows(Var a, Var b);
Var slice_rows(Var x, int start, int len);
Var concat_cols(Var a, Var b);
Var slice_cols(Var x, int start, int len);

Var reshape(Var x, std::vector<int> shape);

// x: [cin, h, w], w: [cout, cin, kh, kw], b: [cout] or invalid Var for none
Var conv2d_op(Var x, Var w, Var b, int stride, int pad);
// [c, h, w] -> [c, ho, wo], align-corners-false
Var bilinear_op(Var x, int ho, int wo);

// value-level helper (not differentiable): stable row softmax on an Array
Array softmax_rows(const Array& m);

}  // namespace shed
