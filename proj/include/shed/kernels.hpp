#pragma once

// Hot inner loops, each in two forms: a plain serial reference and an
// OpenMP-parallel version. The parallel form splits work over independent
// output elements only, with the per-element reduction order unchanged, so
// both forms produce bitwise-identical results for any thread count. Tests
// compare them directly and the bench target times them against each other.

namespace shed::kern {

// c[m x n] = a[m x k] * b[k x n]
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// x: [cin, h, w], w: [cout, cin, kh, kw], b: [cout] (may be null), out: [cout, ho, wo]
// ho = (h + 2*pad - kh)/stride + 1, likewise wo.
void conv2d_serial(const double* x, const double* w, const double* b, double* out,
                   int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad);
void conv2d(const double* x, const double* w, const double* b, double* out,
            int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad);

// gradients for conv2d; gx/gw/gb accumulate into zeroed buffers
void conv2d_grad_input(const double* w, const double* gout, double* gx,
                       int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad);
void conv2d_grad_weight(const double* x, const double* gout, double* gw,
                        int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad);
void conv2d_grad_bias(const double* gout, double* gb, int cout, int ho, int wo);

// align-corners-false bilinear resize, x: [c, h, w] -> out: [c, ho, wo]
void bilinear_resize_serial(const double* x, double* out, int c, int h, int w, int ho, int wo);
void bilinear_resize(const double* x, double* out, int c, int h, int w, int ho, int wo);
// scatter adjoint of the resize; gx accumulates into a zeroed [c, h, w] buffer
void bilinear_resize_grad(const double* gout, double* gx, int c, int h, int w, int ho, int wo);

// squared euclidean distance from each query to its nearest reference point.
// dim is 2 or 3. Exact: grid-bucketed search with ring expansion. out has one
// entry per query.
void nearest_sqdist_serial(const double* query, int nq, const double* ref, int nr, int dim,
                           double* out);
void nearest_sqdist(const double* query, int nq, const double* ref, int nr, int dim, double* out);

int conv_out_size(int in, int k, int stride, int pad);

}  // namespace shed::kern
