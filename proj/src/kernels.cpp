#include "shed/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace shed::kern {

int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

namespace {

inline void matmul_row(const double* a, const double* b, double* c, int i, int k, int n) {
    double* ci = c + static_cast<size_t>(i) * n;
    std::memset(ci, 0, sizeof(double) * static_cast<size_t>(n));
    const double* ai = a + static_cast<size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
        const double av = ai[kk];
        if (av == 0.0) continue;
        const double* bk = b + static_cast<size_t>(kk) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
}

inline void conv2d_one_out_channel(const double* x, const double* w, const double* b,
                                   double* out, int co, int cin, int h, int wd, int kh, int kw,
                                   int stride, int pad, int ho, int wo) {
    double* oc = out + static_cast<size_t>(co) * ho * wo;
    const double bias = b ? b[co] : 0.0;
    const double* wc = w + static_cast<size_t>(co) * cin * kh * kw;
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            double acc = bias;
            for (int ci = 0; ci < cin; ++ci) {
                const double* xc = x + static_cast<size_t>(ci) * h * wd;
                const double* wk = wc + static_cast<size_t>(ci) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= wd) continue;
                        acc += xc[static_cast<size_t>(iy) * wd + ix] * wk[ky * kw + kx];
                    }
                }
            }
            oc[static_cast<size_t>(oy) * wo + ox] = acc;
        }
    }
}

// sample position mapping for align-corners-false
inline void resize_coeffs(int out_i, int in_size, int out_size, int* i0, int* i1, double* w1) {
    const double s = (out_i + 0.5) * (static_cast<double>(in_size) / out_size) - 0.5;
    double f = std::floor(s);
    *w1 = s - f;
    int lo = static_cast<int>(f);
    *i0 = std::clamp(lo, 0, in_size - 1);
    *i1 = std::clamp(lo + 1, 0, in_size - 1);
}

inline void resize_one_channel(const double* xc, double* oc, int h, int w, int ho, int wo) {
    for (int oy = 0; oy < ho; ++oy) {
        int y0, y1;
        double fy;
        resize_coeffs(oy, h, ho, &y0, &y1, &fy);
        for (int ox = 0; ox < wo; ++ox) {
            int x0, x1;
            double fx;
            resize_coeffs(ox, w, wo, &x0, &x1, &fx);
            const double v00 = xc[static_cast<size_t>(y0) * w + x0];
            const double v01 = xc[static_cast<size_t>(y0) * w + x1];
            const double v10 = xc[static_cast<size_t>(y1) * w + x0];
            const double v11 = xc[static_cast<size_t>(y1) * w + x1];
            oc[static_cast<size_t>(oy) * wo + ox] =
                (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
        }
    }
}

inline double sqdist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double t = a[d] - b[d];
        s += t * t;
    }
    return s;
}

// simple integer-cell bucket grid for exact nearest neighbor
struct BucketGrid {
    int dim;
    double cell;
    double origin[3];
    std::unordered_map<long long, std::vector<int>> buckets;
    const double* pts;
    int n;

    BucketGrid(const double* ref, int nr, int d) : dim(d), pts(ref), n(nr) {
        double lo[3], hi[3];
        for (int k = 0; k < dim; ++k) {
            lo[k] = std::numeric_limits<double>::infinity();
            hi[k] = -std::numeric_limits<double>::infinity();
        }
        for (int i = 0; i < nr; ++i)
            for (int k = 0; k < dim; ++k) {
                lo[k] = std::min(lo[k], ref[static_cast<size_t>(i) * dim + k]);
                hi[k] = std::max(hi[k], ref[static_cast<size_t>(i) * dim + k]);
            }
        double extent = 0.0;
        for (int k = 0; k < dim; ++k) extent = std::max(extent, hi[k] - lo[k]);
        // aim for a few points per cell on average
        double cells_per_axis = std::max(1.0, std::cbrt(static_cast<double>(nr)));
        if (dim == 2) cells_per_axis = std::max(1.0, std::sqrt(static_cast<double>(nr)));
        cell = extent > 0 ? extent / cells_per_axis : 1.0;
        for (int k = 0; k < 3; ++k) origin[k] = k < dim ? lo[k] : 0.0;
        for (int i = 0; i < nr; ++i) buckets[key_of(ref + static_cast<size_t>(i) * dim)].push_back(i);
    }

    long long cell_index(const double* p, int k) const {
        return static_cast<long long>(std::floor((p[k] - origin[k]) / cell));
    }

    long long key(long long cx, long long cy, long long cz) const {
        return ((cx * 73856093LL) ^ (cy * 19349663LL) ^ (cz * 83492791LL));
    }

    long long key_of(const double* p) const {
        return key(cell_index(p, 0), cell_index(p, 1), dim == 3 ? cell_index(p, 2) : 0);
    }

    double query(const double* q) const {
        const long long qx = cell_index(q, 0);
        const long long qy = cell_index(q, 1);
        const long long qz = dim == 3 ? cell_index(q, 2) : 0;
        double best = std::numeric_limits<double>::infinity();
        for (long long ring = 0;; ++ring) {
            // points in cell-shell `ring` lie at euclidean distance of at least
            // (ring-1)*cell, so once best beats that bound no further shell can
            // improve on it
            if (ring > 0 && std::isfinite(best)) {
                const double safe = static_cast<double>(ring - 1) * cell;
                if (safe * safe > best) break;
            }
            const long long zlo = dim == 3 ? qz - ring : 0;
            const long long zhi = dim == 3 ? qz + ring : 0;
            for (long long cz = zlo; cz <= zhi; ++cz)
                for (long long cy = qy - ring; cy <= qy + ring; ++cy)
                    for (long long cx = qx - ring; cx <= qx + ring; ++cx) {
                        const long long dx = std::llabs(cx - qx);
                        const long long dy = std::llabs(cy - qy);
                        const long long dz = std::llabs(cz - qz);
                        if (std::max({dx, dy, dz}) != ring) continue;  // shell only
                        auto it = buckets.find(key(cx, cy, cz));
                        if (it == buckets.end()) continue;
                        for (int i : it->second)
                            best = std::min(best, sqdist(q, pts + static_cast<size_t>(i) * dim, dim));
                    }
            if (ring > (1LL << 24))
                throw std::runtime_error("nearest_sqdist: ring expansion failed");
        }
        return best;
    }
};

}  // namespace

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void conv2d_serial(const double* x, const double* w, const double* b, double* out,
                   int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad) {
    const int ho = conv_out_size(h, kh, stride, pad);
    const int wo = conv_out_size(wd, kw, stride, pad);
    for (int co = 0; co < cout; ++co)
        conv2d_one_out_channel(x, w, b, out, co, cin, h, wd, kh, kw, stride, pad, ho, wo);
}

void conv2d(const double* x, const double* w, const double* b, double* out,
            int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad) {
    const int ho = conv_out_size(h, kh, stride, pad);
    const int wo = conv_out_size(wd, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co)
        conv2d_one_out_channel(x, w, b, out, co, cin, h, wd, kh, kw, stride, pad, ho, wo);
}

void conv2d_grad_input(const double* w, const double* gout, double* gx,
                       int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad) {
    const int ho = conv_out_size(h, kh, stride, pad);
    const int wo = conv_out_size(wd, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < cin; ++ci) {
        double* gc = gx + static_cast<size_t>(ci) * h * wd;
        for (int iy = 0; iy < h; ++iy)
            for (int ix = 0; ix < wd; ++ix) {
                double acc = 0.0;
                for (int co = 0; co < cout; ++co) {
                    const double* go = gout + static_cast<size_t>(co) * ho * wo;
                    const double* wc =
                        w + (static_cast<size_t>(co) * cin + ci) * kh * kw;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int ny = iy + pad - ky;
                        if (ny < 0 || ny % stride != 0) continue;
                        const int oy = ny / stride;
                        if (oy >= ho) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int nx = ix + pad - kx;
                            if (nx < 0 || nx % stride != 0) continue;
                            const int ox = nx / stride;
                            if (ox >= wo) continue;
                            acc += go[static_cast<size_t>(oy) * wo + ox] * wc[ky * kw + kx];
                        }
                    }
                }
                gc[static_cast<size_t>(iy) * wd + ix] += acc;
            }
    }
}

void conv2d_grad_weight(const double* x, const double* gout, double* gw,
                        int cin, int h, int wd, int cout, int kh, int kw, int stride, int pad) {
    const int ho = conv_out_size(h, kh, stride, pad);
    const int wo = conv_out_size(wd, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
        const double* go = gout + static_cast<size_t>(co) * ho * wo;
        for (int ci = 0; ci < cin; ++ci) {
            const double* xc = x + static_cast<size_t>(ci) * h * wd;
            double* wc = gw + (static_cast<size_t>(co) * cin + ci) * kh * kw;
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    double acc = 0.0;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= wd) continue;
                            acc += go[static_cast<size_t>(oy) * wo + ox] *
                                   xc[static_cast<size_t>(iy) * wd + ix];
                        }
                    }
                    wc[ky * kw + kx] += acc;
                }
        }
    }
}

void conv2d_grad_bias(const double* gout, double* gb, int cout, int ho, int wo) {
    for (int co = 0; co < cout; ++co) {
        const double* go = gout + static_cast<size_t>(co) * ho * wo;
        double acc = 0.0;
        for (long i = 0; i < static_cast<long>(ho) * wo; ++i) acc += go[i];
        gb[co] += acc;
    }
}

void bilinear_resize_serial(const double* x, double* out, int c, int h, int w, int ho, int wo) {
    for (int ch = 0; ch < c; ++ch)
        resize_one_channel(x + static_cast<size_t>(ch) * h * w,
                           out + static_cast<size_t>(ch) * ho * wo, h, w, ho, wo);
}

void bilinear_resize(const double* x, double* out, int c, int h, int w, int ho, int wo) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch)
        resize_one_channel(x + static_cast<size_t>(ch) * h * w,
                           out + static_cast<size_t>(ch) * ho * wo, h, w, ho, wo);
}

void bilinear_resize_grad(const double* gout, double* gx, int c, int h, int w, int ho, int wo) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        const double* go = gout + static_cast<size_t>(ch) * ho * wo;
        double* gc = gx + static_cast<size_t>(ch) * h * w;
        for (int oy = 0; oy < ho; ++oy) {
            int y0, y1;
            double fy;
            resize_coeffs(oy, h, ho, &y0, &y1, &fy);
            for (int ox = 0; ox < wo; ++ox) {
                int x0, x1;
                double fx;
                resize_coeffs(ox, w, wo, &x0, &x1, &fx);
                const double g = go[static_cast<size_t>(oy) * wo + ox];
                gc[static_cast<size_t>(y0) * w + x0] += (1 - fy) * (1 - fx) * g;
                gc[static_cast<size_t>(y0) * w + x1] += (1 - fy) * fx * g;
                gc[static_cast<size_t>(y1) * w + x0] += fy * (1 - fx) * g;
                gc[static_cast<size_t>(y1) * w + x1] += fy * fx * g;
            }
        }
    }
}

void nearest_sqdist_serial(const double* query, int nq, const double* ref, int nr, int dim,
                           double* out) {
    if (nr <= 0) throw std::invalid_argument("nearest_sqdist: empty reference set");
    if (nr < 32) {
        for (int i = 0; i < nq; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < nr; ++j)
                best = std::min(best, sqdist(query + static_cast<size_t>(i) * dim,
                                             ref + static_cast<size_t>(j) * dim, dim));
            out[i] = best;
        }
        return;
    }
    BucketGrid grid(ref, nr, dim);
    for (int i = 0; i < nq; ++i) out[i] = grid.query(query + static_cast<size_t>(i) * dim);
}

void nearest_sqdist(const double* query, int nq, const double* ref, int nr, int dim, double* out) {
    if (nr <= 0) throw std::invalid_argument("nearest_sqdist: empty reference set");
    if (nr < 32) {
        nearest_sqdist_serial(query, nq, ref, nr, dim, out);
        return;
    }
    BucketGrid grid(ref, nr, dim);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nq; ++i) out[i] = grid.query(query + static_cast<size_t>(i) * dim);
}

}  // namespace shed::kern
