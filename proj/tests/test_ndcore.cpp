#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "shed/gradcheck.hpp"
#include "shed/kernels.hpp"
#include "shed/nn.hpp"
#include "shed/tape.hpp"

using namespace shed;

namespace {

struct PrecisionGuard {
    Precision saved;
    explicit PrecisionGuard(Precision p) : saved(precision()) { set_precision(p); }
    ~PrecisionGuard() { set_precision(saved); }
};

Array random_array(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Array a(std::move(shape));
    for (long i = 0; i < a.numel(); ++i) a.at(static_cast<int>(i)) = rng.uniform(lo, hi);
    return a;
}

// scalar-ize an op's output against fixed random weights so every output
// element contributes to the gradient
Var weighted_sum(Tape& t, Var y, Rng& rng) {
    Array w(y.val().shape());
    for (long i = 0; i < w.numel(); ++i) w.at(static_cast<int>(i)) = rng.uniform(-1.0, 1.0);
    return sum_all(mul(y, t.constant(w)));
}

}  // namespace

TEST_CASE("rng determinism and child streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    CHECK(c.next_u64() != d.next_u64());
    Rng base(7);
    Rng c1 = base.child("data"), c2 = base.child("data"), c3 = base.child("params");
    CHECK(c1.next_u64() == c2.next_u64());
    Rng c4 = base.child("data");
    CHECK(c4.next_u64() != c3.next_u64());
    // uniform stays in [0,1)
    Rng u(11);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("softmax_rows examples") {
    Array m({3, 2}, {0, 0, 5, 5, 0, std::log(3.0)});
    Array s = softmax_rows(Array({1, 2}, {0, 0}));
    CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

    Array s3 = softmax_rows(Array({1, 3}, {5, 5, 5}));
    for (int j = 0; j < 3; ++j) CHECK(s3.at(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-12));

    Array sl = softmax_rows(Array({1, 2}, {0, std::log(3.0)}));
    CHECK(sl.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sl.at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax_rows properties: row sums and shift invariance") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        Array m = random_array({4, 5}, rng, -3, 3);
        Array s = softmax_rows(m);
        for (int i = 0; i < 4; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < 5; ++j) {
                CHECK(s.at(i, j) >= 0.0);
                rowsum += s.at(i, j);
            }
            CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-6));
        }
        Array shifted = m;
        const double c = rng.uniform(-10, 10);
        for (int j = 0; j < 5; ++j) shifted.at(1, j) += c;
        Array s2 = softmax_rows(shifted);
        for (int j = 0; j < 5; ++j) CHECK(s2.at(1, j) == doctest::Approx(s.at(1, j)).epsilon(1e-6));
    }
}

TEST_CASE("layer_norm examples") {
    Tape t;
    auto ln = [&](std::vector<double> row, double g, double b, double eps) {
        Tape tt;
        Var x = tt.leaf(Array({1, static_cast<int>(row.size())}, row));
        Var gv = tt.constant(Array::full({1, static_cast<int>(row.size())}, g));
        Var bv = tt.constant(Array::full({1, static_cast<int>(row.size())}, b));
        return layer_norm(x, gv, bv, eps).val();
    };
    Array r1 = ln({1, 1}, 1, 0, 1e-5);
    CHECK(r1.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r1.at(0, 1) == doctest::Approx(0.0).epsilon(1e-9));

    Array r2 = ln({-1, 1}, 1, 0, 1e-12);
    CHECK(r2.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(r2.at(0, 1) == doctest::Approx(1.0).epsilon(1e-5));

    Array r3 = ln({0, 2}, 2, 1, 1e-12);
    CHECK(r3.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(r3.at(0, 1) == doctest::Approx(3.0).epsilon(1e-5));
}

TEST_CASE("layer_norm rows have zero mean unit variance pre-affine") {
    PrecisionGuard g(Precision::f64);
    Rng rng(3);
    Array x = random_array({5, 8}, rng, -2, 2);
    Tape t;
    Var out = layer_norm(t.leaf(x), t.constant(Array::full({1, 8}, 1.0)),
                         t.constant(Array::zeros({1, 8})), 1e-10);
    for (int i = 0; i < 5; ++i) {
        double mu = 0.0, var = 0.0;
        for (int j = 0; j < 8; ++j) mu += out.val().at(i, j);
        mu /= 8;
        for (int j = 0; j < 8; ++j) var += (out.val().at(i, j) - mu) * (out.val().at(i, j) - mu);
        var /= 8;
        CHECK(std::fabs(mu) < 1e-5);
        CHECK(std::fabs(var - 1.0) < 1e-5);
    }
}

TEST_CASE("attention_block: zero projection weights give exact identity") {
    PrecisionGuard g(Precision::f64);
    Rng rng(5);
    const int d = 8, n = 4;
    ParamStore ps;
    Rng init(9);
    add_attention_block_params(ps, "blk", d, init);
    // zero out every projection weight and bias
    for (const auto& nm : ps.names())
        if (nm.find(".w") != std::string::npos || nm.find(".b") != std::string::npos)
            if (nm.find("ln") == std::string::npos) ps.at(nm).fill(0.0);

    Array x = random_array({n, d}, rng, -2, 2);
    Tape t;
    ParamVars pv = ParamVars::bind(t, ps);
    Var out = attention_block(t.leaf(x), attention_block_vars(pv, "blk"), 2);
    CHECK(bitwise_equal(out.val(), x));
}

TEST_CASE("attention_block: single token equals input plus value-path projection") {
    PrecisionGuard g(Precision::f64);
    Rng rng(6);
    const int d = 4;
    ParamStore ps;
    Rng init(10);
    add_attention_block_params(ps, "blk", d, init);
    // silence the MLP sublayer so only the attention path remains
    ps.at("blk.m2.w").fill(0.0);
    ps.at("blk.m2.b").fill(0.0);

    Array x = random_array({1, d}, rng, -1, 1);
    Tape t;
    ParamVars pv = ParamVars::bind(t, ps);
    Var out = attention_block(t.leaf(x), attention_block_vars(pv, "blk"), 1);

    // with one token the attention weight matrix is [1.0], so the head output
    // is exactly the value projection of the normalized input
    Array h = oracle::naive_layer_norm(x, ps.at("blk.ln1.g"), ps.at("blk.ln1.b"), 1e-5);
    Array v = oracle::naive_matmul(h, ps.at("blk.v.w"));
    for (int j = 0; j < d; ++j) v.at(0, j) += ps.at("blk.v.b").at(0, j);
    Array o = oracle::naive_matmul(v, ps.at("blk.o.w"));
    for (int j = 0; j < d; ++j) o.at(0, j) += ps.at("blk.o.b").at(0, j) + x.at(0, j);

    for (int j = 0; j < d; ++j) CHECK(out.val().at(0, j) == doctest::Approx(o.at(0, j)).epsilon(1e-9));
}

TEST_CASE("attention_block matches scalar-loop oracle") {
    PrecisionGuard g(Precision::f64);
    for (uint64_t seed : {21u, 22u, 23u}) {
        Rng rng(seed);
        const int n = 3, d = 4, heads = 1;
        ParamStore ps;
        add_attention_block_params(ps, "blk", d, rng);
        Array x = random_array({n, d}, rng, -1.5, 1.5);

        Tape t;
        ParamVars pv = ParamVars::bind(t, ps);
        Var out = attention_block(t.leaf(x), attention_block_vars(pv, "blk"), heads);

        oracle::AttnParams op{ps.at("blk.ln1.g"), ps.at("blk.ln1.b"), ps.at("blk.q.w"),
                              ps.at("blk.q.b"),  ps.at("blk.k.w"),   ps.at("blk.k.b"),
                              ps.at("blk.v.w"),  ps.at("blk.v.b"),   ps.at("blk.o.w"),
                              ps.at("blk.o.b"),  ps.at("blk.ln2.g"), ps.at("blk.ln2.b"),
                              ps.at("blk.m1.w"), ps.at("blk.m1.b"),  ps.at("blk.m2.w"),
                              ps.at("blk.m2.b")};
        Array ref = oracle::naive_attention_block(x, op, heads);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                CHECK(std::fabs(out.val().at(i, j) - ref.at(i, j)) < 1e-6);
    }
    // multi-head as well
    Rng rng(31);
    const int n = 5, d = 8, heads = 4;
    ParamStore ps;
    add_attention_block_params(ps, "blk", d, rng);
    Array x = random_array({n, d}, rng, -1, 1);
    Tape t;
    ParamVars pv = ParamVars::bind(t, ps);
    Var out = attention_block(t.leaf(x), attention_block_vars(pv, "blk"), heads);
    oracle::AttnParams op{ps.at("blk.ln1.g"), ps.at("blk.ln1.b"), ps.at("blk.q.w"),
                          ps.at("blk.q.b"),  ps.at("blk.k.w"),   ps.at("blk.k.b"),
                          ps.at("blk.v.w"),  ps.at("blk.v.b"),   ps.at("blk.o.w"),
                          ps.at("blk.o.b"),  ps.at("blk.ln2.g"), ps.at("blk.ln2.b"),
                          ps.at("blk.m1.w"), ps.at("blk.m1.b"),  ps.at("blk.m2.w"),
                          ps.at("blk.m2.b")};
    Array ref = oracle::naive_attention_block(x, op, heads);
    for (long i = 0; i < ref.numel(); ++i)
        CHECK(std::fabs(out.val().at(static_cast<int>(i)) - ref.at(static_cast<int>(i))) < 1e-6);
}

TEST_CASE("grad_check examples: quadratic and constant") {
    PrecisionGuard g(Precision::f64);
    // f(x) = sum x^2, grad = 2x
    Array x({2}, {1, 2});
    auto quad = [](Tape& t, Var v) { return sum_all(mul(v, v)); };
    {
        Tape t;
        Var leaf = t.leaf(x);
        Var root = quad(t, leaf);
        t.backward(root);
        Array gr = t.grad_of(leaf);
        CHECK(gr.at(0) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(gr.at(1) == doctest::Approx(4.0).epsilon(1e-12));
    }
    GradCheckReport rep = grad_check(quad, x, 1e-5, 1e-8);
    CHECK(rep.pass);
    CHECK(rep.max_rel_err < 1e-8);

    // f(x) = sum softmax_rows(x): constant 1 per row, grad ~ 0
    Array m({2, 3}, {0.3, -0.1, 0.7, 1.0, 2.0, -1.0});
    auto smsum = [](Tape& t, Var v) { return sum_all(softmax_rows_op(v)); };
    Tape t2;
    Var leaf2 = t2.leaf(m);
    Var root2 = smsum(t2, leaf2);
    t2.backward(root2);
    Array g2 = t2.grad_of(leaf2);
    for (long i = 0; i < g2.numel(); ++i) CHECK(std::fabs(g2.at(static_cast<int>(i))) < 1e-12);
    GradCheckReport rep2 = grad_check(smsum, m, 1e-5, 1e-8);
    CHECK(rep2.pass);
}

TEST_CASE("gradient accumulation: value used twice sums both paths") {
    PrecisionGuard g(Precision::f64);
    Tape t;
    Var x = t.leaf(Array({3}, {1, 2, 3}));
    Var y = sum_all(add(x, x));
    t.backward(y);
    Array gr = t.grad_of(x);
    for (int i = 0; i < 3; ++i) CHECK(gr.at(i) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("every differentiable op passes grad_check on random shapes") {
    PrecisionGuard g(Precision::f64);
    const double h = 1e-5, tol = 1e-4;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 100);
        const int n = 2 + rng.uniform_int(3);
        const int d = 2 + rng.uniform_int(3);

        auto check = [&](const char* name, const TapeFn& f, const Array& x) {
            GradCheckReport rep = grad_check(f, x, h, tol);
            INFO(name << " seed " << seed << " rel err " << rep.max_rel_err);
            CHECK(rep.pass);
        };

        Array x = random_array({n, d}, rng, -1.5, 1.5);
        Array xp = random_array({n, d}, rng, 0.5, 2.0);
        Array other = random_array({n, d}, rng, 0.5, 2.0);
        uint64_t wseed = seed * 1000;

        auto wsum = [&](Tape& t, Var y) {
            Rng wr(wseed);
            return weighted_sum(t, y, wr);
        };

        check("add", [&](Tape& t, Var v) { return wsum(t, add(v, t.constant(other))); }, x);
        check("sub", [&](Tape& t, Var v) { return wsum(t, sub(t.constant(other), v)); }, x);
        check("mul", [&](Tape& t, Var v) { return wsum(t, mul(v, t.constant(other))); }, x);
        check("div", [&](Tape& t, Var v) { return wsum(t, div(t.constant(other), v)); }, xp);
        check("div_num", [&](Tape& t, Var v) { return wsum(t, div(v, t.constant(other))); }, x);
        check("mul_scalar", [&](Tape& t, Var v) { return wsum(t, mul_scalar(v, -1.7)); }, x);
        check("add_scalar", [&](Tape& t, Var v) { return wsum(t, add_scalar(v, 0.3)); }, x);
        check("exp", [&](Tape& t, Var v) { return wsum(t, exp_op(v)); }, x);
        check("log", [&](Tape& t, Var v) { return wsum(t, log_op(v)); }, xp);
        check("sqrt", [&](Tape& t, Var v) { return wsum(t, sqrt_op(v)); }, xp);
        check("tanh", [&](Tape& t, Var v) { return wsum(t, tanh_op(v)); }, x);
        check("gelu", [&](Tape& t, Var v) { return wsum(t, gelu(v)); }, x);
        check("softplus", [&](Tape& t, Var v) { return wsum(t, softplus(v)); }, x);
        check("clamp", [&](Tape& t, Var v) { return wsum(t, clamp_op(v, -10, 10)); }, x);
        check("matmul_a", [&](Tape& t, Var v) {
            return wsum(t, matmul(v, t.constant(random_array({d, 3}, rng))));
        }, x);
        check("transpose", [&](Tape& t, Var v) { return wsum(t, transpose(v)); }, x);
        check("sum_all", [&](Tape& t, Var v) { return sum_all(v); }, x);
        check("sum_rows", [&](Tape& t, Var v) { return wsum(t, sum_rows(v)); }, x);
        check("sum_cols", [&](Tape& t, Var v) { return wsum(t, sum_cols(v)); }, x);
        check("bcast_rows", [&](Tape& t, Var v) { return wsum(t, bcast_rows(v, 4)); },
              random_array({1, d}, rng));
        check("bcast_cols", [&](Tape& t, Var v) { return wsum(t, bcast_cols(v, 4)); },
              random_array({n, 1}, rng));
        check("softmax", [&](Tape& t, Var v) { return wsum(t, softmax_rows_op(v)); }, x);
        {
            std::vector<int> idx{0, n - 1, 0};
            check("gather_rows", [&](Tape& t, Var v) { return wsum(t, gather_rows(v, idx)); }, x);
        }
        {
            std::vector<int> labels(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = i % 2;
            check("segment_mean",
                  [&](Tape& t, Var v) { return wsum(t, segment_mean(v, labels, 3)); }, x);
        }
        check("concat_rows", [&](Tape& t, Var v) {
            return wsum(t, concat_rows(v, t.constant(other)));
        }, x);
        check("concat_cols", [&](Tape& t, Var v) {
            return wsum(t, concat_cols(v, t.constant(other)));
        }, x);
        check("slice_rows", [&](Tape& t, Var v) { return wsum(t, slice_rows(v, 1, n - 1)); }, x);
        check("slice_cols", [&](Tape& t, Var v) { return wsum(t, slice_cols(v, 1, d - 1)); }, x);
        check("reshape", [&](Tape& t, Var v) { return wsum(t, reshape(v, {d, n})); }, x);
        check("layer_norm", [&](Tape& t, Var v) {
            return wsum(t, layer_norm(v, t.constant(random_array({1, d}, rng, 0.5, 1.5)),
                                      t.constant(random_array({1, d}, rng)), 1e-5));
        }, x);

        // conv2d over input, weight, bias
        Array cx = random_array({2, 5, 5}, rng);
        Array cw = random_array({3, 2, 3, 3}, rng, -0.5, 0.5);
        Array cb = random_array({3}, rng);
        check("conv2d_x", [&](Tape& t, Var v) {
            return wsum(t, conv2d_op(v, t.constant(cw), t.constant(cb), 1, 1));
        }, cx);
        check("conv2d_w", [&](Tape& t, Var v) {
            return wsum(t, conv2d_op(t.constant(cx), v, t.constant(cb), 2, 1));
        }, cw);
        check("conv2d_b", [&](Tape& t, Var v) {
            return wsum(t, conv2d_op(t.constant(cx), t.constant(cw), v, 1, 1));
        }, cb);
        check("bilinear", [&](Tape& t, Var v) { return wsum(t, bilinear_op(v, 7, 4)); }, cx);
    }
}

TEST_CASE("attention_block gradcheck through tokens and weights") {
    PrecisionGuard g(Precision::f64);
    const int n = 3, d = 4, heads = 2;
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        Rng rng(seed);
        ParamStore ps;
        add_attention_block_params(ps, "blk", d, rng);
        Array x = random_array({n, d}, rng, -1, 1);

        auto through_tokens = [&](Tape& t, Var v) {
            ParamVars pv = ParamVars::bind(t, ps);
            Var out = attention_block(v, attention_block_vars(pv, "blk"), heads);
            Rng wr(seed * 7 + 1);
            return weighted_sum(t, out, wr);
        };
        GradCheckReport rep = grad_check(through_tokens, x, 1e-5, 1e-4);
        INFO("tokens rel err " << rep.max_rel_err);
        CHECK(rep.pass);

        auto through_wq = [&](Tape& t, Var v) {
            ParamVars pv = ParamVars::bind(t, ps);
            AttentionBlockVars bv = attention_block_vars(pv, "blk");
            bv.wq = v;
            Var out = attention_block(t.constant(x), bv, heads);
            Rng wr(seed * 7 + 2);
            return weighted_sum(t, out, wr);
        };
        GradCheckReport rep2 = grad_check(through_wq, ps.at("blk.q.w"), 1e-5, 1e-4);
        INFO("wq rel err " << rep2.max_rel_err);
        CHECK(rep2.pass);
    }
}

TEST_CASE("mlp_apply: single layer is affine, identity weights pass through") {
    Tape t;
    Array x({2, 3}, {1, -2, 3, 0.5, 0, -1});
    Array eye({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Var out = mlp_apply(t.leaf(x), {{t.constant(eye), t.constant(Array::zeros({1, 3}))}});
    CHECK(bitwise_equal(out.val(), x));

    Var zero_out = mlp_apply(t.leaf(x), {{t.constant(Array::zeros({3, 3})),
                                          t.constant(Array::zeros({1, 3}))}});
    for (long i = 0; i < 6; ++i) CHECK(zero_out.val().at(static_cast<int>(i)) == 0.0);
}

TEST_CASE("f32 mode quantizes every produced value") {
    PrecisionGuard g(Precision::f32);
    Rng rng(17);
    Array a = random_array({3, 3}, rng);
    Array b = random_array({3, 3}, rng);
    Tape t;
    Var out = matmul(t.leaf(a), t.leaf(b));
    for (long i = 0; i < out.val().numel(); ++i) {
        const double v = out.val().at(static_cast<int>(i));
        CHECK(v == static_cast<double>(static_cast<float>(v)));
    }
}

TEST_CASE("fixed seed forward is bit-identical across runs") {
    auto run = [] {
        Rng rng(99);
        Array a(
            {4, 4});
        for (long i = 0; i < a.numel(); ++i) a.at(static_cast<int>(i)) = rng.normal();
        Tape t;
        ParamStore ps;
        Rng init(100);
        add_attention_block_params(ps, "blk", 4, init);
        ParamVars pv = ParamVars::bind(t, ps);
        return attention_block(t.leaf(a), attention_block_vars(pv, "blk"), 2).val();
    };
    CHECK(bitwise_equal(run(), run()));
}

TEST_CASE("kernels: parallel forms match serial reference bitwise") {
    Rng rng(55);
    // matmul
    Array a = random_array({17, 9}, rng), b = random_array({9, 13}, rng);
    Array c1({17, 13}), c2({17, 13});
    kern::matmul_serial(a.data(), b.data(), c1.data(), 17, 9, 13);
    kern::matmul(a.data(), b.data(), c2.data(), 17, 9, 13);
    CHECK(bitwise_equal(c1, c2));

    // conv2d
    Array x = random_array({3, 11, 10}, rng), w = random_array({5, 3, 3, 3}, rng);
    Array bias = random_array({5}, rng);
    const int ho = kern::conv_out_size(11, 3, 2, 1), wo = kern::conv_out_size(10, 3, 2, 1);
    Array o1({5, ho, wo}), o2({5, ho, wo});
    kern::conv2d_serial(x.data(), w.data(), bias.data(), o1.data(), 3, 11, 10, 5, 3, 3, 2, 1);
    kern::conv2d(x.data(), w.data(), bias.data(), o2.data(), 3, 11, 10, 5, 3, 3, 2, 1);
    CHECK(bitwise_equal(o1, o2));

    // conv matches the scalar-loop oracle
    Array ref = oracle::naive_conv2d(x, w, bias, 2, 1);
    for (long i = 0; i < ref.numel(); ++i)
        CHECK(o1.at(static_cast<int>(i)) == doctest::Approx(ref.at(static_cast<int>(i))).epsilon(1e-12));

    // bilinear
    Array r1({3, 7, 5}), r2({3, 7, 5});
    kern::bilinear_resize_serial(x.data(), r1.data(), 3, 11, 10, 7, 5);
    kern::bilinear_resize(x.data(), r2.data(), 3, 11, 10, 7, 5);
    CHECK(bitwise_equal(r1, r2));

    // nearest neighbor, 100 ref points exercises the bucket grid
    Array q = random_array({40, 3}, rng, -2, 2), refpts = random_array({100, 3}, rng, -2, 2);
    Array d1({40}), d2({40});
    kern::nearest_sqdist_serial(q.data(), 40, refpts.data(), 100, 3, d1.data());
    kern::nearest_sqdist(q.data(), 40, refpts.data(), 100, 3, d2.data());
    CHECK(bitwise_equal(d1, d2));
}

TEST_CASE("conv kernel matches scalar oracle on random 8x8 input") {
    Rng rng(77);
    Array x = random_array({1, 8, 8}, rng);
    Array w = random_array({4, 1, 3, 3}, rng);
    Array b = random_array({4}, rng);
    Array out({4, 4, 4});
    kern::conv2d(x.data(), w.data(), b.data(), out.data(), 1, 8, 8, 4, 3, 3, 2, 1);
    Array ref = oracle::naive_conv2d(x, w, b, 2, 1);
    for (long i = 0; i < ref.numel(); ++i)
        CHECK(std::fabs(out.at(static_cast<int>(i)) - ref.at(static_cast<int>(i))) < 1e-6);
}

TEST_CASE("ops keep finite values on random finite input") {
    Rng rng(123);
    Array x = random_array({4, 6}, rng, -3, 3);
    Tape t;
    Var v = t.leaf(x);
    CHECK(softmax_rows_op(v).val().all_finite());
    CHECK(gelu(v).val().all_finite());
    CHECK(softplus(v).val().all_finite());
    CHECK(tanh_op(v).val().all_finite());
    CHECK(exp_op(v).val().all_finite());
}
