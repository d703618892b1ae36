#include "shed/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace shed {

int ParamStore::add(const std::string& name, Array v) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    names_.push_back(name);
    values_.push_back(std::move(v));
    const int id = static_cast<int>(names_.size()) - 1;
    index_[name] = id;
    return id;
}

Array& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return values_[static_cast<size_t>(it->second)];
}

const Array& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return values_[static_cast<size_t>(it->second)];
}

bool ParamStore::all_finite() const {
    for (const Array& v : values_)
        if (!v.all_finite()) return false;
    return true;
}

long ParamStore::total_elements() const {
    long n = 0;
    for (const Array& v : values_) n += v.numel();
    return n;
}

ParamVars ParamVars::bind(Tape& t, const ParamStore& s) {
    ParamVars pv;
    pv.store = &s;
    pv.vars.reserve(s.count());
    for (size_t i = 0; i < s.count(); ++i) {
        pv.vars.push_back(t.leaf(s.value(static_cast<int>(i))));
        pv.index[s.names()[i]] = static_cast<int>(i);
    }
    return pv;
}

Var ParamVars::operator[](const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw std::out_of_range("unbound parameter: " + name);
    return vars[static_cast<size_t>(it->second)];
}

Var linear(Var x, Var w, Var b) {
    Var y = matmul(x, w);
    return add(y, bcast_rows(b, y.val().rows()));
}

Var mlp_apply(Var x, const std::vector<std::pair<Var, Var>>& layers) {
    if (layers.empty()) throw std::invalid_argument("mlp_apply: no layers");
    Var h = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        h = linear(h, layers[i].first, layers[i].second);
        if (i + 1 < layers.size()) h = gelu(h);
    }
    return h;
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    const int d = x.val().cols();
    if (gain.val().numel() != d || bias.val().numel() != d)
        throw std::invalid_argument("layer_norm: gain/bias size must match feature dim");
    const int n = x.val().rows();
    Var mu = mul_scalar(sum_rows(x), 1.0 / d);
    Var xc = sub(x, bcast_cols(mu, d));
    Var var = mul_scalar(sum_rows(mul(xc, xc)), 1.0 / d);
    Var stdv = sqrt_op(add_scalar(var, eps));
    Var xn = div(xc, bcast_cols(stdv, d));
    return add(mul(xn, bcast_rows(gain, n)), bcast_rows(bias, n));
}

Array trunc_normal_init(std::vector<int> shape, double sigma, Rng& rng) {
    Array a(std::move(shape));
    for (long i = 0; i < a.numel(); ++i) a.at(static_cast<int>(i)) = rng.trunc_normal(sigma);
    a.quantize_mode();
    return a;
}

void add_linear_params(ParamStore& ps, const std::string& prefix, int din, int dout, Rng& rng,
                       bool zero_weight) {
    ps.add(prefix + ".w",
           zero_weight ? Array::zeros({din, dout}) : trunc_normal_init({din, dout}, 0.02, rng));
    ps.add(prefix + ".b", Array::zeros({1, dout}));
}

std::pair<Var, Var> linear_vars(const ParamVars& pv, const std::string& prefix) {
    return {pv[prefix + ".w"], pv[prefix + ".b"]};
}

void add_attention_block_params(ParamStore& ps, const std::string& prefix, int d, Rng& rng) {
    ps.add(prefix + ".ln1.g", Array::full({1, d}, 1.0));
    ps.add(prefix + ".ln1.b", Array::zeros({1, d}));
    add_linear_params(ps, prefix + ".q", d, d, rng);
    add_linear_params(ps, prefix + ".k", d, d, rng);
    add_linear_params(ps, prefix + ".v", d, d, rng);
    add_linear_params(ps, prefix + ".o", d, d, rng);
    ps.add(prefix + ".ln2.g", Array::full({1, d}, 1.0));
    ps.add(prefix + ".ln2.b", Array::zeros({1, d}));
    add_linear_params(ps, prefix + ".m1", d, 4 * d, rng);
    add_linear_params(ps, prefix + ".m2", 4 * d, d, rng);
}

AttentionBlockVars attention_block_vars(const ParamVars& pv, const std::string& prefix) {
    AttentionBlockVars v;
    v.ln1_g = pv[prefix + ".ln1.g"];
    v.ln1_b = pv[prefix + ".ln1.b"];
    v.wq = pv[prefix + ".q.w"];
    v.bq = pv[prefix + ".q.b"];
    v.wk = pv[prefix + ".k.w"];
    v.bk = pv[prefix + ".k.b"];
    v.wv = pv[prefix + ".v.w"];
    v.bv = pv[prefix + ".v.b"];
    v.wo = pv[prefix + ".o.w"];
    v.bo = pv[prefix + ".o.b"];
    v.ln2_g = pv[prefix + ".ln2.g"];
    v.ln2_b = pv[prefix + ".ln2.b"];
    v.w1 = pv[prefix + ".m1.w"];
    v.b1 = pv[prefix + ".m1.b"];
    v.w2 = pv[prefix + ".m2.w"];
    v.b2 = pv[prefix + ".m2.b"];
    return v;
}

Var attention_block(Var tokens, const AttentionBlockVars& p, int heads) {
    const int d = tokens.val().cols();
    if (d % heads != 0) throw std::invalid_argument("attention_block: d must divide by heads");
    if (p.wq.val().rows() != d) throw std::invalid_argument("attention_block: param dim mismatch");
    const int dh = d / heads;

    Var h = layer_norm(tokens, p.ln1_g, p.ln1_b);
    Var q = linear(h, p.wq, p.bq);
    Var k = linear(h, p.wk, p.bk);
    Var v = linear(h, p.wv, p.bv);

    Var attn_out;
    for (int hd = 0; hd < heads; ++hd) {
        Var qh = slice_cols(q, hd * dh, dh);
        Var kh = slice_cols(k, hd * dh, dh);
        Var vh = slice_cols(v, hd * dh, dh);
        Var scores = mul_scalar(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        Var a = softmax_rows_op(scores);
        Var oh = matmul(a, vh);
        attn_out = hd == 0 ? oh : concat_cols(attn_out, oh);
    }
    Var x1 = add(tokens, linear(attn_out, p.wo, p.bo));

    Var h2 = layer_norm(x1, p.ln2_g, p.ln2_b);
    Var m = linear(gelu(linear(h2, p.w1, p.b1)), p.w2, p.b2);
    return add(x1, m);
}

}  // namespace shed
