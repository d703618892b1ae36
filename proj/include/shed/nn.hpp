#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shed/tape.hpp"

namespace shed {

// Insertion-ordered named parameter collection. Names are unique; order is
// stable so that optimizer walks and checkpoints are deterministic.
class ParamStore {
public:
    int add(const std::string& name, Array v);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Array& at(const std::string& name);
    const Array& at(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }
    Array& value(int i) { return values_[static_cast<size_t>(i)]; }
    const Array& value(int i) const { return values_[static_cast<size_t>(i)]; }
    size_t count() const { return names_.size(); }
    bool all_finite() const;
    long total_elements() const;

private:
    std::vector<std::string> names_;
    std::vector<Array> values_;
    std::unordered_map<std::string, int> index_;
};

// Per-pass binding of every parameter to leaf nodes on one tape.
struct ParamVars {
    const ParamStore* store = nullptr;
    std::vector<Var> vars;  // aligned with store order
    std::unordered_map<std::string, int> index;

    static ParamVars bind(Tape& t, const ParamStore& s);
    Var operator[](const std::string& name) const;
};

// x[n x din] * w[din x dout] + b[1 x dout]
Var linear(Var x, Var w, Var b);

// Sequential linear layers with GELU between them (none after the last).
// A single layer is plain affine.
Var mlp_apply(Var x, const std::vector<std::pair<Var, Var>>& layers);

Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

// Pre-norm transformer block: multi-head self-attention and a 4x MLP, each
// behind a residual connection. With all projection weights and biases zero
// the block is an exact identity.
struct AttentionBlockVars {
    Var ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    Var ln2_g, ln2_b, w1, b1, w2, b2;
};

void add_attention_block_params(ParamStore& ps, const std::string& prefix, int d, Rng& rng);
AttentionBlockVars attention_block_vars(const ParamVars& pv, const std::string& prefix);
Var attention_block(Var tokens, const AttentionBlockVars& p, int heads);

// truncated normal (|z| <= 2 sigma), the default weight init
Array trunc_normal_init(std::vector<int> shape, double sigma, Rng& rng);

void add_linear_params(ParamStore& ps, const std::string& prefix, int din, int dout, Rng& rng,
                       bool zero_weight = false);
std::pair<Var, Var> linear_vars(const ParamVars& pv, const std::string& prefix);

}  // namespace shed
