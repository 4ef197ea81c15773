// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fq/core/serial.hpp"
#include "fq/nn/ops.hpp"

namespace fq::nn {

// Ordered, named parameter registry. Models create parameters through one of
// these so that serialization, fingerprinting, freezing and optimizer binding
// all see the same canonical order.
class ParamStore {
public:
    Var create(const std::string& name, Tensor init);

    const std::vector<Var>& params() const { return params_; }
    std::vector<Var> trainable() const;
    void set_trainable(bool trainable);
    int64_t param_count() const;

    NamedTensors to_named() const;
    void load_named(const NamedTensors& named);
    std::string fingerprint() const;
    void zero_grads() const;

private:
    std::vector<Var> params_;
};

// Weight initializers.
Tensor init_linear(Rng& rng, int in, int out);              // N(0, 1/sqrt(in))
Tensor init_embedding(Rng& rng, int vocab, int dim);        // N(0, 0.02)

struct Linear {
    Var w, b;
    static Linear create(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng,
                         bool zero_init = false);
    Var forward(const Var& x) const { return linear(x, w, b); }
    int out_dim() const { return w.dim(1); }
};

struct LayerNormLayer {
    Var gamma, beta;
    static LayerNormLayer create(ParamStore& ps, const std::string& prefix, int dim);
    Var forward(const Var& x) const { return layer_norm(x, gamma, beta); }
};

// Multi-head attention over row-major token matrices. Queries come from xq,
// keys/values from xkv; self-attention passes the same tensor for both.
struct Attention {
    int heads = 1;
    Linear q, k, v, o;
    static Attention create(ParamStore& ps, const std::string& prefix, int dim_q, int dim_kv,
                            int dim_inner, int heads, int dim_out, Rng& rng,
                            bool zero_init_out = false);
    Var forward(const Var& xq, const Var& xkv, bool causal = false) const;
    // Attention context without the output projection (shared-query fusion).
    Var context(const Var& xq, const Var& xkv) const;
};

struct Mlp {
    Linear fc1, fc2;
    static Mlp create(ParamStore& ps, const std::string& prefix, int dim, int hidden, Rng& rng);
    Var forward(const Var& x) const { return fc2.forward(gelu(fc1.forward(x))); }
};

// Pre-LN transformer encoder block (ViT / text-encoder style).
struct EncoderBlock {
    LayerNormLayer ln1, ln2;
    Attention attn;
    Mlp mlp;
    bool causal = false;
    static EncoderBlock create(ParamStore& ps, const std::string& prefix, int dim, int heads,
                               int mlp_hidden, Rng& rng, bool causal = false);
    Var forward(const Var& x) const;
};

Tensor causal_mask(int t);

}  // namespace fq::nn
