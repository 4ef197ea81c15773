// SPDX-License-Identifier: Apache-2.0
#include "fq/nn/modules.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "fq/core/fingerprint.hpp"

namespace fq::nn {

Var ParamStore::create(const std::string& name, Tensor init) {
    for (const auto& p : params_)
        if (p.node()->name == name) throw std::runtime_error("duplicate parameter: " + name);
    Var v = Var::param(name, std::move(init));
    params_.push_back(v);
    return v;
}

std::vector<Var> ParamStore::trainable() const {
    std::vector<Var> out;
    for (const auto& p : params_)
        if (p.requires_grad()) out.push_back(p);
    return out;
}

void ParamStore::set_trainable(bool trainable) {
    for (const auto& p : params_) p.node()->requires_grad = trainable;
}

int64_t ParamStore::param_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
}

NamedTensors ParamStore::to_named() const {
    NamedTensors out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.emplace_back(p.node()->name, p.val());
    return out;
}

void ParamStore::load_named(const NamedTensors& named) {
    std::unordered_map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : named) by_name[name] = &t;
    for (const auto& p : params_) {
        auto it = by_name.find(p.node()->name);
        if (it == by_name.end())
            throw std::runtime_error("checkpoint missing parameter: " + p.node()->name);
        if (!(it->second->shape() == p.val().shape()))
            throw ShapeError("checkpoint shape mismatch for " + p.node()->name + ": have " +
                             it->second->shape_str() + " want " + p.val().shape_str());
        p.node()->value = *it->second;
    }
    if (by_name.size() != params_.size())
        throw std::runtime_error("checkpoint has extra parameters");
}

std::string ParamStore::fingerprint() const {
    Fingerprint f;
    for (const auto& p : params_) f.update_tensor(p.node()->name, p.val());
    return f.hex();
}

void ParamStore::zero_grads() const {
    for (const auto& p : params_) p.node()->zero_grad();
}

Tensor init_linear(Rng& rng, int in, int out) {
    return randn(rng, {in, out}, 1.0f / std::sqrt(static_cast<float>(in)));
}

Tensor init_embedding(Rng& rng, int vocab, int dim) { return randn(rng, {vocab, dim}, 0.02f); }

Linear Linear::create(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng,
                      bool zero_init) {
    Linear l;
    l.w = ps.create(prefix + ".w", zero_init ? Tensor({in, out}) : init_linear(rng, in, out));
    l.b = ps.create(prefix + ".b", Tensor({out}));
    return l;
}

LayerNormLayer LayerNormLayer::create(ParamStore& ps, const std::string& prefix, int dim) {
    LayerNormLayer l;
    l.gamma = ps.create(prefix + ".gamma", Tensor({dim}, 1.0f));
    l.beta = ps.create(prefix + ".beta", Tensor({dim}));
    return l;
}

Attention Attention::create(ParamStore& ps, const std::string& prefix, int dim_q, int dim_kv,
                            int dim_inner, int heads, int dim_out, Rng& rng, bool zero_init_out) {
    check_shape(dim_inner % heads == 0, "attention: dim_inner must divide by heads");
    Attention a;
    a.heads = heads;
    a.q = Linear::create(ps, prefix + ".q", dim_q, dim_inner, rng);
    a.k = Linear::create(ps, prefix + ".k", dim_kv, dim_inner, rng);
    a.v = Linear::create(ps, prefix + ".v", dim_kv, dim_inner, rng);
    a.o = Linear::create(ps, prefix + ".o", dim_inner, dim_out, rng, zero_init_out);
    return a;
}

Var Attention::context(const Var& xq, const Var& xkv) const {
    const int dh = q.out_dim() / heads;
    Var qh = split_heads(q.forward(xq), heads);
    Var kh = split_heads(k.forward(xkv), heads);
    Var vh = split_heads(v.forward(xkv), heads);
    Var scores = scale(bmm(qh, kh, /*tb=*/true), 1.0f / std::sqrt(static_cast<float>(dh)));
    Var probs = softmax_last(scores);
    return merge_heads(bmm(probs, vh));
}

Var Attention::forward(const Var& xq, const Var& xkv, bool causal) const {
    const int dh = q.out_dim() / heads;
    Var qh = split_heads(q.forward(xq), heads);
    Var kh = split_heads(k.forward(xkv), heads);
    Var vh = split_heads(v.forward(xkv), heads);
    Var scores = scale(bmm(qh, kh, /*tb=*/true), 1.0f / std::sqrt(static_cast<float>(dh)));
    if (causal) {
        check_shape(xq.dim(0) == xkv.dim(0), "causal attention expects equal lengths");
        scores = add_bcast0(scores, Var::constant(causal_mask(xq.dim(0))));
    }
    Var probs = softmax_last(scores);
    return o.forward(merge_heads(bmm(probs, vh)));
}

Mlp Mlp::create(ParamStore& ps, const std::string& prefix, int dim, int hidden, Rng& rng) {
    Mlp m;
    m.fc1 = Linear::create(ps, prefix + ".fc1", dim, hidden, rng);
    m.fc2 = Linear::create(ps, prefix + ".fc2", hidden, dim, rng);
    return m;
}

EncoderBlock EncoderBlock::create(ParamStore& ps, const std::string& prefix, int dim, int heads,
                                  int mlp_hidden, Rng& rng, bool causal) {
    EncoderBlock b;
    b.ln1 = LayerNormLayer::create(ps, prefix + ".ln1", dim);
    b.ln2 = LayerNormLayer::create(ps, prefix + ".ln2", dim);
    b.attn = Attention::create(ps, prefix + ".attn", dim, dim, dim, heads, dim, rng);
    b.mlp = Mlp::create(ps, prefix + ".mlp", dim, mlp_hidden, rng);
    b.causal = causal;
    return b;
}

Var EncoderBlock::forward(const Var& x) const {
    Var h = ln1.forward(x);
    Var y = add(x, attn.forward(h, h, causal));
    return add(y, mlp.forward(ln2.forward(y)));
}

Tensor causal_mask(int t) {
    Tensor m({t, t});
    for (int i = 0; i < t; ++i)
        for (int j = i + 1; j < t; ++j) m.at(static_cast<size_t>(i) * t + j) = -1e9f;
    return m;
}

}  // namespace fq::nn
