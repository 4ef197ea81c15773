// SPDX-License-Identifier: Apache-2.0
#include "fq/nn/optim.hpp"

#include <cmath>

#include "fq/kernels/kernels.hpp"

namespace fq::nn {

AdamW::AdamW(std::vector<Var> params, AdamWConfig cfg) : cfg_(cfg) {
    slots_.reserve(params.size());
    for (auto& p : params)
        slots_.push_back(Slot{p, Tensor(p.val().shape()), Tensor(p.val().shape())});
}

double grad_global_norm(const std::vector<Var>& params) {
    double acc = 0.0;
    for (const auto& p : params) {
        const Tensor& g = p.node()->grad;
        if (!g.numel()) continue;
        acc += fq::kernels::active().sumsq(static_cast<int>(g.numel()), g.data());
    }
    return std::sqrt(acc);
}

void AdamW::step() {
    ++t_;
    const float inv_bc1 = 1.0f / (1.0f - std::pow(cfg_.beta1, static_cast<float>(t_)));
    const float inv_bc2 = 1.0f / (1.0f - std::pow(cfg_.beta2, static_cast<float>(t_)));

    float clip_scale = 1.0f;
    if (cfg_.max_grad_norm > 0.0f) {
        std::vector<Var> ps;
        ps.reserve(slots_.size());
        for (auto& s : slots_) ps.push_back(s.p);
        const double norm = grad_global_norm(ps);
        if (norm > cfg_.max_grad_norm)
            clip_scale = static_cast<float>(cfg_.max_grad_norm / (norm + 1e-12));
    }

    for (auto& s : slots_) {
        Tensor& g = s.p.grad();  // zeros if the parameter never saw a gradient
        if (clip_scale != 1.0f)
            fq::kernels::active().scale(static_cast<int>(g.numel()), clip_scale, g.data());
        fq::kernels::active().adamw(static_cast<int>(g.numel()), s.p.val().data(), g.data(),
                                    s.m.data(), s.v.data(), cfg_.lr, cfg_.beta1, cfg_.beta2,
                                    cfg_.eps, cfg_.weight_decay, inv_bc1, inv_bc2);
    }
}

void AdamW::zero_grad() {
    for (auto& s : slots_) s.p.node()->zero_grad();
}

}  // namespace fq::nn
