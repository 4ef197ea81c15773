// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fq/nn/graph.hpp"

namespace fq::nn {

struct AdamWConfig {
    float lr = 1e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.95f;
    float eps = 1e-8f;
    float weight_decay = 0.0f;
    float max_grad_norm = 0.0f;  // 0 disables clipping
};

class AdamW {
public:
    AdamW(std::vector<Var> params, AdamWConfig cfg);

    void step();
    void zero_grad();
    void set_lr(float lr) { cfg_.lr = lr; }
    float lr() const { return cfg_.lr; }
    int64_t steps_taken() const { return t_; }

private:
    struct Slot {
        Var p;
        Tensor m, v;
    };
    std::vector<Slot> slots_;
    AdamWConfig cfg_;
    int64_t t_ = 0;
};

// Global L2 norm of all parameter gradients.
double grad_global_norm(const std::vector<Var>& params);

}  // namespace fq::nn
