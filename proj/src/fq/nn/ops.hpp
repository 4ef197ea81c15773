// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fq/core/rng.hpp"
#include "fq/nn/graph.hpp"

namespace fq::nn {

// Tensor builders.
Tensor randn(Rng& rng, std::vector<int> shape, float stddev = 1.0f);
Tensor rand_uniform(Rng& rng, std::vector<int> shape, float lo, float hi);
Tensor sinusoidal_embedding(double t, int dim, double max_period = 10000.0);

// Elementwise / broadcast.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_n(const std::vector<Var>& xs);
Var scale(const Var& x, float s);
Var scale_shift(const Var& x, float a, float b);  // a*x + b
Var add_rowvec(const Var& x, const Var& v);       // [N,D] + [D]
Var mul_rowvec(const Var& x, const Var& v);       // [N,D] * [D]
Var add_bcast0(const Var& a, const Var& b);       // [H,M,N] + [M,N]

// Linear algebra.
Var matmul(const Var& a, const Var& b, bool ta = false, bool tb = false);
Var bmm(const Var& a, const Var& b, bool tb = false);  // [H,M,K] x [H,K,N]
Var linear(const Var& x, const Var& w, const Var& bias);
Var linear_nobias(const Var& x, const Var& w);

// Nonlinearities / normalization.
Var gelu(const Var& x);
Var silu(const Var& x);
Var relu(const Var& x);
Var softmax_last(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);
Var layer_norm_plain(const Var& x, float eps = 1e-5f);  // non-affine
Var l2_normalize_rows(const Var& x, float eps = 1e-8f);

// Shape plumbing (all copying, all differentiable).
Var reshape(const Var& x, std::vector<int> shape);
Var split_heads(const Var& x, int heads);  // [T,H*dh] -> [H,T,dh]
Var merge_heads(const Var& x);             // [H,T,dh] -> [T,H*dh]
Var concat_rows(const Var& a, const Var& b);
Var stack_rows(const std::vector<Var>& rows);  // N x [D] or [1,D] -> [N,D]
Var slice_rows(const Var& x, int begin, int end);
Var mean_rows(const Var& x);  // [N,D] -> [D]
Var detach(const Var& x);

// Lookup.
Var embedding(const Var& table, const std::vector<int>& ids);

// Image / patch ops. Feature maps are [B,C,H,W].
Var patchify(const Var& img, int patch);    // [C,H,W] -> [T, patch*patch*C]
Var unpatchify(const Var& x, int patch, int c, int h, int w);
Var im2col3x3(const Var& x);                // [B,C,H,W] -> [B*H*W, 9C], pad 1
Var to_chw(const Var& x, int b, int c, int h, int w);  // [B*H*W, C] -> [B,C,H,W]
Var maxpool2(const Var& x);                 // [B,C,H,W] -> [B,C,H/2,W/2]

// Losses (scalar outputs).
Var mse_loss(const Var& pred, const Var& target);
Var l1_mean(const Var& x);
Var mean_all(const Var& x);
Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets,
                       int ignore_index = -1);

}  // namespace fq::nn
