// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fq/core/tensor.hpp"

namespace fq::frozen {

// Tagged token grid [tokens x dim]. The carrier for all conditioning
// embeddings (text tokens, vision features, query extractions, forged
// features). Geometry violations are construction errors.
struct FeatureTensor {
    Tensor data;  // [tokens, dim]
    std::string encoder_id;
    // Standardization constants applied at training time (empty when none).
    Tensor norm_mean;
    Tensor norm_std;

    int tokens() const { return data.dim(0); }
    int dim() const { return data.dim(1); }
};

inline FeatureTensor make_feature(std::string encoder_id, Tensor data, int expect_tokens,
                                  int expect_dim) {
    check_shape(data.ndim() == 2, "feature must be [tokens, dim]");
    check_shape(data.dim(0) == expect_tokens && data.dim(1) == expect_dim,
                "feature geometry mismatch for " + encoder_id + ": have " + data.shape_str());
    if (!data.all_finite()) throw NumericError("non-finite feature from " + encoder_id);
    FeatureTensor f;
    f.encoder_id = std::move(encoder_id);
    f.data = std::move(data);
    return f;
}

}  // namespace fq::frozen
