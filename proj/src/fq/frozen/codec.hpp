// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fq/core/tensor.hpp"
#include "fq/synth/render.hpp"

namespace fq::frozen {

// Working latent representation z [C,H,W], optionally tagged with the flow
// timestep it sits at.
struct LatentImage {
    Tensor data;
    std::optional<float> timestep;
};

// Fixed invertible codec: 2x space-to-depth plus per-channel affine
// normalization. No learned parameters; decode(encode(img)) is bit-identical
// on 8-bit images.
class LatentCodec {
public:
    static constexpr int kBlock = 2;
    static constexpr int kChannels = 3 * kBlock * kBlock;  // 12

    LatentCodec();  // identity normalization until fitted

    // Fit per-channel mean/std on training images.
    void fit(const std::vector<synth::Image>& train_images);
    bool fitted() const { return fitted_; }

    LatentImage encode(const synth::Image& img) const;
    synth::Image decode(const Tensor& z) const;

    // Latent geometry for a given image resolution.
    static std::vector<int> latent_shape(int resolution);

    const Tensor& channel_mean() const { return mean_; }
    const Tensor& channel_std() const { return std_; }
    void set_stats(Tensor mean, Tensor std);

    // Raw rearrangement without normalization (fit + tests).
    static Tensor space_to_depth(const Tensor& img);  // [3,H,W] -> [12,H/2,W/2]
    static Tensor depth_to_space(const Tensor& z);    // inverse

private:
    Tensor mean_, std_;  // [12]
    bool fitted_ = false;
};

}  // namespace fq::frozen
