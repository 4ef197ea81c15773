// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "fq/core/tensor.hpp"
#include "fq/synth/scene.hpp"

namespace fq::synth {

// 8-bit RGB image, row-major, tightly packed.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // height*width*3

    bool operator==(const Image&) const = default;
    uint8_t* at(int x, int y) { return pixels.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const uint8_t* at(int x, int y) const {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

// Deterministic rasterization, no anti-aliasing. Supported resolutions: 32, 64.
// Stripe texture is anchored in scene units (2-pixel period at 32px).
Image render_scene(const SceneSpec& scene, int resolution);

// Area-average 2x downsample (for the resolution-consistency check).
Image downsample2(const Image& img);

// Image <-> float tensor [3,H,W] in [0,1].
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);  // clamps and rounds to 8-bit

}  // namespace fq::synth
