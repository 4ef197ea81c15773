// SPDX-License-Identifier: Apache-2.0
#include "fq/frozen/codec.hpp"

#include <cmath>

namespace fq::frozen {

LatentCodec::LatentCodec() : mean_({kChannels}), std_({kChannels}, 1.0f) {}

std::vector<int> LatentCodec::latent_shape(int resolution) {
    return {kChannels, resolution / kBlock, resolution / kBlock};
}

Tensor LatentCodec::space_to_depth(const Tensor& img) {
    check_shape(img.ndim() == 3 && img.dim(0) == 3 && img.dim(1) % kBlock == 0 &&
                    img.dim(2) % kBlock == 0,
                "space_to_depth: want [3,H,W] with even H,W");
    const int h = img.dim(1), w = img.dim(2);
    const int oh = h / kBlock, ow = w / kBlock;
    Tensor z({kChannels, oh, ow});
    for (int c = 0; c < 3; ++c)
        for (int dy = 0; dy < kBlock; ++dy)
            for (int dx = 0; dx < kBlock; ++dx) {
                const int zc = c * kBlock * kBlock + dy * kBlock + dx;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x)
                        z.at((static_cast<int64_t>(zc) * oh + y) * ow + x) =
                            img.at((static_cast<int64_t>(c) * h + y * kBlock + dy) * w +
                                   x * kBlock + dx);
            }
    return z;
}

Tensor LatentCodec::depth_to_space(const Tensor& z) {
    check_shape(z.ndim() == 3 && z.dim(0) == kChannels, "depth_to_space: want [12,h,w]");
    const int oh = z.dim(1), ow = z.dim(2);
    const int h = oh * kBlock, w = ow * kBlock;
    Tensor img({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int dy = 0; dy < kBlock; ++dy)
            for (int dx = 0; dx < kBlock; ++dx) {
                const int zc = c * kBlock * kBlock + dy * kBlock + dx;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x)
                        img.at((static_cast<int64_t>(c) * h + y * kBlock + dy) * w + x * kBlock +
                               dx) = z.at((static_cast<int64_t>(zc) * oh + y) * ow + x);
            }
    return img;
}

void LatentCodec::fit(const std::vector<synth::Image>& train_images) {
    check_shape(!train_images.empty(), "codec fit: empty image set");
    Tensor mean({kChannels});
    Tensor m2({kChannels});
    int64_t count = 0;
    for (const auto& img : train_images) {
        const Tensor z = space_to_depth(synth::image_to_tensor(img));
        const int64_t plane = z.numel() / kChannels;
        for (int c = 0; c < kChannels; ++c) {
            const float* p = z.data() + c * plane;
            for (int64_t i = 0; i < plane; ++i) {
                mean.at(c) += p[i];
                m2.at(c) += p[i] * p[i];
            }
        }
        count += plane;
    }
    Tensor stdt({kChannels});
    for (int c = 0; c < kChannels; ++c) {
        mean.at(c) /= count;
        const float var = m2.at(c) / count - mean.at(c) * mean.at(c);
        stdt.at(c) = std::sqrt(std::max(var, 1e-6f));
    }
    set_stats(std::move(mean), std::move(stdt));
}

void LatentCodec::set_stats(Tensor mean, Tensor std) {
    check_shape(mean.ndim() == 1 && mean.dim(0) == kChannels, "codec stats: mean shape");
    check_shape(std.ndim() == 1 && std.dim(0) == kChannels, "codec stats: std shape");
    for (int c = 0; c < kChannels; ++c)
        check_shape(std.at(c) > 0.0f, "codec stats: std must be positive");
    mean_ = std::move(mean);
    std_ = std::move(std);
    fitted_ = true;
}

LatentImage LatentCodec::encode(const synth::Image& img) const {
    Tensor z = space_to_depth(synth::image_to_tensor(img));
    const int64_t plane = z.numel() / kChannels;
    for (int c = 0; c < kChannels; ++c) {
        const float m = mean_.at(c), s = std_.at(c);
        float* p = z.data() + c * plane;
        for (int64_t i = 0; i < plane; ++i) p[i] = (p[i] - m) / s;
    }
    return LatentImage{std::move(z), std::nullopt};
}

synth::Image LatentCodec::decode(const Tensor& zin) const {
    Tensor z = zin;
    const int64_t plane = z.numel() / kChannels;
    for (int c = 0; c < kChannels; ++c) {
        const float m = mean_.at(c), s = std_.at(c);
        float* p = z.data() + c * plane;
        for (int64_t i = 0; i < plane; ++i) p[i] = p[i] * s + m;
    }
    return synth::tensor_to_image(depth_to_space(z));
}

}  // namespace fq::frozen
