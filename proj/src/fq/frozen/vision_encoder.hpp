// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fq/frozen/feature.hpp"
#include "fq/frozen/text_encoder.hpp"
#include "fq/nn/optim.hpp"
#include "fq/synth/dataset.hpp"

namespace fq::frozen {

// Two target-space variants mirroring the dense-vs-sparse encoder contrast:
// `stable` applies a final (non-affine) layer norm to its output tokens,
// `brittle` omits it and trains with an L1 activation penalty.
enum class EncoderVariant { kStable, kBrittle };
const char* variant_name(EncoderVariant v);
EncoderVariant variant_from_name(const std::string& name);
std::string vision_encoder_id(EncoderVariant v);

struct VisionEncoderConfig {
    int resolution = 32;
    int patch = 8;
    int dim = 64;
    int depth = 2;
    int heads = 4;
    int mlp_ratio = 4;
    int proj_dim = 32;          // pooled embedding (retrieval, toy-FID features)
    float sparsity_l1 = 0.25f;  // brittle-only activation penalty weight
    float logit_scale = 12.0f;  // fixed contrastive temperature

    int tokens() const { return (resolution / patch) * (resolution / patch); }
    nlohmann::json to_json() const;
    static VisionEncoderConfig from_json(const nlohmann::json& j);
};

struct VisionTower {
    VisionEncoderConfig cfg;
    bool final_layernorm = true;
    nn::Linear patch_embed;
    nn::Var pos_embed;
    std::vector<nn::EncoderBlock> blocks;

    static VisionTower create(nn::ParamStore& ps, const std::string& prefix,
                              const VisionEncoderConfig& cfg, bool final_layernorm, Rng& rng);
    nn::Var forward_image(const Tensor& img) const;  // [3,H,W] -> [tokens, dim]
};

// Frozen target vision encoder E_Sig analog. Owns the token tower plus the
// pooled projection head used for retrieval and toy-FID features.
class VisionEncoder {
public:
    VisionEncoder(EncoderVariant variant, const VisionEncoderConfig& cfg, uint64_t init_seed = 2);

    FeatureTensor encode_image(const synth::Image& img) const;  // e_s / e_i tokens
    Tensor pooled_embed(const synth::Image& img) const;         // [proj_dim], l2-normalized

    nn::Var forward_tokens(const Tensor& img) const { return tower_.forward_image(img); }
    nn::Var forward_pooled(const nn::Var& tokens) const;

    EncoderVariant variant() const { return variant_; }
    const std::string& encoder_id() const { return encoder_id_; }
    const VisionEncoderConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return ps_; }
    const nn::ParamStore& params() const { return ps_; }
    std::string fingerprint() const { return ps_.fingerprint(); }

private:
    EncoderVariant variant_;
    VisionEncoderConfig cfg_;
    std::string encoder_id_;
    nn::ParamStore ps_;
    VisionTower tower_;
    nn::Linear proj_;
};

struct PretrainResult {
    std::vector<float> loss_curve;
    float val_retrieval_top1 = 0.0f;  // caption -> image, val split
};

// Contrastive image<->caption pretraining. Trains the vision encoder in
// place together with a disposable text tower; the text tower weights are
// returned so the toy MLLM can start from them.
class ContrastivePretrainer {
public:
    ContrastivePretrainer(VisionEncoder& encoder, const TextTowerConfig& text_cfg,
                          uint64_t init_seed = 3);

    PretrainResult train(const synth::Manifest& data, int steps, int batch, uint64_t seed,
                         const nn::AdamWConfig& opt_cfg);

    float eval_retrieval_top1(const synth::Manifest& data, synth::Split split);
    NamedTensors text_tower_weights() const { return text_ps_.to_named(); }
    const TextTowerConfig& text_config() const { return text_cfg_; }

private:
    Tensor text_embed(const std::string& text);  // eval path, no grads needed

    VisionEncoder& encoder_;
    TextTowerConfig text_cfg_;
    Tokenizer tokenizer_;
    nn::ParamStore text_ps_;
    TextTower text_tower_;
    nn::Linear text_proj_;
};

}  // namespace fq::frozen
