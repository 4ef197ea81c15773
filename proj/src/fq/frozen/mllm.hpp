// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fq/frozen/text_encoder.hpp"
#include "fq/nn/optim.hpp"
#include "fq/synth/dataset.hpp"

namespace fq::frozen {

struct MllmConfig {
    TextTowerConfig tower;
    int extra_depth = 2;

    nlohmann::json to_json() const;
    static MllmConfig from_json(const nlohmann::json& j);
};

// Toy understanding model: the contrastive text tower plus extra
// self-attention layers, briefly fine-tuned on caption -> enhanced-caption
// token prediction, then frozen.
class ToyMllm {
public:
    explicit ToyMllm(const MllmConfig& cfg, uint64_t init_seed = 4);

    // Start the tower from contrastive pretraining weights (names must match).
    void init_tower_from(const NamedTensors& contrastive_text_weights);

    nn::Var hidden_states(const std::string& text) const;  // [max_len, dim]

    std::vector<float> finetune(const synth::Manifest& data, int steps, int batch, uint64_t seed,
                                const nn::AdamWConfig& opt_cfg);

    const MllmConfig& config() const { return cfg_; }
    const Tokenizer& tokenizer() const { return tokenizer_; }
    nn::ParamStore& params() { return ps_; }
    const nn::ParamStore& params() const { return ps_; }
    std::string fingerprint() const { return ps_.fingerprint(); }

private:
    MllmConfig cfg_;
    Tokenizer tokenizer_;
    nn::ParamStore ps_;
    TextTower tower_;
    std::vector<nn::EncoderBlock> extra_;
    nn::LayerNormLayer final_ln_;
    nn::Linear lm_head_;
};

struct QueryExtractorConfig {
    int queries = 16;  // q; the bridge-size knob
    int dim = 64;      // d_m, must match the MLLM hidden size

    nlohmann::json to_json() const { return {{"queries", queries}, {"dim", dim}}; }
    static QueryExtractorConfig from_json(const nlohmann::json& j) {
        return {j.at("queries").get<int>(), j.at("dim").get<int>()};
    }
};

// Learnable query block: q trainable tokens cross-attending once to the
// frozen MLLM's final hidden states. Trained during the forge stage, frozen
// afterwards. The MLLM itself never receives gradients through this.
class QueryExtractor {
public:
    explicit QueryExtractor(const QueryExtractorConfig& cfg, uint64_t init_seed = 5);

    nn::Var forward(const nn::Var& mllm_hidden) const;  // [q, dim]
    FeatureTensor extract(const ToyMllm& mllm, const std::string& text) const;

    const QueryExtractorConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return ps_; }
    const nn::ParamStore& params() const { return ps_; }
    std::string fingerprint() const { return ps_.fingerprint(); }

    static constexpr const char* kEncoderId = "mllm_query";

private:
    QueryExtractorConfig cfg_;
    nn::ParamStore ps_;
    nn::Var queries_;
    nn::LayerNormLayer ln_q_;
    nn::Attention attn_;
    nn::LayerNormLayer ln_out_;
};

}  // namespace fq::frozen
