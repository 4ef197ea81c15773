// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fq/frozen/feature.hpp"
#include "fq/nn/modules.hpp"

namespace fq::frozen {

// Closed-vocabulary whitespace tokenizer. id 0 is PAD, id 1 is UNK; unknown
// words fall back to UNK rather than erroring.
class Tokenizer {
public:
    Tokenizer();
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    int vocab_size() const { return static_cast<int>(words_.size()); }
    std::vector<int> encode(const std::string& text, int max_len) const;  // pads/truncates
    const std::string& word(int id) const { return words_[static_cast<size_t>(id)]; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

struct TextTowerConfig {
    int max_len = 32;
    int dim = 64;
    int depth = 2;
    int heads = 4;
    int mlp_ratio = 4;

    nlohmann::json to_json() const;
    static TextTowerConfig from_json(const nlohmann::json& j);
};

// Token embedding + learned positions + pre-LN transformer + final LN.
struct TextTower {
    TextTowerConfig cfg;
    nn::Var tok_embed, pos_embed;
    std::vector<nn::EncoderBlock> blocks;
    nn::LayerNormLayer final_ln;

    static TextTower create(nn::ParamStore& ps, const std::string& prefix,
                            const TextTowerConfig& cfg, int vocab, Rng& rng);
    nn::Var forward_ids(const std::vector<int>& ids) const;  // [max_len, dim]
};

// The T2I backbone's native text encoder E_T. Trained jointly with the
// backbone, then frozen with it.
class TextEncoder {
public:
    explicit TextEncoder(const TextTowerConfig& cfg, uint64_t init_seed = 1);

    nn::Var forward(const std::string& text) const;  // graph-building path
    FeatureTensor encode(const std::string& text) const;  // frozen inference
    FeatureTensor null_embedding() const;  // all-zeros condition for dropout/guidance

    const Tokenizer& tokenizer() const { return tokenizer_; }
    const TextTowerConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return ps_; }
    const nn::ParamStore& params() const { return ps_; }
    std::string fingerprint() const { return ps_.fingerprint(); }

    static constexpr const char* kEncoderId = "text_native";

private:
    TextTowerConfig cfg_;
    Tokenizer tokenizer_;
    nn::ParamStore ps_;
    TextTower tower_;
};

}  // namespace fq::frozen
