// SPDX-License-Identifier: Apache-2.0
#include "fq/frozen/text_encoder.hpp"

#include <unordered_map>

#include "fq/synth/caption.hpp"

namespace fq::frozen {

Tokenizer::Tokenizer() {
    words_ = {"<pad>", "<unk>"};
    for (const auto& w : synth::caption_vocabulary()) words_.push_back(w);
    for (size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
}

std::vector<int> Tokenizer::encode(const std::string& text, int max_len) const {
    std::vector<int> ids;
    for (const auto& w : synth::split_words(text)) {
        auto it = index_.find(w);
        ids.push_back(it == index.end() ? kUnk : it->second);
        if (static_cast<int>(ids.size()) == max_len) break;
    }
    ids.resize(static_cast<size_t>(max_len), kPad);
    return ids;
}

nlohmann::json TextTowerConfig::to_json() const {
    return {{"max_len", max_len}, {"dim", dim}, {"depth", depth}, {"heads", heads},
            {"mlp_ratio", mlp_ratio}};
}

TextTowerConfig TextTowerConfig::from_json(const nlohmann::json& j) {
    TextTowerConfig c;
    c.max_len = j.at("max_len").get<int>();
    c.dim = j.at("dim").get<int>();
    c.depth = j.at("depth").get<int>();
    c.heads = j.at("heads").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    return c;
}

TextTower TextTower::create(nn::ParamStore& ps, const std::string& prefix,
                            const TextTowerConfig& cfg, int vocab, Rng& rng) {
    TextTower t;
    t.cfg = cfg;
    t.tok_embed = ps.create(prefix + ".tok_embed", nn::init_embedding(rng, vocab, cfg.dim));
    t.pos_embed = ps.create(prefix + ".pos_embed",
                            nn::randn(rng, {cfg.max_len, cfg.dim}, 0.02f));
    for (int i = 0; i < cfg.depth; ++i)
        t.blocks.push_back(nn::EncoderBlock::create(ps, prefix + ".block" + std::to_string(i),
                                                    cfg.dim, cfg.heads, cfg.dim * cfg.mlp_ratio,
                                                    rng));
    t.final_ln = nn::LayerNormLayer::create(ps, prefix + ".final_ln", cfg.dim);
    return t;
}

nn::Var TextTower::forward_ids(const std::vector<int>& ids) const {
    check_shape(static_cast<int>(ids.size()) == cfg.max_len, "text tower: want padded ids");
    nn::Var x = nn::add(nn::embedding(tok_embed, ids), pos_embed);
    for (const auto& b : blocks) x = b.forward(x);
    return final_ln.forward(x);
}

TextEncoder::TextEncoder(const TextTowerConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    Rng rng(Rng::hash_combine(0x7e47ULL, init_seed));
    tower_ = TextTower::create(ps_, "text", cfg_, tokenizer_.vocab_size(), rng);
}

nn::Var TextEncoder::forward(const std::string& text) const {
    check_shape(!text.empty(), "text encoder forward: empty text (use null_embedding)");
    return tower_.forward_ids(tokenizer_.encode(text, cfg_.max_len));
}

FeatureTensor TextEncoder::encode(const std::string& text) const {
    if (text.empty())
        return make_feature(kEncoderId, Tensor({cfg_.max_len, cfg_.dim}), cfg_.max_len, cfg_.dim);
    return make_feature(kEncoderId, forward(text).val(), cfg_.max_len, cfg_.dim);
}

FeatureTensor TextEncoder::null_embedding() const { return encode(""); }

}  // namespace fq::frozen
