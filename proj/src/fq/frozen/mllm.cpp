// SPDX-License-Identifier: Apache-2.0
#include "fq/frozen/mllm.hpp"

#include <cmath>

namespace fq::frozen {

nlohmann::json MllmConfig::to_json() const {
    return {{"tower", tower.to_json()}, {"extra_depth", extra_depth}};
}

MllmConfig MllmConfig::from_json(const nlohmann::json& j) {
    MllmConfig c;
    c.tower = TextTowerConfig::from_json(j.at("tower"));
    c.extra_depth = j.at("extra_depth").get<int>();
    return c;
}

ToyMllm::ToyMllm(const MllmConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    Rng rng(Rng::hash_combine(0x3117ULL, init_seed));
    tower_ = TextTower::create(ps_, "text", cfg_.tower, tokenizer_.vocab_size(), rng);
    for (int i = 0; i < cfg_.extra_depth; ++i)
        extra_.push_back(nn::EncoderBlock::create(ps_, "mllm.extra" + std::to_string(i),
                                                  cfg_.tower.dim, cfg_.tower.heads,
                                                  cfg_.tower.dim * cfg_.tower.mlp_ratio, rng));
    final_ln_ = nn::LayerNormLayer::create(ps_, "mllm.final_ln", cfg_.tower.dim);
    lm_head_ = nn::Linear::create(ps_, "mllm.lm_head", cfg_.tower.dim, tokenizer_.vocab_size(),
                                  rng);
}

void ToyMllm::init_tower_from(const NamedTensors& contrastive_text_weights) {
    // The contrastive checkpoint also carries its projection head; copy only
    // the tower parameters we share.
    for (const auto& p : ps_.params()) {
        for (const auto& [name, t] : contrastive_text_weights) {
            if (name != p.node()->name) continue;
            check_shape(t.shape() == p.val().shape(), "mllm tower init: shape mismatch " + name);
            p.node()->value = t;
        }
    }
}

nn::Var ToyMllm::hidden_states(const std::string& text) const {
    nn::Var x = tower_.forward_ids(tokenizer_.encode(text, cfg_.tower.max_len));
    for (const auto& b : extra_) x = b.forward(x);
    return final_ln_.forward(x);
}

std::vector<float> ToyMllm::finetune(const synth::Manifest& data, int steps, int batch,
                                     uint64_t seed, const nn::AdamWConfig& opt_cfg) {
    const auto train_idx = data.split_indices(synth::Split::kTrain);
    check_shape(!train_idx.empty(), "mllm finetune: empty train split");
    nn::AdamW opt(ps_.trainable(), opt_cfg);
    Rng rng(Rng::hash_combine(0x3117f17eULL, seed));
    std::vector<float> curve;
    for (int step = 0; step < steps; ++step) {
        std::vector<nn::Var> losses;
        for (int b = 0; b < batch; ++b) {
            const auto& rec =
                data.records[static_cast<size_t>(train_idx[rng.uniform_int(train_idx.size())])];
            nn::Var h = hidden_states(rec.caption);
            nn::Var logits = lm_head_.forward(h);
            losses.push_back(nn::cross_entropy_rows(
                logits, tokenizer_.encode(rec.enhanced_caption, cfg_.tower.max_len)));
        }
        nn::Var loss = nn::scale(nn::add_n(losses), 1.0f / batch);
        const float lv = loss.scalar_value();
        if (!std::isfinite(lv))
            throw NumericError("mllm finetune diverged at step " + std::to_string(step));
        curve.push_back(lv);
        opt.zero_grad();
        nn::backward(loss);
        opt.step();
    }
    return curve;
}

QueryExtractor::QueryExtractor(const QueryExtractorConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    Rng rng(Rng::hash_combine(0x9e7aULL, init_seed));
    queries_ = ps_.create("extract.queries", nn::randn(rng, {cfg_.queries, cfg_.dim}, 0.02f));
    ln_q_ = nn::LayerNormLayer::create(ps_, "extract.ln_q", cfg_.dim);
    attn_ = nn::Attention::create(ps_, "extract.attn", cfg_.dim, cfg_.dim, cfg_.dim, 4, cfg_.dim,
                                  rng);
    ln_out_ = nn::LayerNormLayer::create(ps_, "extract.ln_out", cfg_.dim);
}

nn::Var QueryExtractor::forward(const nn::Var& mllm_hidden) const {
    check_shape(mllm_hidden.dim(1) == cfg_.dim, "query extractor: hidden dim mismatch");
    nn::Var attended = attn_.forward(ln_q_.forward(queries_), mllm_hidden);
    return ln_out_.forward(nn::add(queries_, attended));
}

FeatureTensor QueryExtractor::extract(const ToyMllm& mllm, const std::string& text) const {
    nn::Var e_m = forward(mllm.hidden_states(text));
    return make_feature(kEncoderId, e_m.val(), cfg_.queries, cfg_.dim);
}

}  // namespace fq::frozen
