// SPDX-License-Identifier: Apache-2.0
#include "fq/frozen/vision_encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace fq::frozen {

const char* variant_name(EncoderVariant v) {
    return v == EncoderVariant::kStable ? "stable" : "brittle";
}

EncoderVariant variant_from_name(const std::string& name) {
    if (name == "stable") return EncoderVariant::kStable;
    if (name == "brittle") return EncoderVariant::kBrittle;
    throw std::runtime_error("unknown encoder variant: " + name);
}

std::string vision_encoder_id(EncoderVariant v) {
    return std::string("vis_") + variant_name(v);
}

nlohmann::json VisionEncoderConfig::to_json() const {
    return {{"resolution", resolution}, {"patch", patch},     {"dim", dim},
            {"depth", depth},           {"heads", heads},     {"mlp_ratio", mlp_ratio},
            {"proj_dim", proj_dim},     {"sparsity_l1", sparsity_l1},
            {"logit_scale", logit_scale}};
}

VisionEncoderConfig VisionEncoderConfig::from_json(const nlohmann::json& j) {
    VisionEncoderConfig c;
    c.resolution = j.at("resolution").get<int>();
    c.patch = j.at("patch").get<int>();
    c.dim = j.at("dim").get<int>();
    c.depth = j.at("depth").get<int>();
    c.heads = j.at("heads").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.proj_dim = j.at("proj_dim").get<int>();
    c.sparsity_l1 = j.at("sparsity_l1").get<float>();
    c.logit_scale = j.at("logit_scale").get<float>();
    return c;
}

VisionTower VisionTower::create(nn::ParamStore& ps, const std::string& prefix,
                                const VisionEncoderConfig& cfg, bool final_layernorm, Rng& rng) {
    VisionTower t;
    t.cfg = cfg;
    t.final_layernorm = final_layernorm;
    const int patch_dim = cfg.patch * cfg.patch * 3;
    t.patch_embed = nn::Linear::create(ps, prefix + ".patch_embed", patch_dim, cfg.dim, rng);
    t.pos_embed = ps.create(prefix + ".pos_embed", nn::randn(rng, {cfg.tokens(), cfg.dim}, 0.02f));
    for (int i = 0; i < cfg.depth; ++i)
        t.blocks.push_back(nn::EncoderBlock::create(ps, prefix + ".block" + std::to_string(i),
                                                    cfg.dim, cfg.heads, cfg.dim * cfg.mlp_ratio,
                                                    rng));
    return t;
}

nn::Var VisionTower::forward_image(const Tensor& img) const {
    check_shape(img.ndim() == 3 && img.dim(0) == 3 && img.dim(1) == cfg.resolution &&
                    img.dim(2) == cfg.resolution,
                "vision tower: resolution mismatch");
    nn::Var x = nn::patchify(nn::Var::constant(img), cfg.patch);
    x = nn::add(patch_embed.forward(x), pos_embed);
    for (const auto& b : blocks) x = b.forward(x);
    if (final_layernorm) x = nn::layer_norm_plain(x);
    return x;
}

VisionEncoder::VisionEncoder(EncoderVariant variant, const VisionEncoderConfig& cfg,
                             uint64_t init_seed)
    : variant_(variant), cfg_(cfg), encoder_id_(vision_encoder_id(variant)) {
    Rng rng(Rng::hash_combine(Rng::hash_str(encoder_id_), init_seed));
    tower_ = VisionTower::create(ps_, "vision", cfg_, variant == EncoderVariant::kStable, rng);
    proj_ = nn::Linear::create(ps_, "vision.proj", cfg_.dim, cfg_.proj_dim, rng);
}

FeatureTensor VisionEncoder::encode_image(const synth::Image& img) const {
    nn::Var tokens = tower_.forward_image(synth::image_to_tensor(img));
    return make_feature(encoder_id_, tokens.val(), cfg_.tokens(), cfg_.dim);
}

nn::Var VisionEncoder::forward_pooled(const nn::Var& tokens) const {
    nn::Var pooled = nn::mean_rows(tokens);
    nn::Var projected = nn::linear(nn::reshape(pooled, {1, cfg_.dim}), proj_.w, proj_.b);
    return nn::l2_normalize_rows(projected);
}

Tensor VisionEncoder::pooled_embed(const synth::Image& img) const {
    nn::Var emb = forward_pooled(tower_.forward_image(synth::image_to_tensor(img)));
    Tensor out({cfg_.proj_dim});
    std::copy(emb.val().data(), emb.val().data() + cfg_.proj_dim, out.data());
    return out;
}

ContrastivePretrainer::ContrastivePretrainer(VisionEncoder& encoder,
                                             const TextTowerConfig& text_cfg, uint64_t init_seed)
    : encoder_(encoder), text_cfg_(text_cfg) {
    Rng rng(Rng::hash_combine(0xc0a57ULL, init_seed));
    text_tower_ = TextTower::create(text_ps_, "text", text_cfg_, tokenizer_.vocab_size(), rng);
    text_proj_ = nn::Linear::create(text_ps_, "text.proj", text_cfg_.dim,
                                    encoder_.config().proj_dim, rng);
}

PretrainResult ContrastivePretrainer::train(const synth::Manifest& data, int steps, int batch,
                                            uint64_t seed, const nn::AdamWConfig& opt_cfg) {
    const auto train_idx = data.split_indices(synth::Split::kTrain);
    check_shape(static_cast<int>(train_idx.size()) >= batch, "contrastive: dataset too small");

    std::vector<nn::Var> params = encoder_.params().trainable();
    for (const auto& p : text_ps_.trainable()) params.push_back(p);
    nn::AdamW opt(params, opt_cfg);

    const bool brittle = encoder_.variant() == EncoderVariant::kBrittle;
    Rng rng(Rng::hash_combine(0x77a11ULL, seed));
    PretrainResult result;

    for (int step = 0; step < steps; ++step) {
        // Distinct scenes per batch; duplicate captions would poison the
        // contrastive targets.
        std::vector<int> chosen;
        std::vector<std::string> caps;
        while (static_cast<int>(chosen.size()) < batch) {
            const int idx = train_idx[rng.uniform_int(train_idx.size())];
            const std::string& cap = data.records[static_cast<size_t>(idx)].caption;
            bool dup = false;
            for (const auto& c : caps) dup |= (c == cap);
            if (!dup) {
                chosen.push_back(idx);
                caps.push_back(cap);
            }
        }

        std::vector<nn::Var> img_rows, txt_rows, penalties;
        for (int i = 0; i < batch; ++i) {
            const auto& rec = data.records[static_cast<size_t>(chosen[static_cast<size_t>(i)])];
            const synth::Image img = synth::render_scene(rec.scene, encoder_.config().resolution);
            nn::Var tokens = encoder_.forward_tokens(synth::image_to_tensor(img));
            if (brittle) penalties.push_back(nn::l1_mean(tokens));
            img_rows.push_back(nn::reshape(encoder_.forward_pooled(tokens),
                                           {encoder_.config().proj_dim}));
            nn::Var t = text_tower_.forward_ids(tokenizer_.encode(rec.caption, text_cfg_.max_len));
            nn::Var pooled = nn::mean_rows(t);
            nn::Var proj = nn::linear(nn::reshape(pooled, {1, text_cfg_.dim}), text_proj_.w,
                                      text_proj_.b);
            txt_rows.push_back(nn::reshape(nn::l2_normalize_rows(proj),
                                           {encoder_.config().proj_dim}));
        }
        nn::Var img_mat = nn::stack_rows(img_rows);
        nn::Var txt_mat = nn::stack_rows(txt_rows);
        std::vector<int> targets(static_cast<size_t>(batch));
        for (int i = 0; i < batch; ++i) targets[static_cast<size_t>(i)] = i;
        nn::Var logits_i2t =
            nn::scale(nn::matmul(img_mat, txt_mat, false, true), encoder_.config().logit_scale);
        nn::Var logits_t2i =
            nn::scale(nn::matmul(txt_mat, img_mat, false, true), encoder_.config().logit_scale);
        nn::Var loss = nn::scale(nn::add(nn::cross_entropy_rows(logits_i2t, targets),
                                         nn::cross_entropy_rows(logits_t2i, targets)),
                                 0.5f);
        if (brittle && !penalties.empty())
            loss = nn::add(loss, nn::scale(nn::add_n(penalties),
                                           encoder_.config().sparsity_l1 / batch));

        const float loss_val = loss.scalar_value();
        if (!std::isfinite(loss_val))
            throw NumericError("contrastive pretraining diverged at step " +
                               std::to_string(step));
        result.loss_curve.push_back(loss_val);
        opt.zero_grad();
        nn::backward(loss);
        opt.step();
    }

    result.val_retrieval_top1 = eval_retrieval_top1(data, synth::Split::kVal);
    return result;
}

Tensor ContrastivePretrainer::text_embed(const std::string& text) {
    nn::Var t = text_tower_.forward_ids(tokenizer_.encode(text, text_cfg_.max_len));
    nn::Var pooled = nn::mean_rows(t);
    nn::Var proj =
        nn::linear(nn::reshape(pooled, {1, text_cfg_.dim}), text_proj_.w, text_proj_.b);
    nn::Var emb = nn::l2_normalize_rows(proj);
    Tensor out({encoder_.config().proj_dim});
    std::copy(emb.val().data(), emb.val().data() + out.numel(), out.data());
    return out;
}

float ContrastivePretrainer::eval_retrieval_top1(const synth::Manifest& data,
                                                 synth::Split split) {
    const auto idx = data.split_indices(split);
    check_shape(!idx.empty(), "retrieval eval: empty split");
    std::vector<Tensor> img_embs;
    img_embs.reserve(idx.size());
    for (int i : idx) {
        const auto& rec = data.records[static_cast<size_t>(i)];
        img_embs.push_back(encoder_.pooled_embed(
            synth::render_scene(rec.scene, encoder_.config().resolution)));
    }
    int hits = 0;
    for (size_t q = 0; q < idx.size(); ++q) {
        const Tensor t = text_embed(data.records[static_cast<size_t>(idx[q])].caption);
        size_t best = 0;
        float best_sim = -2.0f;
        for (size_t j = 0; j < img_embs.size(); ++j) {
            float sim = 0.0f;
            for (int64_t k = 0; k < t.numel(); ++k) sim += t.at(k) * img_embs[j].at(k);
            if (sim > best_sim) {
                best_sim = sim;
                best = j;
            }
        }
        // Identical captions can map to several images; count a hit when the
        // retrieved image's caption matches.
        if (data.records[static_cast<size_t>(idx[best])].caption ==
            data.records[static_cast<size_t>(idx[q])].caption)
            ++hits;
    }
    return static_cast<float>(hits) / static_cast<float>(idx.size());
}

}  // namespace fq::frozen
