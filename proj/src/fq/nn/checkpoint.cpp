// SPDX-License-Identifier: Apache-2.0
#include "fq/nn/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fq::nn {

void save_checkpoint(const std::string& path, const ParamStore& ps, const std::string& kind,
                     const nlohmann::json& meta) {
    const NamedTensors named = ps.to_named();
    save_tensors(path, named);
    nlohmann::json side = {
        {"kind", kind}, {"content_hash", tensors_fingerprint(named)}, {"meta", meta}};
    write_text_file(path + ".json", side.dump(2) + "\n");
}

CheckpointMeta peek_checkpoint(const std::string& path) {
    nlohmann::json side = nlohmann::json::parse(read_text_file(path + ".json"));
    CheckpointMeta m;
    m.kind = side.at("kind").get<std::string>();
    m.content_hash = side.at("content_hash").get<std::string>();
    m.meta = side.at("meta");
    return m;
}

CheckpointMeta load_checkpoint(const std::string& path, ParamStore& ps,
                               const std::string& expect_kind) {
    CheckpointMeta m = peek_checkpoint(path);
    if (m.kind != expect_kind)
        throw std::runtime_error("checkpoint kind mismatch at " + path + ": have " + m.kind +
                                 ", want " + expect_kind);
    const NamedTensors named = load_tensors(path);
    const std::string hash = tensors_fingerprint(named);
    if (hash != m.content_hash)
        throw std::runtime_error("checkpoint content hash mismatch at " + path);
    ps.load_named(named);
    return m;
}

bool checkpoint_exists(const std::string& path) {
    return std::filesystem::exists(path) && std::filesystem::exists(path + ".json");
}

}  // namespace fq::nn
