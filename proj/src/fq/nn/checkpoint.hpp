// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "fq/nn/modules.hpp"

namespace fq::nn {

// Checkpoint = binary parameter dict + JSON sidecar ("<path>.json") carrying
// kind, content hash and arbitrary metadata (geometry, train config, ...).
struct CheckpointMeta {
    std::string kind;
    std::string content_hash;
    nlohmann::json meta;  // free-form section owned by the producing module
};

void save_checkpoint(const std::string& path, const ParamStore& ps, const std::string& kind,
                     const nlohmann::json& meta);

// Loads parameters into an already-constructed model; verifies the sidecar
// hash against the loaded bytes and the expected kind.
CheckpointMeta load_checkpoint(const std::string& path, ParamStore& ps,
                               const std::string& expect_kind);

CheckpointMeta peek_checkpoint(const std::string& path);

bool checkpoint_exists(const std::string& path);

}  // namespace fq::nn
