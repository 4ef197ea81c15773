// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fq/synth/render.hpp"
#include "fq/synth/scene.hpp"

namespace fq::synth {

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

// Index-based splitting: stable under dataset growth and exactly 90/5/5 on
// multiples of 20.
Split split_for_index(int64_t index);

struct DatasetRecord {
    int64_t id = 0;
    SceneSpec scene;
    std::string caption;
    std::string enhanced_caption;
    std::string image;  // path relative to the dataset root
    Split split = Split::kTrain;
};

struct Manifest {
    std::string root;
    int resolution = 32;
    uint64_t seed = 0;
    std::vector<DatasetRecord> records;

    std::vector<int> split_indices(Split s) const;
};

// Writes images/{id}.png plus manifest.jsonl (one JSON object per line, keys:
// id, scene, caption, enhanced_caption, image, split).
Manifest build_dataset(int64_t n, uint64_t seed, const std::string& out_dir, int resolution = 32);

Manifest load_manifest(const std::string& dir);

// Schema check for one manifest line; throws with the offending key.
void validate_manifest_record(const nlohmann::json& j);

Image load_record_image(const Manifest& m, const DatasetRecord& r);

}  // namespace fq::synth
