// SPDX-License-Identifier: Apache-2.0
#include "fq/synth/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fq/synth/caption.hpp"
#include "fq/synth/png_io.hpp"

namespace fs = std::filesystem;

namespace fq::synth {

const char* split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::kTrain;
    if (name == "val") return Split::kVal;
    if (name == "test") return Split::kTest;
    throw std::runtime_error("unknown split: " + name);
}

Split split_for_index(int64_t index) {
    const int64_t r = index % 20;
    if (r == 18) return Split::kVal;
    if (r == 19) return Split::kTest;
    return Split::kTrain;
}

std::vector<int> Manifest::split_indices(Split s) const {
    std::vector<int> out;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].split == s) out.push_back(static_cast<int>(i));
    return out;
}

namespace {

std::string image_name(int64_t id) {
    std::ostringstream ss;
    ss << "images/";
    ss.width(6);
    ss.fill('0');
    ss << id;
    return ss.str() + ".png";
}

nlohmann::json record_to_json(const DatasetRecord& r) {
    return {{"id", r.id},
            {"scene", r.scene.to_json()},
            {"caption", r.caption},
            {"enhanced_caption", r.enhanced_caption},
            {"image", r.image},
            {"split", split_name(r.split)}};
}

}  // namespace

void validate_manifest_record(const nlohmann::json& j) {
    static const std::vector<std::pair<std::string, nlohmann::json::value_t>> required = {
        {"id", nlohmann::json::value_t::number_unsigned},
        {"scene", nlohmann::json::value_t::object},
        {"caption", nlohmann::json::value_t::string},
        {"enhanced_caption", nlohmann::json::value_t::string},
        {"image", nlohmann::json::value_t::string},
        {"split", nlohmann::json::value_t::string},
    };
    if (!j.is_object()) throw std::runtime_error("manifest record must be an object");
    for (const auto& [key, type] : required) {
        if (!j.contains(key)) throw std::runtime_error("manifest record missing key: " + key);
        if (key == "id") {
            if (!j[key].is_number_integer())
                throw std::runtime_error("manifest key has wrong type: id");
        } else if (j[key].type() != type) {
            throw std::runtime_error("manifest key has wrong type: " + key);
        }
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& [key, type] : required)
            if (key == it.key()) known = true;
        if (!known) throw std::runtime_error("manifest record has unknown key: " + it.key());
    }
    SceneSpec::from_json(j["scene"]);  // validates the embedded scene
    split_from_name(j["split"].get<std::string>());
}

Manifest build_dataset(int64_t n, uint64_t seed, const std::string& out_dir, int resolution) {
    if (n < 1) throw std::runtime_error("build_dataset: n must be >= 1");
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw std::runtime_error("build_dataset: cannot create " + out_dir);

    Manifest m;
    m.root = out_dir;
    m.resolution = resolution;
    m.seed = seed;

    const std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    std::ofstream os(manifest_path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("build_dataset: cannot write " + manifest_path);

    for (int64_t i = 0; i < n; ++i) {
        DatasetRecord r;
        r.id = i;
        r.scene = generate_scene(seed, static_cast<uint64_t>(i));
        r.caption = caption_scene(r.scene);
        r.enhanced_caption = enhance_caption(r.caption, r.scene);
        r.image = image_name(i);
        r.split = split_for_index(i);
        write_png((fs::path(out_dir) / r.image).string(), render_scene(r.scene, resolution));
        os << record_to_json(r).dump() << "\n";
        m.records.push_back(std::move(r));
    }
    if (!os) throw std::runtime_error("build_dataset: manifest write failed");
    os.close();

    // Sidecar with generation settings so loaders know the resolution.
    nlohmann::json meta = {{"n", n}, {"seed", seed}, {"resolution", resolution}};
    std::ofstream ms((fs::path(out_dir) / "dataset.json").string(), std::ios::trunc);
    ms << meta.dump(2) << "\n";
    return m;
}

Manifest load_manifest(const std::string& dir) {
    Manifest m;
    m.root = dir;
    const std::string meta_path = (fs::path(dir) / "dataset.json").string();
    {
        std::ifstream ms(meta_path);
        if (ms) {
            nlohmann::json meta = nlohmann::json::parse(ms);
            m.resolution = meta.value("resolution", 32);
            m.seed = meta.value("seed", 0ULL);
        }
    }
    const std::string manifest_path = (fs::path(dir) / "manifest.jsonl").string();
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("load_manifest: cannot open " + manifest_path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        validate_manifest_record(j);
        DatasetRecord r;
        r.id = j["id"].get<int64_t>();
        r.scene = SceneSpec::from_json(j["scene"]);
        r.caption = j["caption"].get<std::string>();
        r.enhanced_caption = j["enhanced_caption"].get<std::string>();
        r.image = j["image"].get<std::string>();
        r.split = split_from_name(j["split"].get<std::string>());
        m.records.push_back(std::move(r));
    }
    if (m.records.empty()) throw std::runtime_error("load_manifest: empty manifest");
    return m;
}

Image load_record_image(const Manifest& m, const DatasetRecord& r) {
    return read_png((fs::path(m.root) / r.image).string());
}

}  // namespace fq::synth
