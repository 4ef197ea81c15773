// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fq::synth {

enum class ObjShape : int { kCircle = 0, kSquare = 1, kTriangle = 2, kStar = 3 };
enum class ObjSize : int { kSmall = 0, kLarge = 1 };

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

inline constexpr int kNumShapes = 4;
inline constexpr int kNumColors = 8;
inline constexpr int kNumCells = 9;
inline constexpr int kNumSizes = 2;

const std::array<std::string, kNumShapes>& shape_names();
const std::array<std::string, kNumColors>& color_names();
const std::array<std::string, kNumCells>& cell_names();  // "top-left" .. "bottom-right"
const std::array<std::string, kNumSizes>& size_names();
Rgb palette_rgb(int color);

struct SceneObject {
    ObjShape shape = ObjShape::kCircle;
    int color = 0;  // palette index
    ObjSize size = ObjSize::kSmall;
    int cell = 0;  // 3x3 grid, row-major

    bool operator==(const SceneObject&) const = default;
};

// Exact symbolic description of one synthetic image; the ground truth that
// captions, renders and attribute evaluation all derive from.
struct SceneSpec {
    std::vector<SceneObject> objects;  // 1..3, unique cells, sorted by cell
    int background = 0;                // palette index
    bool texture = false;              // fine stripe detail inside objects

    void validate() const;  // throws on invariant violations
    bool operator==(const SceneSpec&) const = default;

    nlohmann::json to_json() const;
    static SceneSpec from_json(const nlohmann::json& j);
};

// Pure function of (seed, index); object colors avoid the background color so
// every object stays visible to the attribute classifier.
SceneSpec generate_scene(uint64_t seed, uint64_t index);

}  // namespace fq::synth
