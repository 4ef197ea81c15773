// SPDX-License-Identifier: Apache-2.0
#include "fq/synth/scene.hpp"

#include <algorithm>
#include <stdexcept>

#include "fq/core/rng.hpp"

namespace fq::synth {

const std::array<std::string, kNumShapes>& shape_names() {
    static const std::array<std::string, kNumShapes> n = {"circle", "square", "triangle", "star"};
    return n;
}

const std::array<std::string, kNumColors>& color_names() {
    static const std::array<std::string, kNumColors> n = {"red",    "green", "blue", "yellow",
                                                          "orange", "purple", "cyan", "magenta"};
    return n;
}

const std::array<std::string, kNumCells>& cell_names() {
    static const std::array<std::string, kNumCells> n = {
        "top-left",    "top-center",    "top-right",    "middle-left", "center",
        "middle-right", "bottom-left",  "bottom-center", "bottom-right"};
    return n;
}

const std::array<std::string, kNumSizes>& size_names() {
    static const std::array<std::string, kNumSizes> n = {"small", "large"};
    return n;
}

Rgb palette_rgb(int color) {
    static const std::array<Rgb, kNumColors> p = {{
        {214, 48, 49},    // red
        {32, 160, 68},    // green
        {42, 94, 232},    // blue
        {243, 203, 46},   // yellow
        {239, 129, 22},   // orange
        {132, 58, 186},   // purple
        {38, 198, 218},   // cyan
        {221, 58, 176},   // magenta
    }};
    if (color < 0 || color >= kNumColors) throw std::out_of_range("palette index");
    return p[static_cast<size_t>(color)];
}

void SceneSpec::validate() const {
    if (objects.empty() || objects.size() > 3)
        throw std::runtime_error("scene must have 1..3 objects");
    if (background < 0 || background >= kNumColors)
        throw std::runtime_error("scene background out of palette");
    for (size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (o.color < 0 || o.color >= kNumColors) throw std::runtime_error("object color range");
        if (o.cell < 0 || o.cell >= kNumCells) throw std::runtime_error("object cell range");
        if (static_cast<int>(o.shape) < 0 || static_cast<int>(o.shape) >= kNumShapes)
            throw std::runtime_error("object shape range");
        if (i > 0 && objects[i - 1].cell >= o.cell)
            throw std::runtime_error("objects must occupy unique cells in canonical order");
    }
}

nlohmann::json SceneSpec::to_json() const {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : objects) {
        objs.push_back({{"shape", shape_names()[static_cast<size_t>(o.shape)]},
                        {"color", color_names()[static_cast<size_t>(o.color)]},
                        {"size", size_names()[static_cast<size_t>(o.size)]},
                        {"cell", o.cell}});
    }
    return {{"objects", objs},
            {"background", color_names()[static_cast<size_t>(background)]},
            {"texture", texture}};
}

namespace {

template <size_t N>
int index_of(const std::array<std::string, N>& names, const std::string& s, const char* what) {
    for (size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<int>(i);
    throw std::runtime_error(std::string("unknown ") + what + ": " + s);
}

}  // namespace

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
    SceneSpec s;
    for (const auto& o : j.at("objects")) {
        SceneObject obj;
        obj.shape = static_cast<ObjShape>(
            index_of(shape_names(), o.at("shape").get<std::string>(), "shape"));
        obj.color = index_of(color_names(), o.at("color").get<std::string>(), "color");
        obj.size = static_cast<ObjSize>(
            index_of(size_names(), o.at("size").get<std::string>(), "size"));
        obj.cell = o.at("cell").get<int>();
        s.objects.push_back(obj);
    }
    s.background = index_of(color_names(), j.at("background").get<std::string>(), "color");
    s.texture = j.at("texture").get<bool>();
    s.validate();
    return s;
}

SceneSpec generate_scene(uint64_t seed, uint64_t index) {
    Rng rng(Rng::hash_combine(Rng::hash_combine(0x5ce7e5cafeULL, seed), index));
    SceneSpec s;
    s.background = static_cast<int>(rng.uniform_int(kNumColors));
    s.texture = rng.uniform() < 0.5;

    const int count = 1 + static_cast<int>(rng.uniform_int(3));
    std::array<int, kNumCells> cells;
    for (int i = 0; i < kNumCells; ++i) cells[static_cast<size_t>(i)] = i;
    // Fisher-Yates prefix shuffle to pick distinct cells.
    for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(kNumCells - i)));
        std::swap(cells[static_cast<size_t>(i)], cells[static_cast<size_t>(j)]);
    }
    for (int i = 0; i < count; ++i) {
        SceneObject o;
        o.cell = cells[static_cast<size_t>(i)];
        o.shape = static_cast<ObjShape>(rng.uniform_int(kNumShapes));
        int color = static_cast<int>(rng.uniform_int(kNumColors - 1));
        if (color >= s.background) ++color;  // skip the background color
        o.color = color;
        o.size = static_cast<ObjSize>(rng.uniform_int(kNumSizes));
        s.objects.push_back(o);
    }
    std::sort(s.objects.begin(), s.objects.end(),
              [](const SceneObject& a, const SceneObject& b) { return a.cell < b.cell; });
    s.validate();
    return s;
}

}  // namespace fq::synth
