// SPDX-License-Identifier: Apache-2.0
#include "fq/synth/caption.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "fq/core/rng.hpp"

namespace fq::synth {
namespace {

std::string object_phrase(const SceneObject& o) {
    return "a " + size_names()[static_cast<size_t>(o.size)] + " " +
           color_names()[static_cast<size_t>(o.color)] + " " +
           shape_names()[static_cast<size_t>(o.shape)];
}

template <size_t N>
std::optional<int> lookup(const std::array<std::string, N>& names, const std::string& w) {
    for (size_t i = 0; i < N; ++i)
        if (names[i] == w) return static_cast<int>(i);
    return std::nullopt;
}

struct WordCursor {
    const std::vector<std::string>& words;
    size_t pos = 0;

    bool done() const { return pos >= words.size(); }
    const std::string& peek() const {
        if (done()) throw std::runtime_error("caption parse: unexpected end of text");
        return words[pos];
    }
    std::string take() {
        const std::string& w = peek();
        ++pos;
        return w;
    }
    void expect(const std::string& w) {
        if (take() != w) throw std::runtime_error("caption parse: expected '" + w + "'");
    }
};

SceneObject parse_object_phrase(WordCursor& cur) {
    cur.expect("a");
    SceneObject o;
    auto size = lookup(size_names(), cur.take());
    if (!size) throw std::runtime_error("caption parse: bad size word");
    o.size = static_cast<ObjSize>(*size);
    auto color = lookup(color_names(), cur.take());
    if (!color) throw std::runtime_error("caption parse: bad color word");
    o.color = *color;
    auto shape = lookup(shape_names(), cur.take());
    if (!shape) throw std::runtime_error("caption parse: bad shape word");
    o.shape = static_cast<ObjShape>(*shape);
    return o;
}

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

std::string caption_scene(const SceneSpec& scene) {
    scene.validate();
    std::string out;
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        if (i) out += " and ";
        out += object_phrase(scene.objects[i]);
    }
    return out;
}

std::string enhance_caption(const std::string& caption, const SceneSpec& scene) {
    scene.validate();
    if (caption != caption_scene(scene))
        throw std::runtime_error("enhance_caption: caption does not match scene");
    std::string out;
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        if (i) out += " and ";
        out += object_phrase(scene.objects[i]);
        out += " in the " + cell_names()[static_cast<size_t>(scene.objects[i].cell)];
    }
    out += " on a " + color_names()[static_cast<size_t>(scene.background)] + " background";
    if (scene.texture) out += " with fine stripes";
    return out;
}

SceneSpec parse_enhanced_caption(const std::string& text) {
    const auto words = split_words(text);
    WordCursor cur{words};
    SceneSpec s;
    while (true) {
        SceneObject o = parse_object_phrase(cur);
        cur.expect("in");
        cur.expect("the");
        auto cell = lookup(cell_names(), cur.take());
        if (!cell) throw std::runtime_error("caption parse: bad position word");
        o.cell = *cell;
        s.objects.push_back(o);
        if (cur.peek() == "and") {
            cur.expect("and");
            continue;
        }
        break;
    }
    cur.expect("on");
    cur.expect("a");
    auto bg = lookup(color_names(), cur.take());
    if (!bg) throw std::runtime_error("caption parse: bad background color");
    s.background = *bg;
    cur.expect("background");
    if (!cur.done()) {
        cur.expect("with");
        cur.expect("fine");
        cur.expect("stripes");
        s.texture = true;
    }
    if (!cur.done()) throw std::runtime_error("caption parse: trailing words");
    std::sort(s.objects.begin(), s.objects.end(),
              [](const SceneObject& a, const SceneObject& b) { return a.cell < b.cell; });
    s.validate();
    return s;
}

std::vector<SceneObject> parse_caption_objects(const std::string& text) {
    const auto words = split_words(text);
    WordCursor cur{words};
    std::vector<SceneObject> objects;
    while (true) {
        objects.push_back(parse_object_phrase(cur));
        if (cur.done()) break;
        cur.expect("and");
    }
    if (objects.empty() || objects.size() > 3)
        throw std::runtime_error("caption parse: need 1..3 objects");
    return objects;
}

SceneSpec scene_from_prompt(const std::string& prompt) {
    try {
        return parse_enhanced_caption(prompt);
    } catch (const std::exception&) {
        // fall through to raw-caption parsing with deterministic fill
    }
    auto objects = parse_caption_objects(prompt);
    Rng rng(Rng::hash_str(prompt, 0xfabf00dULL));
    SceneSpec s;
    // Background avoiding object colors keeps everything visible.
    std::vector<bool> used(kNumColors, false);
    for (const auto& o : objects) used[static_cast<size_t>(o.color)] = true;
    int bg = static_cast<int>(rng.uniform_int(kNumColors));
    for (int tries = 0; tries < kNumColors && used[static_cast<size_t>(bg)]; ++tries)
        bg = (bg + 1) % kNumColors;
    s.background = bg;
    s.texture = rng.uniform() < 0.5;
    std::array<int, kNumCells> cells;
    for (int i = 0; i < kNumCells; ++i) cells[static_cast<size_t>(i)] = i;
    for (size_t i = 0; i < objects.size(); ++i) {
        const size_t j = i + rng.uniform_int(static_cast<uint64_t>(kNumCells - i));
        std::swap(cells[i], cells[j]);
        objects[i].cell = cells[i];
    }
    std::sort(objects.begin(), objects.end(),
              [](const SceneObject& a, const SceneObject& b) { return a.cell < b.cell; });
    s.objects = std::move(objects);
    s.validate();
    return s;
}

const std::vector<std::string>& caption_vocabulary() {
    static const std::vector<std::string> vocab = [] {
        std::vector<std::string> v = {"a", "and", "in", "the", "on", "background",
                                      "with", "fine", "stripes"};
        for (const auto& n : size_names()) v.push_back(n);
        for (const auto& n : color_names()) v.push_back(n);
        for (const auto& n : shape_names()) v.push_back(n);
        for (const auto& n : cell_names()) v.push_back(n);
        return v;
    }();
    return vocab;
}

}  // namespace fq::synth
