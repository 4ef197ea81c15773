// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fq/synth/scene.hpp"

namespace fq::synth {

// Raw prompt: "a {size} {color} {shape}" phrases joined by " and ".
// Mentions every object's size, color and shape; omits position, background
// and texture (the enhancer adds those).
std::string caption_scene(const SceneSpec& scene);

// Enhanced prompt: per-object position phrases plus background and texture
// suffixes. Strict superset of the caption's tokens. Throws if the caption
// does not match the scene.
std::string enhance_caption(const std::string& caption, const SceneSpec& scene);

// Rule-based parser: exact inverse of caption_scene + enhance_caption.
SceneSpec parse_enhanced_caption(const std::string& text);

// Parses a raw caption into objects (shape/color/size only, no cells).
std::vector<SceneObject> parse_caption_objects(const std::string& text);

// Scene for an arbitrary in-grammar prompt: full parse when the prompt is an
// enhanced caption, otherwise missing attributes (cells, background, texture)
// are filled deterministically from a hash of the prompt text.
SceneSpec scene_from_prompt(const std::string& prompt);

// Closed caption vocabulary (grammar words only, no specials).
const std::vector<std::string>& caption_vocabulary();

std::vector<std::string> split_words(const std::string& text);

}  // namespace fq::synth
