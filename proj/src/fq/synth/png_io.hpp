// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fq/synth/render.hpp"

namespace fq::synth {

// Minimal PNG codec for 8-bit RGB, non-interlaced images (the only kind this
// project writes). Deflate via zlib.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

}  // namespace fq::synth
