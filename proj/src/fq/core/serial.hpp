// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fq/core/tensor.hpp"

namespace fq {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary parameter-dict format used for checkpoints and feature dumps.
// Layout: magic, entry count, then per entry name / dims / f32 payload.
void save_tensors(const std::string& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::string& path);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// Content hash over names, shapes and raw float bytes, in order.
std::string tensors_fingerprint(const NamedTensors& tensors);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace fq
