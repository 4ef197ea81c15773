// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "fq/core/tensor.hpp"

namespace fq {

// FNV-1a 64-bit content hash. Used to fingerprint frozen parameter sets and
// configs; stability of the hex string is what freezing contracts assert.
class Fingerprint {
public:
    Fingerprint() = default;
    void update(const void* bytes, size_t n);
    void update_str(const std::string& s);
    void update_tensor(const std::string& name, const Tensor& t);
    uint64_t value() const { return h_; }
    std::string hex() const;

private:
    uint64_t h_ = 1469598103934665603ULL;
};

std::string fingerprint_hex(const void* bytes, size_t n);

}  // namespace fq
