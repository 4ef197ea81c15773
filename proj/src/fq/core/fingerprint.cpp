// SPDX-License-Identifier: Apache-2.0
#include "fq/core/fingerprint.hpp"

#include <cstdio>

namespace fq {

void Fingerprint::update(const void* bytes, size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h_ ^= static_cast<uint64_t>(p[i]);
        h_ *= 1099511628211ULL;
    }
}

void Fingerprint::update_str(const std::string& s) { update(s.data(), s.size()); }

void Fingerprint::update_tensor(const std::string& name, const Tensor& t) {
    update_str(name);
    for (int d : t.shape()) update(&d, sizeof(d));
    update(t.data(), static_cast<size_t>(t.numel()) * sizeof(float));
}

std::string Fingerprint::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h_));
    return std::string(buf);
}

std::string fingerprint_hex(const void* bytes, size_t n) {
    Fingerprint f;
    f.update(bytes, n);
    return f.hex();
}

}  // namespace fq
