// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fq/kernels/kernels.hpp"

namespace fq::kernels {
namespace {

Backend g_backend = Backend::kAuto;
bool g_env_checked = false;

Backend env_backend() {
    const char* e = std::getenv("FQLAB_KERNELS");
    if (!e) return Backend::kAuto;
    const std::string s(e);
    if (s == "scalar") return Backend::kScalar;
    if (s == "avx2") return Backend::kAvx2;
    if (s == "auto" || s.empty()) return Backend::kAuto;
    throw std::runtime_error("FQLAB_KERNELS must be scalar|avx2|auto, got: " + s);
}

const Kernels& resolve(Backend b) {
    switch (b) {
        case Backend::kScalar:
            return scalar_kernels();
        case Backend::kAvx2:
#if defined(FQLAB_HAVE_AVX2)
            if (cpu_has_avx2()) return avx2_kernels();
#endif
            throw std::runtime_error("AVX2 kernels requested but unavailable on this CPU/build");
        case Backend::kAuto:
        default:
#if defined(FQLAB_HAVE_AVX2)
            if (cpu_has_avx2()) return avx2_kernels();
#endif
            return scalar_kernels();
    }
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& active() {
    if (!g_env_checked) {
        g_backend = env_backend();
        g_env_checked = true;
    }
    return resolve(g_backend);
}

void set_backend(Backend b) {
    g_env_checked = true;  // explicit choice wins over the env var
    resolve(b);            // validate before committing
    g_backend = b;
}

std::string active_backend_name() {
    const Kernels* a = &active();
#if defined(FQLAB_HAVE_AVX2)
    if (cpu_has_avx2() && a == &avx2_kernels()) return "avx2";
#endif
    (void)a;
    return "scalar";
}

}  // namespace fq::kernels
