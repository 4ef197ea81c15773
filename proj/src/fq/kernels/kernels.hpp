// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

namespace fq::kernels {

// Data-parallel inner loops behind all model math. Scalar implementations are
// the reference semantics; AVX2 variants are selected at runtime when the CPU
// supports them and must agree with scalar within float tolerance
// (equivalence-tested in tests/unit/test_kernels.cpp).
//
// Backward kernels accumulate (+=) into their destination buffers, matching
// gradient accumulation in the autodiff tape.
struct Kernels {
    // C[m x n] = alpha * op(A) op(B) + beta * C, row-major.
    // op(A) is m x k (stored transposed when ta; lda is the stored row stride).
    void (*gemm)(bool ta, bool tb, int m, int n, int k, float alpha, const float* A, int lda,
                 const float* B, int ldb, float beta, float* C, int ldc);

    void (*axpy)(int n, float a, const float* x, float* y);  // y += a*x
    void (*scale)(int n, float a, float* x);                  // x *= a
    void (*vadd)(int n, const float* a, const float* b, float* y);
    void (*vsub)(int n, const float* a, const float* b, float* y);
    void (*vmul)(int n, const float* a, const float* b, float* y);
    float (*dot)(int n, const float* a, const float* b);
    double (*sum)(int n, const float* x);
    double (*sumsq)(int n, const float* x);
    float (*abs_max)(int n, const float* x);

    void (*softmax_rows)(int rows, int cols, const float* x, float* y);
    void (*softmax_rows_bwd)(int rows, int cols, const float* y, const float* dy, float* dx);

    // gamma/beta may be null (non-affine). mean/rstd are per-row stashes.
    void (*layernorm_fwd)(int rows, int cols, const float* x, const float* gamma,
                          const float* beta, float eps, float* y, float* mean, float* rstd);
    void (*layernorm_bwd)(int rows, int cols, const float* x, const float* gamma,
                          const float* mean, const float* rstd, const float* dy, float* dx,
                          float* dgamma, float* dbeta);

    void (*gelu_fwd)(int n, const float* x, float* y);
    void (*gelu_bwd)(int n, const float* x, const float* dy, float* dx);
    void (*silu_fwd)(int n, const float* x, float* y);
    void (*silu_bwd)(int n, const float* x, const float* dy, float* dx);
    void (*relu_fwd)(int n, const float* x, float* y);
    void (*relu_bwd)(int n, const float* x, const float* dy, float* dx);

    // AdamW step; inv_bc1/inv_bc2 are 1/(1-beta^t) bias corrections.
    void (*adamw)(int n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                  float beta2, float eps, float weight_decay, float inv_bc1, float inv_bc2);
};

enum class Backend { kAuto, kScalar, kAvx2 };

const Kernels& scalar_kernels();
#if defined(FQLAB_HAVE_AVX2)
const Kernels& avx2_kernels();
#endif

bool cpu_has_avx2();

// Active table. Defaults to the best supported backend; FQLAB_KERNELS
// (scalar|avx2|auto) overrides at process start, set_backend() at runtime.
const Kernels& active();
void set_backend(Backend b);
std::string active_backend_name();

}  // namespace fq::kernels
