// SPDX-License-Identifier: Apache-2.0
//
// AVX2/FMA variants of the hot kernels. Built in a separate TU with
// -mavx2 -mfma; selected at runtime via cpu_has_avx2(). Kernels that are
// transcendental-bound (softmax, gelu, silu) stay on the scalar path.
#include "fq/kernels/kernels.hpp"

#if defined(FQLAB_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace fq::kernels {
namespace {

inline float hsum8(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_shuffle_ps(lo, lo, 0x1);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

void scale_row(float* c, int n, float beta) {
    if (beta == 0.0f) {
        std::memset(c, 0, static_cast<size_t>(n) * sizeof(float));
        return;
    }
    if (beta == 1.0f) return;
    const __m256 vb = _mm256_set1_ps(beta);
    int j = 0;
    for (; j + 8 <= n; j += 8)
        _mm256_storeu_ps(c + j, _mm256_mul_ps(_mm256_loadu_ps(c + j), vb));
    for (; j < n; ++j) c[j] *= beta;
}

// y[0..n) += a * x[0..n)
inline void fma_row(float* y, const float* x, float a, int n) {
    const __m256 va = _mm256_set1_ps(a);
    int j = 0;
    for (; j + 16 <= n; j += 16) {
        _mm256_storeu_ps(y + j, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + j), _mm256_loadu_ps(y + j)));
        _mm256_storeu_ps(y + j + 8,
                         _mm256_fmadd_ps(va, _mm256_loadu_ps(x + j + 8), _mm256_loadu_ps(y + j + 8)));
    }
    for (; j + 8 <= n; j += 8)
        _mm256_storeu_ps(y + j, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + j), _mm256_loadu_ps(y + j)));
    for (; j < n; ++j) y[j] += a * x[j];
}

inline float dot_n(const float* a, const float* b, int n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    int i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    float s = hsum8(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemm_avx2(bool ta, bool tb, int m, int n, int k, float alpha, const float* A, int lda,
               const float* B, int ldb, float beta, float* C, int ldc) {
    if (!ta && !tb) {
        for (int i = 0; i < m; ++i) {
            float* c = C + static_cast<size_t>(i) * ldc;
            scale_row(c, n, beta);
            const float* arow = A + static_cast<size_t>(i) * lda;
            for (int p = 0; p < k; ++p) {
                const float a = alpha * arow[p];
                if (a == 0.0f) continue;
                fma_row(c, B + static_cast<size_t>(p) * ldb, a, n);
            }
        }
        return;
    }
    if (!ta && tb) {
        for (int i = 0; i < m; ++i) {
            const float* arow = A + static_cast<size_t>(i) * lda;
            float* c = C + static_cast<size_t>(i) * ldc;
            for (int j = 0; j < n; ++j) {
                const float d = alpha * dot_n(arow, B + static_cast<size_t>(j) * ldb, k);
                c[j] = d + (beta == 0.0f ? 0.0f : beta * c[j]);
            }
        }
        return;
    }
    if (ta && !tb) {
        for (int i = 0; i < m; ++i) scale_row(C + static_cast<size_t>(i) * ldc, n, beta);
        for (int p = 0; p < k; ++p) {
            const float* acol = A + static_cast<size_t>(p) * lda;
            const float* brow = B + static_cast<size_t>(p) * ldb;
            for (int i = 0; i < m; ++i) {
                const float a = alpha * acol[i];
                if (a == 0.0f) continue;
                fma_row(C + static_cast<size_t>(i) * ldc, brow, a, n);
            }
        }
        return;
    }
    // ta && tb: cold path, keep it simple.
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int p = 0; p < k; ++p)
                acc += A[static_cast<size_t>(p) * lda + i] * B[static_cast<size_t>(j) * ldb + p];
            float* c = &C[static_cast<size_t>(i) * ldc + j];
            *c = alpha * acc + (beta == 0.0f ? 0.0f : beta * *c);
        }
    }
}

void axpy_avx2(int n, float a, const float* x, float* y) { fma_row(y, x, a, n); }

void scale_avx2(int n, float a, float* x) {
    const __m256 va = _mm256_set1_ps(a);
    int i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), va));
    for (; i < n; ++i) x[i] *= a;
}

void vadd_avx2(int n, const float* a, const float* b, float* y) {
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] + b[i];
}

void vsub_avx2(int n, const float* a, const float* b, float* y) {
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] - b[i];
}

void vmul_avx2(int n, const float* a, const float* b, float* y) {
    int i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] * b[i];
}

float dot_avx2(int n, const float* a, const float* b) { return dot_n(a, b, n); }

double sum_avx2(int n, const float* x) {
    // Block into chunks and accumulate the chunk sums in double; keeps results
    // close to the scalar reference on long arrays.
    double total = 0.0;
    int i = 0;
    while (i < n) {
        const int blk = std::min(n - i, 4096);
        __m256 acc = _mm256_setzero_ps();
        int j = 0;
        for (; j + 8 <= blk; j += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i + j));
        float s = hsum8(acc);
        for (; j < blk; ++j) s += x[i + j];
        total += s;
        i += blk;
    }
    return total;
}

double sumsq_avx2(int n, const float* x) {
    double total = 0.0;
    int i = 0;
    while (i < n) {
        const int blk = std::min(n - i, 4096);
        __m256 acc = _mm256_setzero_ps();
        int j = 0;
        for (; j + 8 <= blk; j += 8) {
            const __m256 v = _mm256_loadu_ps(x + i + j);
            acc = _mm256_fmadd_ps(v, v, acc);
        }
        float s = hsum8(acc);
        for (; j < blk; ++j) s += x[i + j] * x[i + j];
        total += s;
        i += blk;
    }
    return total;
}

float abs_max_avx2(int n, const float* x) {
    const __m256 sign_mask = _mm256_set1_ps(-0.0f);
    __m256 vm = _mm256_setzero_ps();
    int i = 0;
    for (; i + 8 <= n; i += 8)
        vm = _mm256_max_ps(vm, _mm256_andnot_ps(sign_mask, _mm256_loadu_ps(x + i)));
    float m = 0.0f;
    alignas(32) float tmp[8];
    _mm256_store_ps(tmp, vm);
    for (float t : tmp) m = std::max(m, t);
    for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

void layernorm_fwd_avx2(int rows, int cols, const float* x, const float* gamma,
                        const float* beta, float eps, float* y, float* mean, float* rstd) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = x + static_cast<size_t>(r) * cols;
        float* yr = y + static_cast<size_t>(r) * cols;
        __m256 accs = _mm256_setzero_ps();
        int c = 0;
        for (; c + 8 <= cols; c += 8) accs = _mm256_add_ps(accs, _mm256_loadu_ps(xr + c));
        float s = hsum8(accs);
        for (; c < cols; ++c) s += xr[c];
        const float mu = s / cols;

        const __m256 vmu = _mm256_set1_ps(mu);
        __m256 accv = _mm256_setzero_ps();
        c = 0;
        for (; c + 8 <= cols; c += 8) {
            const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(xr + c), vmu);
            accv = _mm256_fmadd_ps(d, d, accv);
        }
        float sv = hsum8(accv);
        for (; c < cols; ++c) {
            const float d = xr[c] - mu;
            sv += d * d;
        }
        const float rs = 1.0f / std::sqrt(sv / cols + eps);
        if (mean) mean[r] = mu;
        if (rstd) rstd[r] = rs;

        const __m256 vrs = _mm256_set1_ps(rs);
        c = 0;
        for (; c + 8 <= cols; c += 8) {
            __m256 v = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(xr + c), vmu), vrs);
            if (gamma) v = _mm256_mul_ps(v, _mm256_loadu_ps(gamma + c));
            if (beta) v = _mm256_add_ps(v, _mm256_loadu_ps(beta + c));
            _mm256_storeu_ps(yr + c, v);
        }
        for (; c < cols; ++c) {
            float v = (xr[c] - mu) * rs;
            if (gamma) v *= gamma[c];
            if (beta) v += beta[c];
            yr[c] = v;
        }
    }
}

void adamw_avx2(int n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                float beta2, float eps, float weight_decay, float inv_bc1, float inv_bc2) {
    const __m256 vb1 = _mm256_set1_ps(beta1);
    const __m256 vb1c = _mm256_set1_ps(1.0f - beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2);
    const __m256 vb2c = _mm256_set1_ps(1.0f - beta2);
    const __m256 vbc1 = _mm256_set1_ps(inv_bc1);
    const __m256 vbc2 = _mm256_set1_ps(inv_bc2);
    const __m256 veps = _mm256_set1_ps(eps);
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 vwd = _mm256_set1_ps(weight_decay);
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vg = _mm256_loadu_ps(g + i);
        __m256 vm = _mm256_fmadd_ps(vb1c, vg, _mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)));
        __m256 vv = _mm256_fmadd_ps(vb2c, _mm256_mul_ps(vg, vg),
                                    _mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)));
        _mm256_storeu_ps(m + i, vm);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_mul_ps(vm, vbc1);
        const __m256 vhat = _mm256_mul_ps(vv, vbc2);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
        const __m256 vp = _mm256_loadu_ps(p + i);
        const __m256 upd = _mm256_fmadd_ps(vwd, vp, _mm256_div_ps(mhat, denom));
        _mm256_storeu_ps(p + i, _mm256_fnmadd_ps(vlr, upd, vp));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        const float mhat = m[i] * inv_bc1;
        const float vhat = v[i] * inv_bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
    }
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = [] {
        Kernels t = scalar_kernels();
        t.gemm = gemm_avx2;
        t.axpy = axpy_avx2;
        t.scale = scale_avx2;
        t.vadd = vadd_avx2;
        t.vsub = vsub_avx2;
        t.vmul = vmul_avx2;
        t.dot = dot_avx2;
        t.sum = sum_avx2;
        t.sumsq = sumsq_avx2;
        t.abs_max = abs_max_avx2;
        t.layernorm_fwd = layernorm_fwd_avx2;
        t.adamw = adamw_avx2;
        return t;
    }();
    return k;
}

}  // namespace fq::kernels

#endif  // FQLAB_HAVE_AVX2
