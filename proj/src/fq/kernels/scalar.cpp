// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Plain loops, double accumulators where it is cheap;
// these define the semantics the SIMD variants are tested against.
#include <cmath>

#include "fq/kernels/kernels.hpp"

namespace fq::kernels {
namespace {

inline const float* row(const float* p, int i, int ld) { return p + static_cast<size_t>(i) * ld; }
inline float* row(float* p, int i, int ld) { return p + static_cast<size_t>(i) * ld; }

void gemm_scalar(bool ta, bool tb, int m, int n, int k, float alpha, const float* A, int lda,
                 const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) {
                const float a = ta ? A[static_cast<size_t>(p) * lda + i]
                                   : A[static_cast<size_t>(i) * lda + p];
                const float b = tb ? B[static_cast<size_t>(j) * ldb + p]
                                   : B[static_cast<size_t>(p) * ldb + j];
                acc += static_cast<double>(a) * static_cast<double>(b);
            }
            float* c = &C[static_cast<size_t>(i) * ldc + j];
            *c = alpha * static_cast<float>(acc) + (beta == 0.0f ? 0.0f : beta * *c);
        }
    }
}

void axpy_scalar(int n, float a, const float* x, float* y) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(int n, float a, float* x) {
    for (int i = 0; i < n; ++i) x[i] *= a;
}

void vadd_scalar(int n, const float* a, const float* b, float* y) {
    for (int i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void vsub_scalar(int n, const float* a, const float* b, float* y) {
    for (int i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void vmul_scalar(int n, const float* a, const float* b, float* y) {
    for (int i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

float dot_scalar(int n, const float* a, const float* b) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
    return static_cast<float>(acc);
}

double sum_scalar(int n, const float* x) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sumsq_scalar(int n, const float* x) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += static_cast<double>(x[i]) * x[i];
    return acc;
}

float abs_max_scalar(int n, const float* x) {
    float m = 0.0f;
    for (int i = 0; i < n; ++i) {
        const float a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

void softmax_rows_scalar(int rows, int cols, const float* x, float* y) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = row(x, r, cols);
        float* yr = row(y, r, cols);
        float mx = xr[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
        double z = 0.0;
        for (int c = 0; c < cols; ++c) {
            yr[c] = std::exp(xr[c] - mx);
            z += yr[c];
        }
        const float inv = static_cast<float>(1.0 / z);
        for (int c = 0; c < cols; ++c) yr[c] *= inv;
    }
}

void softmax_rows_bwd_scalar(int rows, int cols, const float* y, const float* dy, float* dx) {
    for (int r = 0; r < rows; ++r) {
        const float* yr = row(y, r, cols);
        const float* dyr = row(dy, r, cols);
        float* dxr = row(dx, r, cols);
        double inner = 0.0;
        for (int c = 0; c < cols; ++c) inner += static_cast<double>(dyr[c]) * yr[c];
        const float innerf = static_cast<float>(inner);
        for (int c = 0; c < cols; ++c) dxr[c] += yr[c] * (dyr[c] - innerf);
    }
}

void layernorm_fwd_scalar(int rows, int cols, const float* x, const float* gamma,
                          const float* beta, float eps, float* y, float* mean, float* rstd) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = row(x, r, cols);
        float* yr = row(y, r, cols);
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += xr[c];
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double d = xr[c] - mu;
            var += d * d;
        }
        var /= cols;
        const float muf = static_cast<float>(mu);
        const float rs = static_cast<float>(1.0 / std::sqrt(var + eps));
        if (mean) mean[r] = muf;
        if (rstd) rstd[r] = rs;
        for (int c = 0; c < cols; ++c) {
            float v = (xr[c] - muf) * rs;
            if (gamma) v *= gamma[c];
            if (beta) v += beta[c];
            yr[c] = v;
        }
    }
}

void layernorm_bwd_scalar(int rows, int cols, const float* x, const float* gamma,
                          const float* mean, const float* rstd, const float* dy, float* dx,
                          float* dgamma, float* dbeta) {
    for (int r = 0; r < rows; ++r) {
        const float* xr = row(x, r, cols);
        const float* dyr = row(dy, r, cols);
        float* dxr = row(dx, r, cols);
        const float mu = mean[r];
        const float rs = rstd[r];
        double sum_g = 0.0, sum_gx = 0.0;
        for (int c = 0; c < cols; ++c) {
            const float xhat = (xr[c] - mu) * rs;
            const float g = gamma ? dyr[c] * gamma[c] : dyr[c];
            sum_g += g;
            sum_gx += static_cast<double>(g) * xhat;
            if (dgamma) dgamma[c] += dyr[c] * xhat;
            if (dbeta) dbeta[c] += dyr[c];
        }
        const float mg = static_cast<float>(sum_g / cols);
        const float mgx = static_cast<float>(sum_gx / cols);
        for (int c = 0; c < cols; ++c) {
            const float xhat = (xr[c] - mu) * rs;
            const float g = gamma ? dyr[c] * gamma[c] : dyr[c];
            dxr[c] += rs * (g - mg - xhat * mgx);
        }
    }
}

// tanh-approximation GELU, matching common transformer implementations.
constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)

void gelu_fwd_scalar(int n, const float* x, float* y) {
    for (int i = 0; i < n; ++i) {
        const float v = x[i];
        const float u = kGeluC * (v + 0.044715f * v * v * v);
        y[i] = 0.5f * v * (1.0f + std::tanh(u));
    }
}

void gelu_bwd_scalar(int n, const float* x, const float* dy, float* dx) {
    for (int i = 0; i < n; ++i) {
        const float v = x[i];
        const float u = kGeluC * (v + 0.044715f * v * v * v);
        const float t = std::tanh(u);
        const float du = kGeluC * (1.0f + 3.0f * 0.044715f * v * v);
        const float d = 0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * du;
        dx[i] += d * dy[i];
    }
}

void silu_fwd_scalar(int n, const float* x, float* y) {
    for (int i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_bwd_scalar(int n, const float* x, const float* dy, float* dx) {
    for (int i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] += dy[i] * (s + x[i] * s * (1.0f - s));
    }
}

void relu_fwd_scalar(int n, const float* x, float* y) {
    for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_scalar(int n, const float* x, const float* dy, float* dx) {
    for (int i = 0; i < n; ++i) dx[i] += x[i] > 0.0f ? dy[i] : 0.0f;
}

void adamw_scalar(int n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                  float beta2, float eps, float weight_decay, float inv_bc1, float inv_bc2) {
    for (int i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        const float mhat = m[i] * inv_bc1;
        const float vhat = v[i] * inv_bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        gemm_scalar,        axpy_scalar,        scale_scalar,
        vadd_scalar,        vsub_scalar,        vmul_scalar,
        dot_scalar,         sum_scalar,         sumsq_scalar,
        abs_max_scalar,     softmax_rows_scalar, softmax_rows_bwd_scalar,
        layernorm_fwd_scalar, layernorm_bwd_scalar,
        gelu_fwd_scalar,    gelu_bwd_scalar,
        silu_fwd_scalar,    silu_bwd_scalar,
        relu_fwd_scalar,    relu_bwd_scalar,
        adamw_scalar,
    };
    return k;
}

}  // namespace fq::kernels
