// SPDX-License-Identifier: Apache-2.0
#include "fq/nn/ops.hpp"

#include <cmath>
#include <cstring>

#include "fq/kernels/kernels.hpp"

namespace fq::nn {
namespace {

namespace K = fq::kernels;

Var make_node(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> bwd) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backward_fn = std::move(bwd);
    return Var(std::move(n));
}

bool wants_grad(const NodePtr& p) { return p->requires_grad; }

}  // namespace

// ---------------------------------------------------------------------------
// Tensor builders
// ---------------------------------------------------------------------------

Tensor randn(Rng& rng, std::vector<int> shape, float stddev) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normalf() * stddev;
    return t;
}

Tensor rand_uniform(Rng& rng, std::vector<int> shape, float lo, float hi) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = lo + (hi - lo) * rng.uniformf();
    return t;
}

Tensor sinusoidal_embedding(double t, int dim, double max_period) {
    check_shape(dim % 2 == 0, "sinusoidal_embedding needs even dim");
    Tensor out({dim});
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(max_period) * i / half);
        out.at(i) = static_cast<float>(std::cos(t * freq));
        out.at(half + i) = static_cast<float>(std::sin(t * freq));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_shape(a.val().same_shape(b.val()), "add: shape mismatch");
    Tensor y(a.shape());
    K::active().vadd(static_cast<int>(y.numel()), a.val().data(), b.val().data(), y.data());
    return make_node(std::move(y), {a.node(), b.node()}, [](Node& self) {
        const int n = static_cast<int>(self.value.numel());
        for (int i = 0; i < 2; ++i)
            if (wants_grad(self.parents[i]))
                K::active().axpy(n, 1.0f, self.grad.data(), self.parents[i]->ensure_grad().data());
    });
}

Var sub(const Var& a, const Var& b) {
    check_shape(a.val().same_shape(b.val()), "sub: shape mismatch");
    Tensor y(a.shape());
    K::active().vsub(static_cast<int>(y.numel()), a.val().data(), b.val().data(), y.data());
    return make_node(std::move(y), {a.node(), b.node()}, [](Node& self) {
        const int n = static_cast<int>(self.value.numel());
        if (wants_grad(self.parents[0]))
            K::active().axpy(n, 1.0f, self.grad.data(), self.parents[0]->ensure_grad().data());
        if (wants_grad(self.parents[1]))
            K::active().axpy(n, -1.0f, self.grad.data(), self.parents[1]->ensure_grad().data());
    });
}

Var mul(const Var& a, const Var& b) {
    check_shape(a.val().same_shape(b.val()), "mul: shape mismatch");
    Tensor y(a.shape());
    K::active().vmul(static_cast<int>(y.numel()), a.val().data(), b.val().data(), y.data());
    return make_node(std::move(y), {a.node(), b.node()}, [](Node& self) {
        const int n = static_cast<int>(self.value.numel());
        const float* g = self.grad.data();
        if (wants_grad(self.parents[0])) {
            float* da = self.parents[0]->ensure_grad().data();
            const float* bv = self.parents[1]->value.data();
            for (int i = 0; i < n; ++i) da[i] += g[i] * bv[i];
        }
        if (wants_grad(self.parents[1])) {
            float* db = self.parents[1]->ensure_grad().data();
            const float* av = self.parents[0]->value.data();
            for (int i = 0; i < n; ++i) db[i] += g[i] * av[i];
        }
    });
}

Var add_n(const std::vector<Var>& xs) {
    check_shape(!xs.empty(), "add_n: empty input");
    Tensor y(xs[0].shape());
    std::vector<NodePtr> parents;
    parents.reserve(xs.size());
    const int n = static_cast<int>(y.numel());
    for (const auto& x : xs) {
        check_shape(x.val().same_shape(y), "add_n: shape mismatch");
        K::active().axpy(n, 1.0f, x.val().data(), y.data());
        parents.push_back(x.node());
    }
    return make_node(std::move(y), std::move(parents), [](Node& self) {
        const int n2 = static_cast<int>(self.value.numel());
        for (auto& p : self.parents)
            if (wants_grad(p)) K::active().axpy(n2, 1.0f, self.grad.data(), p->ensure_grad().data());
    });
}

Var scale(const Var& x, float s) { return scale_shift(x, s, 0.0f); }

Var scale_shift(const Var& x, float a, float b) {
    Tensor y(x.shape());
    const int n = static_cast<int>(y.numel());
    const float* xv = x.val().data();
    float* yv = y.data();
    for (int i = 0; i < n; ++i) yv[i] = a * xv[i] + b;
    return make_node(std::move(y), {x.node()}, [a](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        K::active().axpy(static_cast<int>(self.value.numel()), a, self.grad.data(),
                         self.parents[0]->ensure_grad().data());
    });
}

Var add_rowvec(const Var& x, const Var& v) {
    check_shape(x.val().ndim() == 2 && v.val().ndim() == 1 && x.dim(1) == v.dim(0),
                "add_rowvec: want [N,D] + [D]");
    const int rows = x.dim(0), cols = x.dim(1);
    Tensor y(x.shape());
    for (int r = 0; r < rows; ++r)
        K::active().vadd(cols, x.val().data() + static_cast<size_t>(r) * cols, v.val().data(),
                         y.data() + static_cast<size_t>(r) * cols);
    return make_node(std::move(y), {x.node(), v.node()}, [rows, cols](Node& self) {
        if (wants_grad(self.parents[0]))
            K::active().axpy(rows * cols, 1.0f, self.grad.data(),
                             self.parents[0]->ensure_grad().data());
        if (wants_grad(self.parents[1])) {
            float* dv = self.parents[1]->ensure_grad().data();
            for (int r = 0; r < rows; ++r)
                K::active().axpy(cols, 1.0f, self.grad.data() + static_cast<size_t>(r) * cols, dv);
        }
    });
}

Var mul_rowvec(const Var& x, const Var& v) {
    check_shape(x.val().ndim() == 2 && v.val().ndim() == 1 && x.dim(1) == v.dim(0),
                "mul_rowvec: want [N,D] * [D]");
    const int rows = x.dim(0), cols = x.dim(1);
    Tensor y(x.shape());
    for (int r = 0; r < rows; ++r)
        K::active().vmul(cols, x.val().data() + static_cast<size_t>(r) * cols, v.val().data(),
                         y.data() + static_cast<size_t>(r) * cols);
    return make_node(std::move(y), {x.node(), v.node()}, [rows, cols](Node& self) {
        const float* g = self.grad.data();
        if (wants_grad(self.parents[0])) {
            float* dx = self.parents[0]->ensure_grad().data();
            const float* vv = self.parents[1]->value.data();
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    dx[static_cast<size_t>(r) * cols + c] +=
                        g[static_cast<size_t>(r) * cols + c] * vv[c];
        }
        if (wants_grad(self.parents[1])) {
            float* dv = self.parents[1]->ensure_grad().data();
            const float* xv = self.parents[0]->value.data();
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    dv[c] += g[static_cast<size_t>(r) * cols + c] *
                             xv[static_cast<size_t>(r) * cols + c];
        }
    });
}

Var add_bcast0(const Var& a, const Var& b) {
    check_shape(a.val().ndim() == 3 && b.val().ndim() == 2 && a.dim(1) == b.dim(0) &&
                    a.dim(2) == b.dim(1),
                "add_bcast0: want [H,M,N] + [M,N]");
    const int h = a.dim(0);
    const int mn = a.dim(1) * a.dim(2);
    Tensor y(a.shape());
    for (int i = 0; i < h; ++i)
        K::active().vadd(mn, a.val().data() + static_cast<size_t>(i) * mn, b.val().data(),
                         y.data() + static_cast<size_t>(i) * mn);
    return make_node(std::move(y), {a.node(), b.node()}, [h, mn](Node& self) {
        if (wants_grad(self.parents[0]))
            K::active().axpy(h * mn, 1.0f, self.grad.data(),
                             self.parents[0]->ensure_grad().data());
        if (wants_grad(self.parents[1])) {
            float* db = self.parents[1]->ensure_grad().data();
            for (int i = 0; i < h; ++i)
                K::active().axpy(mn, 1.0f, self.grad.data() + static_cast<size_t>(i) * mn, db);
        }
    });
}

// ---------------------------------------------------------------------------
// Matmul family
// ---------------------------------------------------------------------------

namespace {

// d(stored A) and d(stored B) for C = op(A) op(B), G = dC.
void matmul_backward_into(bool ta, bool tb, int m, int n, int k, const float* A, int lda,
                          const float* B, int ldb, const float* G, float* dA, float* dB) {
    const auto& ops = K::active();
    if (dA) {
        if (!ta)
            ops.gemm(false, !tb, m, k, n, 1.0f, G, n, B, ldb, 1.0f, dA, k);
        else
            ops.gemm(tb, true, k, m, n, 1.0f, B, ldb, G, n, 1.0f, dA, m);
    }
    if (dB) {
        if (!tb)
            ops.gemm(!ta, false, k, n, m, 1.0f, A, lda, G, n, 1.0f, dB, n);
        else
            ops.gemm(true, ta, n, k, m, 1.0f, G, n, A, lda, 1.0f, dB, k);
    }
}

}  // namespace

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
    check_shape(a.val().ndim() == 2 && b.val().ndim() == 2, "matmul: want 2-D inputs");
    const int m = ta ? a.dim(1) : a.dim(0);
    const int k = ta ? a.dim(0) : a.dim(1);
    const int kb = tb ? b.dim(1) : b.dim(0);
    const int n = tb ? b.dim(0) : b.dim(1);
    check_shape(k == kb, "matmul: inner dimension mismatch");
    const int lda = a.dim(1), ldb = b.dim(1);
    Tensor y({m, n});
    K::active().gemm(ta, tb, m, n, k, 1.0f, a.val().data(), lda, b.val().data(), ldb, 0.0f,
                     y.data(), n);
    return make_node(std::move(y), {a.node(), b.node()}, [ta, tb, m, n, k, lda, ldb](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        matmul_backward_into(ta, tb, m, n, k, pa->value.data(), lda, pb->value.data(), ldb,
                             self.grad.data(), wants_grad(pa) ? pa->ensure_grad().data() : nullptr,
                             wants_grad(pb) ? pb->ensure_grad().data() : nullptr);
    });
}

Var bmm(const Var& a, const Var& b, bool tb) {
    check_shape(a.val().ndim() == 3 && b.val().ndim() == 3 && a.dim(0) == b.dim(0),
                "bmm: want [H,M,K] x [H,*,*]");
    const int h = a.dim(0), m = a.dim(1), k = a.dim(2);
    const int n = tb ? b.dim(1) : b.dim(2);
    check_shape(tb ? b.dim(2) == k : b.dim(1) == k, "bmm: inner dimension mismatch");
    const int ldb = b.dim(2);
    Tensor y({h, m, n});
    const size_t sa = static_cast<size_t>(m) * k, sb = static_cast<size_t>(b.dim(1)) * b.dim(2),
                 sy = static_cast<size_t>(m) * n;
    for (int i = 0; i < h; ++i)
        K::active().gemm(false, tb, m, n, k, 1.0f, a.val().data() + i * sa, k,
                         b.val().data() + i * sb, ldb, 0.0f, y.data() + i * sy, n);
    return make_node(std::move(y), {a.node(), b.node()},
                     [h, m, n, k, ldb, sa, sb, sy, tb](Node& self) {
                         auto& pa = self.parents[0];
                         auto& pb = self.parents[1];
                         float* dA = wants_grad(pa) ? pa->ensure_grad().data() : nullptr;
                         float* dB = wants_grad(pb) ? pb->ensure_grad().data() : nullptr;
                         for (int i = 0; i < h; ++i)
                             matmul_backward_into(false, tb, m, n, k, pa->value.data() + i * sa, k,
                                                  pb->value.data() + i * sb, ldb,
                                                  self.grad.data() + i * sy,
                                                  dA ? dA + i * sa : nullptr,
                                                  dB ? dB + i * sb : nullptr);
                     });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
    check_shape(x.val().ndim() == 2 && w.val().ndim() == 2 && x.dim(1) == w.dim(0),
                "linear: want [N,I] x [I,O]");
    check_shape(bias.val().ndim() == 1 && bias.dim(0) == w.dim(1), "linear: bias shape");
    const int rows = x.dim(0), in = x.dim(1), out = w.dim(1);
    Tensor y({rows, out});
    K::active().gemm(false, false, rows, out, in, 1.0f, x.val().data(), in, w.val().data(), out,
                     0.0f, y.data(), out);
    for (int r = 0; r < rows; ++r)
        K::active().axpy(out, 1.0f, bias.val().data(), y.data() + static_cast<size_t>(r) * out);
    return make_node(std::move(y), {x.node(), w.node(), bias.node()},
                     [rows, in, out](Node& self) {
                         auto& px = self.parents[0];
                         auto& pw = self.parents[1];
                         auto& pb = self.parents[2];
                         matmul_backward_into(
                             false, false, rows, out, in, px->value.data(), in, pw->value.data(),
                             out, self.grad.data(),
                             wants_grad(px) ? px->ensure_grad().data() : nullptr,
                             wants_grad(pw) ? pw->ensure_grad().data() : nullptr);
                         if (wants_grad(pb)) {
                             float* db = pb->ensure_grad().data();
                             for (int r = 0; r < rows; ++r)
                                 K::active().axpy(out, 1.0f,
                                                  self.grad.data() + static_cast<size_t>(r) * out,
                                                  db);
                         }
                     });
}

Var linear_nobias(const Var& x, const Var& w) { return matmul(x, w); }

// ---------------------------------------------------------------------------
// Nonlinearities / normalization
// ---------------------------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Var unary_kernel_op(const Var& x, Fwd fwd, Bwd bwd) {
    Tensor y(x.shape());
    const int n = static_cast<int>(y.numel());
    fwd(n, x.val().data(), y.data());
    return make_node(std::move(y), {x.node()}, [bwd](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        bwd(static_cast<int>(self.value.numel()), self.parents[0]->value.data(), self.grad.data(),
            self.parents[0]->ensure_grad().data());
    });
}

}  // namespace

Var gelu(const Var& x) {
    return unary_kernel_op(
        x, [](int n, const float* a, float* y) { K::active().gelu_fwd(n, a, y); },
        [](int n, const float* a, const float* dy, float* dx) {
            K::active().gelu_bwd(n, a, dy, dx);
        });
}

Var silu(const Var& x) {
    return unary_kernel_op(
        x, [](int n, const float* a, float* y) { K::active().silu_fwd(n, a, y); },
        [](int n, const float* a, const float* dy, float* dx) {
            K::active().silu_bwd(n, a, dy, dx);
        });
}

Var relu(const Var& x) {
    return unary_kernel_op(
        x, [](int n, const float* a, float* y) { K::active().relu_fwd(n, a, y); },
        [](int n, const float* a, const float* dy, float* dx) {
            K::active().relu_bwd(n, a, dy, dx);
        });
}

Var softmax_last(const Var& x) {
    check_shape(x.val().ndim() >= 1, "softmax_last: empty shape");
    const int cols = x.dim(-1);
    const int rows = static_cast<int>(x.numel() / cols);
    Tensor y(x.shape());
    K::active().softmax_rows(rows, cols, x.val().data(), y.data());
    return make_node(std::move(y), {x.node()}, [rows, cols](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        K::active().softmax_rows_bwd(rows, cols, self.value.data(), self.grad.data(),
                                     self.parents[0]->ensure_grad().data());
    });
}

namespace {

Var layer_norm_impl(const Var& x, const NodePtr& gamma, const NodePtr& beta, float eps) {
    check_shape(x.val().ndim() >= 1, "layer_norm: empty shape");
    const int cols = x.dim(-1);
    const int rows = static_cast<int>(x.numel() / cols);
    Tensor y(x.shape());
    auto mean = std::make_shared<Tensor>(std::vector<int>{rows});
    auto rstd = std::make_shared<Tensor>(std::vector<int>{rows});
    const float* g = gamma ? gamma->value.data() : nullptr;
    const float* b = beta ? beta->value.data() : nullptr;
    K::active().layernorm_fwd(rows, cols, x.val().data(), g, b, eps, y.data(), mean->data(),
                              rstd->data());
    std::vector<NodePtr> parents{x.node()};
    if (gamma) parents.push_back(gamma);
    if (beta) parents.push_back(beta);
    const bool affine = gamma != nullptr;
    return make_node(std::move(y), std::move(parents), [rows, cols, mean, rstd, affine](Node& self) {
        auto& px = self.parents[0];
        NodePtr pg = affine ? self.parents[1] : nullptr;
        NodePtr pb = affine ? self.parents[2] : nullptr;
        float* dgamma = (pg && wants_grad(pg)) ? pg->ensure_grad().data() : nullptr;
        float* dbeta = (pb && wants_grad(pb)) ? pb->ensure_grad().data() : nullptr;
        // dgamma/dbeta are cheap; dx only if someone wants it.
        Tensor scratch;
        float* dx = nullptr;
        if (wants_grad(px)) {
            dx = px->ensure_grad().data();
        } else {
            scratch = Tensor(px->value.shape());
            dx = scratch.data();
        }
        K::active().layernorm_bwd(rows, cols, px->value.data(),
                                  pg ? pg->value.data() : nullptr, mean->data(), rstd->data(),
                                  self.grad.data(), dx, dgamma, dbeta);
    });
}

}  // namespace

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
    check_shape(gamma.val().ndim() == 1 && gamma.dim(0) == x.dim(-1), "layer_norm: gamma shape");
    check_shape(beta.val().ndim() == 1 && beta.dim(0) == x.dim(-1), "layer_norm: beta shape");
    return layer_norm_impl(x, gamma.node(), beta.node(), eps);
}

Var layer_norm_plain(const Var& x, float eps) { return layer_norm_impl(x, nullptr, nullptr, eps); }

Var l2_normalize_rows(const Var& x, float eps) {
    check_shape(x.val().ndim() == 2, "l2_normalize_rows: want [N,D]");
    const int rows = x.dim(0), cols = x.dim(1);
    Tensor y(x.shape());
    auto norms = std::make_shared<Tensor>(std::vector<int>{rows});
    for (int r = 0; r < rows; ++r) {
        const float* xr = x.val().data() + static_cast<size_t>(r) * cols;
        const float nrm =
            std::sqrt(static_cast<float>(K::active().sumsq(cols, xr)) + eps);
        norms->at(r) = nrm;
        float* yr = y.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) yr[c] = xr[c] / nrm;
    }
    return make_node(std::move(y), {x.node()}, [rows, cols, norms](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        const float* xv = self.parents[0]->value.data();
        const float* g = self.grad.data();
        float* dx = self.parents[0]->ensure_grad().data();
        for (int r = 0; r < rows; ++r) {
            const size_t off = static_cast<size_t>(r) * cols;
            const float nrm = norms->at(r);
            const float s = K::active().dot(cols, g + off, xv + off);
            const float inv = 1.0f / nrm;
            const float inv3 = inv * inv * inv;
            for (int c = 0; c < cols; ++c)
                dx[off + c] += g[off + c] * inv - xv[off + c] * s * inv3;
        }
    });
}

// ---------------------------------------------------------------------------
// Shape plumbing
// ---------------------------------------------------------------------------

Var reshape(const Var& x, std::vector<int> shape) {
    check_shape(shape_numel(shape) == x.numel(), "reshape: element count mismatch");
    Tensor y(std::move(shape), x.val().vec());
    return make_node(std::move(y), {x.node()}, [](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        K::active().axpy(static_cast<int>(self.value.numel()), 1.0f, self.grad.data(),
                         self.parents[0]->ensure_grad().data());
    });
}

Var split_heads(const Var& x, int heads) {
    check_shape(x.val().ndim() == 2 && x.dim(1) % heads == 0, "split_heads: [T,H*dh] expected");
    const int t = x.dim(0), dh = x.dim(1) / heads;
    Tensor y({heads, t, dh});
    for (int h = 0; h < heads; ++h)
        for (int i = 0; i < t; ++i)
            std::memcpy(y.data() + (static_cast<size_t>(h) * t + i) * dh,
                        x.val().data() + static_cast<size_t>(i) * heads * dh +
                            static_cast<size_t>(h) * dh,
                        sizeof(float) * dh);
    return make_node(std::move(y), {x.node()}, [heads, t, dh](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        for (int h = 0; h < heads; ++h)
            for (int i = 0; i < t; ++i) {
                const float* src = g + (static_cast<size_t>(h) * t + i) * dh;
                float* dst = dx + static_cast<size_t>(i) * heads * dh + static_cast<size_t>(h) * dh;
                for (int c = 0; c < dh; ++c) dst[c] += src[c];
            }
    });
}

Var merge_heads(const Var& x) {
    check_shape(x.val().ndim() == 3, "merge_heads: [H,T,dh] expected");
    const int heads = x.dim(0), t = x.dim(1), dh = x.dim(2);
    Tensor y({t, heads * dh});
    for (int h = 0; h < heads; ++h)
        for (int i = 0; i < t; ++i)
            std::memcpy(y.data() + static_cast<size_t>(i) * heads * dh + static_cast<size_t>(h) * dh,
                        x.val().data() + (static_cast<size_t>(h) * t + i) * dh, sizeof(float) * dh);
    return make_node(std::move(y), {x.node()}, [heads, t, dh](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        for (int h = 0; h < heads; ++h)
            for (int i = 0; i < t; ++i) {
                const float* src =
                    g + static_cast<size_t>(i) * heads * dh + static_cast<size_t>(h) * dh;
                float* dst = dx + (static_cast<size_t>(h) * t + i) * dh;
                for (int c = 0; c < dh; ++c) dst[c] += src[c];
            }
    });
}

Var concat_rows(const Var& a, const Var& b) {
    check_shape(a.val().ndim() == 2 && b.val().ndim() == 2 && a.dim(1) == b.dim(1),
                "concat_rows: column mismatch");
    const int na = a.dim(0), nb = b.dim(0), d = a.dim(1);
    Tensor y({na + nb, d});
    std::memcpy(y.data(), a.val().data(), sizeof(float) * na * d);
    std::memcpy(y.data() + static_cast<size_t>(na) * d, b.val().data(), sizeof(float) * nb * d);
    return make_node(std::move(y), {a.node(), b.node()}, [na, nb, d](Node& self) {
        if (wants_grad(self.parents[0]))
            K::active().axpy(na * d, 1.0f, self.grad.data(),
                             self.parents[0]->ensure_grad().data());
        if (wants_grad(self.parents[1]))
            K::active().axpy(nb * d, 1.0f, self.grad.data() + static_cast<size_t>(na) * d,
                             self.parents[1]->ensure_grad().data());
    });
}

Var stack_rows(const std::vector<Var>& rows) {
    check_shape(!rows.empty(), "stack_rows: empty input");
    const int d = static_cast<int>(rows[0].numel());
    const int n = static_cast<int>(rows.size());
    Tensor y({n, d});
    std::vector<NodePtr> parents;
    parents.reserve(rows.size());
    for (int i = 0; i < n; ++i) {
        check_shape(rows[static_cast<size_t>(i)].numel() == d, "stack_rows: length mismatch");
        std::memcpy(y.data() + static_cast<size_t>(i) * d,
                    rows[static_cast<size_t>(i)].val().data(), sizeof(float) * d);
        parents.push_back(rows[static_cast<size_t>(i)].node());
    }
    return make_node(std::move(y), std::move(parents), [d](Node& self) {
        for (size_t i = 0; i < self.parents.size(); ++i)
            if (wants_grad(self.parents[i]))
                K::active().axpy(d, 1.0f, self.grad.data() + i * d,
                                 self.parents[i]->ensure_grad().data());
    });
}

Var slice_rows(const Var& x, int begin, int end) {
    check_shape(x.val().ndim() == 2 && begin >= 0 && end <= x.dim(0) && begin < end,
                "slice_rows: bad range");
    const int d = x.dim(1), n = end - begin;
    Tensor y({n, d});
    std::memcpy(y.data(), x.val().data() + static_cast<size_t>(begin) * d, sizeof(float) * n * d);
    return make_node(std::move(y), {x.node()}, [begin, n, d](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        K::active().axpy(n * d, 1.0f, self.grad.data(),
                         self.parents[0]->ensure_grad().data() + static_cast<size_t>(begin) * d);
    });
}

Var mean_rows(const Var& x) {
    check_shape(x.val().ndim() == 2, "mean_rows: want [N,D]");
    const int rows = x.dim(0), cols = x.dim(1);
    Tensor y({cols});
    for (int r = 0; r < rows; ++r)
        K::active().axpy(cols, 1.0f / rows, x.val().data() + static_cast<size_t>(r) * cols,
                         y.data());
    return make_node(std::move(y), {x.node()}, [rows, cols](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        for (int r = 0; r < rows; ++r)
            K::active().axpy(cols, 1.0f / rows, self.grad.data(),
                             dx + static_cast<size_t>(r) * cols);
    });
}

Var detach(const Var& x) { return Var::constant(x.val()); }

Var embedding(const Var& table, const std::vector<int>& ids) {
    check_shape(table.val().ndim() == 2, "embedding: table must be [V,D]");
    const int v = table.dim(0), d = table.dim(1);
    Tensor y({static_cast<int>(ids.size()), d});
    for (size_t i = 0; i < ids.size(); ++i) {
        check_shape(ids[i] >= 0 && ids[i] < v, "embedding: id out of range");
        std::memcpy(y.data() + i * d, table.val().data() + static_cast<size_t>(ids[i]) * d,
                    sizeof(float) * d);
    }
    return make_node(std::move(y), {table.node()}, [ids, d](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dt = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        for (size_t i = 0; i < ids.size(); ++i)
            K::active().axpy(d, 1.0f, g + i * d, dt + static_cast<size_t>(ids[i]) * d);
    });
}

// ---------------------------------------------------------------------------
// Image / patch ops
// ---------------------------------------------------------------------------

Var patchify(const Var& img, int patch) {
    check_shape(img.val().ndim() == 3, "patchify: want [C,H,W]");
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    check_shape(h % patch == 0 && w % patch == 0, "patchify: size not divisible by patch");
    const int gh = h / patch, gw = w / patch;
    Tensor y({gh * gw, patch * patch * c});
    const float* x = img.val().data();
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            float* row = y.data() + (static_cast<size_t>(gy) * gw + gx) * patch * patch * c;
            for (int ch = 0; ch < c; ++ch)
                for (int py = 0; py < patch; ++py)
                    for (int px = 0; px < patch; ++px)
                        row[ch * patch * patch + py * patch + px] =
                            x[(static_cast<size_t>(ch) * h + gy * patch + py) * w + gx * patch +
                              px];
        }
    return make_node(std::move(y), {img.node()}, [c, h, w, patch](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        const int gh = h / patch, gw = w / patch;
        for (int gy = 0; gy < gh; ++gy)
            for (int gx = 0; gx < gw; ++gx) {
                const float* row = g + (static_cast<size_t>(gy) * gw + gx) * patch * patch * c;
                for (int ch = 0; ch < c; ++ch)
                    for (int py = 0; py < patch; ++py)
                        for (int px = 0; px < patch; ++px)
                            dx[(static_cast<size_t>(ch) * h + gy * patch + py) * w + gx * patch +
                               px] += row[ch * patch * patch + py * patch + px];
            }
    });
}

Var unpatchify(const Var& x, int patch, int c, int h, int w) {
    const int gh = h / patch, gw = w / patch;
    check_shape(x.val().ndim() == 2 && x.dim(0) == gh * gw && x.dim(1) == patch * patch * c,
                "unpatchify: geometry mismatch");
    Tensor y({c, h, w});
    const float* xv = x.val().data();
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            const float* row = xv + (static_cast<size_t>(gy) * gw + gx) * patch * patch * c;
            for (int ch = 0; ch < c; ++ch)
                for (int py = 0; py < patch; ++py)
                    for (int px = 0; px < patch; ++px)
                        y.data()[(static_cast<size_t>(ch) * h + gy * patch + py) * w + gx * patch +
                                 px] = row[ch * patch * patch + py * patch + px];
        }
    return make_node(std::move(y), {x.node()}, [c, h, w, patch](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        const int gh = h / patch, gw = w / patch;
        for (int gy = 0; gy < gh; ++gy)
            for (int gx = 0; gx < gw; ++gx) {
                float* row = dx + (static_cast<size_t>(gy) * gw + gx) * patch * patch * c;
                for (int ch = 0; ch < c; ++ch)
                    for (int py = 0; py < patch; ++py)
                        for (int px = 0; px < patch; ++px)
                            row[ch * patch * patch + py * patch + px] +=
                                g[(static_cast<size_t>(ch) * h + gy * patch + py) * w + gx * patch +
                                  px];
            }
    });
}

Var im2col3x3(const Var& x) {
    check_shape(x.val().ndim() == 4, "im2col3x3: want [B,C,H,W]");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor y({b * h * w, 9 * c});
    const float* xv = x.val().data();
    for (int bi = 0; bi < b; ++bi)
        for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < w; ++xx) {
                float* row =
                    y.data() + ((static_cast<size_t>(bi) * h + yy) * w + xx) * 9 * c;
                for (int ch = 0; ch < c; ++ch)
                    for (int ky = -1; ky <= 1; ++ky)
                        for (int kx = -1; kx <= 1; ++kx) {
                            const int sy = yy + ky, sx = xx + kx;
                            float v = 0.0f;
                            if (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                v = xv[((static_cast<size_t>(bi) * c + ch) * h + sy) * w + sx];
                            row[ch * 9 + (ky + 1) * 3 + (kx + 1)] = v;
                        }
            }
    return make_node(std::move(y), {x.node()}, [b, c, h, w](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        for (int bi = 0; bi < b; ++bi)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    const float* row =
                        g + ((static_cast<size_t>(bi) * h + yy) * w + xx) * 9 * c;
                    for (int ch = 0; ch < c; ++ch)
                        for (int ky = -1; ky <= 1; ++ky)
                            for (int kx = -1; kx <= 1; ++kx) {
                                const int sy = yy + ky, sx = xx + kx;
                                if (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                    dx[((static_cast<size_t>(bi) * c + ch) * h + sy) * w + sx] +=
                                        row[ch * 9 + (ky + 1) * 3 + (kx + 1)];
                            }
                }
    });
}

Var to_chw(const Var& x, int b, int c, int h, int w) {
    check_shape(x.val().ndim() == 2 && x.dim(0) == b * h * w && x.dim(1) == c,
                "to_chw: geometry mismatch");
    Tensor y({b, c, h, w});
    const float* xv = x.val().data();
    for (int bi = 0; bi < b; ++bi)
        for (int yy = 0; yy < h; ++yy)
            for (int xx = 0; xx < w; ++xx) {
                const float* row = xv + ((static_cast<size_t>(bi) * h + yy) * w + xx) * c;
                for (int ch = 0; ch < c; ++ch)
                    y.data()[((static_cast<size_t>(bi) * c + ch) * h + yy) * w + xx] = row[ch];
            }
    return make_node(std::move(y), {x.node()}, [b, c, h, w](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        for (int bi = 0; bi < b; ++bi)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    float* row = dx + ((static_cast<size_t>(bi) * h + yy) * w + xx) * c;
                    for (int ch = 0; ch < c; ++ch)
                        row[ch] += g[((static_cast<size_t>(bi) * c + ch) * h + yy) * w + xx];
                }
    });
}

Var maxpool2(const Var& x) {
    check_shape(x.val().ndim() == 4 && x.dim(2) % 2 == 0 && x.dim(3) % 2 == 0,
                "maxpool2: want [B,C,H,W] with even H,W");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h / 2, ow = w / 2;
    Tensor y({b, c, oh, ow});
    auto argmax = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(b) * c * oh * ow);
    const float* xv = x.val().data();
    for (int bc = 0; bc < b * c; ++bc) {
        const float* plane = xv + static_cast<size_t>(bc) * h * w;
        float* out = y.data() + static_cast<size_t>(bc) * oh * ow;
        int32_t* am = argmax->data() + static_cast<size_t>(bc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                int best = (2 * oy) * w + 2 * ox;
                float bv = plane[best];
                const int cand[3] = {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox,
                                     (2 * oy + 1) * w + 2 * ox + 1};
                for (int idx : cand)
                    if (plane[idx] > bv) {
                        bv = plane[idx];
                        best = idx;
                    }
                out[oy * ow + ox] = bv;
                am[oy * ow + ox] = best;
            }
    }
    return make_node(std::move(y), {x.node()}, [b, c, h, w, oh, ow, argmax](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        float* dx = self.parents[0]->ensure_grad().data();
        const float* g = self.grad.data();
        for (int bc = 0; bc < b * c; ++bc) {
            float* plane = dx + static_cast<size_t>(bc) * h * w;
            const float* go = g + static_cast<size_t>(bc) * oh * ow;
            const int32_t* am = argmax->data() + static_cast<size_t>(bc) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) plane[am[i]] += go[i];
        }
    });
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Var mse_loss(const Var& pred, const Var& target) {
    check_shape(pred.val().same_shape(target.val()), "mse_loss: shape mismatch");
    const int n = static_cast<int>(pred.numel());
    double acc = 0.0;
    const float* a = pred.val().data();
    const float* b = target.val().data();
    for (int i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    Tensor y({1}, static_cast<float>(acc / n));
    return make_node(std::move(y), {pred.node(), target.node()}, [n](Node& self) {
        const float g = self.grad.at(0) * 2.0f / n;
        const float* a = self.parents[0]->value.data();
        const float* b = self.parents[1]->value.data();
        if (wants_grad(self.parents[0])) {
            float* da = self.parents[0]->ensure_grad().data();
            for (int i = 0; i < n; ++i) da[i] += g * (a[i] - b[i]);
        }
        if (wants_grad(self.parents[1])) {
            float* db = self.parents[1]->ensure_grad().data();
            for (int i = 0; i < n; ++i) db[i] -= g * (a[i] - b[i]);
        }
    });
}

Var l1_mean(const Var& x) {
    const int n = static_cast<int>(x.numel());
    double acc = 0.0;
    const float* xv = x.val().data();
    for (int i = 0; i < n; ++i) acc += std::fabs(xv[i]);
    Tensor y({1}, static_cast<float>(acc / n));
    return make_node(std::move(y), {x.node()}, [n](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        const float g = self.grad.at(0) / n;
        const float* xv = self.parents[0]->value.data();
        float* dx = self.parents[0]->ensure_grad().data();
        for (int i = 0; i < n; ++i) dx[i] += xv[i] > 0.0f ? g : (xv[i] < 0.0f ? -g : 0.0f);
    });
}

Var mean_all(const Var& x) {
    const int n = static_cast<int>(x.numel());
    Tensor y({1}, static_cast<float>(K::active().sum(n, x.val().data()) / n));
    return make_node(std::move(y), {x.node()}, [n](Node& self) {
        if (!wants_grad(self.parents[0])) return;
        const float g = self.grad.at(0) / n;
        float* dx = self.parents[0]->ensure_grad().data();
        for (int i = 0; i < n; ++i) dx[i] += g;
    });
}

Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets, int ignore_index) {
    check_shape(logits.val().ndim() == 2, "cross_entropy_rows: want [N,V]");
    const int rows = logits.dim(0), cols = logits.dim(1);
    check_shape(static_cast<int>(targets.size()) == rows, "cross_entropy_rows: target count");
    auto probs = std::make_shared<Tensor>(logits.val().shape());
    K::active().softmax_rows(rows, cols, logits.val().data(), probs->data());
    double acc = 0.0;
    int counted = 0;
    for (int r = 0; r < rows; ++r) {
        if (targets[r] == ignore_index) continue;
        check_shape(targets[r] >= 0 && targets[r] < cols, "cross_entropy_rows: target range");
        acc -= std::log(std::max(1e-12, static_cast<double>(
                                            probs->at(static_cast<size_t>(r) * cols + targets[r]))));
        ++counted;
    }
    check_shape(counted > 0, "cross_entropy_rows: all rows ignored");
    Tensor y({1}, static_cast<float>(acc / counted));
    return make_node(std::move(y), {logits.node()},
                     [rows, cols, probs, targets, ignore_index, counted](Node& self) {
                         if (!wants_grad(self.parents[0])) return;
                         const float g = self.grad.at(0) / counted;
                         float* dl = self.parents[0]->ensure_grad().data();
                         const float* p = probs->data();
                         for (int r = 0; r < rows; ++r) {
                             if (targets[r] == ignore_index) continue;
                             const size_t off = static_cast<size_t>(r) * cols;
                             for (int c2 = 0; c2 < cols; ++c2) dl[off + c2] += g * p[off + c2];
                             dl[off + targets[r]] -= g;
                         }
                     });
}

}  // namespace fq::nn
