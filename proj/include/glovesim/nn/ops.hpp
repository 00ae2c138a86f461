#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "glovesim/nn/tensor.hpp"

namespace glovesim::nn {
namespace detail {

// Result-node factory. Parents and closures are only attached while the
// recording switch is on, so evaluation-mode graphs stay flat and freeable.
template <typename T>
std::shared_ptr<TensorNode<T>> make_result(std::initializer_list<int> dims,
                                           std::initializer_list<std::shared_ptr<TensorNode<T>>> parents) {
    auto n = std::make_shared<TensorNode<T>>();
    n->rank = static_cast<int>(dims.size());
    int i = 0;
    std::size_t sz = 1;
    for (int d : dims) {
        if (d <= 0) throw shape_error("op result dimension must be positive");
        n->dims[static_cast<std::size_t>(i++)] = d;
        sz *= static_cast<std::size_t>(d);
    }
    n->val.assign(sz, T(0));
    if (grad_enabled()) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || p->requires_grad;
        if (needs) {
            n->requires_grad = true;
            n->parents = parents;
        }
    }
    return n;
}

// C(m x n) += A(m x k) . B(k x n)
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const T a = A[i * k + p];
            const T* brow = B + p * n;
            T* crow = C + i * n;
            for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

// C(m x n) += A(m x k) . B(n x k)^T
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            const T* arow = A + i * k;
            const T* brow = B + j * k;
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            C[i * n + j] += acc;
        }
    }
}

// C(m x n) += A(k x m)^T . B(k x n)
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const T* arow = A + p * m;
        const T* brow = B + p * n;
        for (int i = 0; i < m; ++i) {
            const T a = arow[i];
            T* crow = C + i * n;
            for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

}  // namespace detail

// y = a + b. Shapes must match, except that b may have leading dimension 1
// (one slice broadcast across a's leading dimension), which is how the
// positional embedding joins the batch.
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    const bool same = a.rank() == b.rank() && a.dim(0) == b.dim(0) &&
                      (a.rank() < 2 || a.dim(1) == b.dim(1)) &&
                      (a.rank() < 3 || a.dim(2) == b.dim(2));
    const bool bcast = !same && a.rank() == b.rank() && b.dim(0) == 1 &&
                       (a.rank() < 2 || a.dim(1) == b.dim(1)) &&
                       (a.rank() < 3 || a.dim(2) == b.dim(2));
    if (!same && !bcast) throw shape_error("add: incompatible shapes");

    auto n = a.rank() == 1   ? detail::make_result<T>({a.dim(0)}, {a.node(), b.node()})
             : a.rank() == 2 ? detail::make_result<T>({a.dim(0), a.dim(1)}, {a.node(), b.node()})
                             : detail::make_result<T>({a.dim(0), a.dim(1), a.dim(2)}, {a.node(), b.node()});
    const std::size_t slice = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        n->val[i] = a.data()[i] + b.data()[same ? i : i % slice];
    }
    check_finite(*n, "add");
    if (n->requires_grad) {
        auto ap = a.node();
        auto bp = b.node();
        auto* out = n.get();
        n->backward_fn = [ap, bp, out, same, slice]() {
            if (ap->requires_grad) {
                ap->ensure_grad();
                for (std::size_t i = 0; i < out->grad.size(); ++i) ap->grad[i] += out->grad[i];
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                for (std::size_t i = 0; i < out->grad.size(); ++i) {
                    bp->grad[same ? i : i % slice] += out->grad[i];
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T c) {
    auto n = x.rank() == 1   ? detail::make_result<T>({x.dim(0)}, {x.node()})
             : x.rank() == 2 ? detail::make_result<T>({x.dim(0), x.dim(1)}, {x.node()})
                             : detail::make_result<T>({x.dim(0), x.dim(1), x.dim(2)}, {x.node()});
    for (std::size_t i = 0; i < x.size(); ++i) n->val[i] = c * x.data()[i];
    check_finite(*n, "scale");
    if (n->requires_grad) {
        auto xp = x.node();
        auto* out = n.get();
        n->backward_fn = [xp, out, c]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) xp->grad[i] += c * out->grad[i];
        };
    }
    return BasicTensor<T>(n);
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
    auto n = x.rank() == 1   ? detail::make_result<T>({x.dim(0)}, {x.node()})
             : x.rank() == 2 ? detail::make_result<T>({x.dim(0), x.dim(1)}, {x.node()})
                             : detail::make_result<T>({x.dim(0), x.dim(1), x.dim(2)}, {x.node()});
    for (std::size_t i = 0; i < x.size(); ++i) n->val[i] = std::max(x.data()[i], T(0));
    if (n->requires_grad) {
        auto xp = x.node();
        auto* out = n.get();
        n->backward_fn = [xp, out]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                if (xp->val[i] > T(0)) xp->grad[i] += out->grad[i];
            }
        };
    }
    return BasicTensor<T>(n);
}

// Inverted dropout: kept activations are scaled by 1/(1-rate) during
// training so evaluation needs no rescale; evaluation mode is the identity.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw param_error("dropout rate must be in [0, 1)");
    if (!training || rate == 0.0) return x;
    auto n = x.rank() == 1   ? detail::make_result<T>({x.dim(0)}, {x.node()})
             : x.rank() == 2 ? detail::make_result<T>({x.dim(0), x.dim(1)}, {x.node()})
                             : detail::make_result<T>({x.dim(0), x.dim(1), x.dim(2)}, {x.node()});
    const T keep_scale = T(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<T>>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        (*mask)[i] = rng.uniform() < rate ? T(0) : keep_scale;
        n->val[i] = x.data()[i] * (*mask)[i];
    }
    check_finite(*n, "dropout");
    if (n->requires_grad) {
        auto xp = x.node();
        auto* out = n.get();
        n->backward_fn = [xp, out, mask]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) xp->grad[i] += out->grad[i] * (*mask)[i];
        };
    }
    return BasicTensor<T>(n);
}

// y = x . W + b with W stored (in, out). Rank-2 x is (rows, in); rank-3 x is
// (batch, steps, in) and is treated as (batch*steps) rows.
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
    if (x.rank() < 2 || w.rank() != 2 || b.rank() != 1) throw shape_error("linear: bad ranks");
    const int in = w.dim(0);
    const int out_dim = w.dim(1);
    const int feat = x.rank() == 2 ? x.dim(1) : x.dim(2);
    if (feat != in || b.dim(0) != out_dim) throw shape_error("linear: feature size mismatch");
    const int rows = x.rank() == 2 ? x.dim(0) : x.dim(0) * x.dim(1);

    auto n = x.rank() == 2 ? detail::make_result<T>({x.dim(0), out_dim}, {x.node(), w.node(), b.node()})
                           : detail::make_result<T>({x.dim(0), x.dim(1), out_dim}, {x.node(), w.node(), b.node()});
    detail::gemm_nn(x.data(), w.data(), n->val.data(), rows, in, out_dim);
    for (int r = 0; r < rows; ++r) {
        T* row = n->val.data() + std::size_t(r) * out_dim;
        for (int j = 0; j < out_dim; ++j) row[j] += b.data()[j];
    }
    check_finite(*n, "linear");
    if (n->requires_grad) {
        auto xp = x.node();
        auto wp = w.node();
        auto bp = b.node();
        auto* o = n.get();
        n->backward_fn = [xp, wp, bp, o, rows, in, out_dim]() {
            const T* g = o->grad.data();
            if (xp->requires_grad) {
                xp->ensure_grad();
                detail::gemm_nt(g, wp->val.data(), xp->grad.data(), rows, out_dim, in);
            }
            if (wp->requires_grad) {
                wp->ensure_grad();
                detail::gemm_tn(xp->val.data(), g, wp->grad.data(), in, rows, out_dim);
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                for (int r = 0; r < rows; ++r) {
                    const T* grow = g + std::size_t(r) * out_dim;
                    for (int j = 0; j < out_dim; ++j) bp->grad[std::size_t(j)] += grow[j];
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Valid (no padding) 1-D convolution. x is (batch, c_in, length), kernel is
// (c_out, c_in, k), bias is (c_out); output length is length - k + 1.
template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& kernel, const BasicTensor<T>& bias) {
    if (x.rank() != 3 || kernel.rank() != 3 || bias.rank() != 1) throw shape_error("conv1d: bad ranks");
    const int batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const int cout = kernel.dim(0), k = kernel.dim(2);
    if (kernel.dim(1) != cin || bias.dim(0) != cout) throw shape_error("conv1d: channel mismatch");
    if (len < k) throw shape_error("conv1d: input shorter than kernel");
    const int lout = len - k + 1;

    auto n = detail::make_result<T>({batch, cout, lout}, {x.node(), kernel.node(), bias.node()});
    for (int bi = 0; bi < batch; ++bi) {
        for (int co = 0; co < cout; ++co) {
            T* orow = n->val.data() + (std::size_t(bi) * cout + co) * lout;
            for (int t = 0; t < lout; ++t) orow[t] = bias.data()[co];
            for (int ci = 0; ci < cin; ++ci) {
                const T* xrow = x.data() + (std::size_t(bi) * cin + ci) * len;
                const T* krow = kernel.data() + (std::size_t(co) * cin + ci) * k;
                for (int dk = 0; dk < k; ++dk) {
                    const T kv = krow[dk];
                    for (int t = 0; t < lout; ++t) orow[t] += kv * xrow[t + dk];
                }
            }
        }
    }
    check_finite(*n, "conv1d");
    if (n->requires_grad) {
        auto xp = x.node();
        auto kp = kernel.node();
        auto bp = bias.node();
        auto* o = n.get();
        n->backward_fn = [xp, kp, bp, o, batch, cin, len, cout, k, lout]() {
            const T* g = o->grad.data();
            if (bp->requires_grad) bp->ensure_grad();
            if (kp->requires_grad) kp->ensure_grad();
            if (xp->requires_grad) xp->ensure_grad();
            for (int bi = 0; bi < batch; ++bi) {
                for (int co = 0; co < cout; ++co) {
                    const T* grow = g + (std::size_t(bi) * cout + co) * lout;
                    if (bp->requires_grad) {
                        T acc = T(0);
                        for (int t = 0; t < lout; ++t) acc += grow[t];
                        bp->grad[std::size_t(co)] += acc;
                    }
                    for (int ci = 0; ci < cin; ++ci) {
                        const T* xrow = xp->val.data() + (std::size_t(bi) * cin + ci) * len;
                        const T* krow = kp->val.data() + (std::size_t(co) * cin + ci) * k;
                        T* xg = xp->requires_grad ? xp->grad.data() + (std::size_t(bi) * cin + ci) * len : nullptr;
                        T* kg = kp->requires_grad ? kp->grad.data() + (std::size_t(co) * cin + ci) * k : nullptr;
                        for (int dk = 0; dk < k; ++dk) {
                            T kacc = T(0);
                            for (int t = 0; t < lout; ++t) {
                                if (xg) xg[t + dk] += krow[dk] * grow[t];
                                kacc += grow[t] * xrow[t + dk];
                            }
                            if (kg) kg[dk] += kacc;
                        }
                    }
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Softmax over the last dimension, max-subtracted for stability.
template <typename T>
BasicTensor<T> softmax_lastdim(const BasicTensor<T>& x) {
    if (x.rank() < 2) throw shape_error("softmax_lastdim: rank must be 2 or 3");
    const int cols = x.dim(x.rank() - 1);
    const int rows = static_cast<int>(x.size()) / cols;
    auto n = x.rank() == 2 ? detail::make_result<T>({x.dim(0), x.dim(1)}, {x.node()})
                           : detail::make_result<T>({x.dim(0), x.dim(1), x.dim(2)}, {x.node()});
    for (int r = 0; r < rows; ++r) {
        const T* xin = x.data() + std::size_t(r) * cols;
        T* out = n->val.data() + std::size_t(r) * cols;
        T m = xin[0];
        for (int j = 1; j < cols; ++j) m = std::max(m, xin[j]);
        double sum = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double e = std::exp(double(xin[j] - m));
            out[j] = T(e);
            sum += e;
        }
        const T inv = T(1.0 / sum);
        for (int j = 0; j < cols; ++j) out[j] *= inv;
    }
    check_finite(*n, "softmax_lastdim");
    if (n->requires_grad) {
        auto xp = x.node();
        auto* o = n.get();
        n->backward_fn = [xp, o, rows, cols]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (int r = 0; r < rows; ++r) {
                const T* y = o->val.data() + std::size_t(r) * cols;
                const T* g = o->grad.data() + std::size_t(r) * cols;
                T* xg = xp->grad.data() + std::size_t(r) * cols;
                double dot = 0.0;
                for (int j = 0; j < cols; ++j) dot += double(g[j]) * double(y[j]);
                for (int j = 0; j < cols; ++j) xg[j] += y[j] * (g[j] - T(dot));
            }
        };
    }
    return BasicTensor<T>(n);
}

// Layer normalization over the last dimension with a learned affine pair.
// Row statistics accumulate in double so float activations do not lose the
// mean/variance invariant.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          double eps = 1e-5) {
    if (x.rank() < 2 || gamma.rank() != 1 || beta.rank() != 1) throw shape_error("layer_norm: bad ranks");
    const int d = x.dim(x.rank() - 1);
    if (gamma.dim(0) != d || beta.dim(0) != d) throw shape_error("layer_norm: affine size mismatch");
    const int rows = static_cast<int>(x.size()) / d;

    auto n = x.rank() == 2
                 ? detail::make_result<T>({x.dim(0), x.dim(1)}, {x.node(), gamma.node(), beta.node()})
                 : detail::make_result<T>({x.dim(0), x.dim(1), x.dim(2)}, {x.node(), gamma.node(), beta.node()});
    auto xhat = std::make_shared<std::vector<T>>(x.size());
    auto inv_sd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        const T* xin = x.data() + std::size_t(r) * d;
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += double(xin[j]);
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = double(xin[j]) - mean;
            var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_sd)[std::size_t(r)] = T(inv);
        T* h = xhat->data() + std::size_t(r) * d;
        T* out = n->val.data() + std::size_t(r) * d;
        for (int j = 0; j < d; ++j) {
            h[j] = T((double(xin[j]) - mean) * inv);
            out[j] = gamma.data()[j] * h[j] + beta.data()[j];
        }
    }
    check_finite(*n, "layer_norm");
    if (n->requires_grad) {
        auto xp = x.node();
        auto gp = gamma.node();
        auto bp = beta.node();
        auto* o = n.get();
        n->backward_fn = [xp, gp, bp, o, rows, d, xhat, inv_sd]() {
            if (gp->requires_grad) gp->ensure_grad();
            if (bp->requires_grad) bp->ensure_grad();
            if (xp->requires_grad) xp->ensure_grad();
            for (int r = 0; r < rows; ++r) {
                const T* g = o->grad.data() + std::size_t(r) * d;
                const T* h = xhat->data() + std::size_t(r) * d;
                if (gp->requires_grad || bp->requires_grad) {
                    for (int j = 0; j < d; ++j) {
                        if (gp->requires_grad) gp->grad[std::size_t(j)] += g[j] * h[j];
                        if (bp->requires_grad) bp->grad[std::size_t(j)] += g[j];
                    }
                }
                if (xp->requires_grad) {
                    // dL/dx = inv_sd/d * (d*gh - sum(gh) - xhat*sum(gh*xhat))
                    // where gh = g*gamma.
                    double sum_gh = 0.0, sum_ghh = 0.0;
                    for (int j = 0; j < d; ++j) {
                        const double gh = double(g[j]) * double(gp->val[std::size_t(j)]);
                        sum_gh += gh;
                        sum_ghh += gh * double(h[j]);
                    }
                    T* xg = xp->grad.data() + std::size_t(r) * d;
                    const double inv = double((*inv_sd)[std::size_t(r)]);
                    for (int j = 0; j < d; ++j) {
                        const double gh = double(g[j]) * double(gp->val[std::size_t(j)]);
                        xg[j] += T(inv / d * (d * gh - sum_gh - double(h[j]) * sum_ghh));
                    }
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Per-batch matmul: (B, m, k) . (B, k, n) -> (B, m, n).
template <typename T>
BasicTensor<T> batched_matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
        throw shape_error("batched_matmul: incompatible shapes");
    }
    const int nb = a.dim(0), m = a.dim(1), k = a.dim(2), nn = b.dim(2);
    auto n = detail::make_result<T>({nb, m, nn}, {a.node(), b.node()});
    for (int bi = 0; bi < nb; ++bi) {
        detail::gemm_nn(a.data() + std::size_t(bi) * m * k, b.data() + std::size_t(bi) * k * nn,
                        n->val.data() + std::size_t(bi) * m * nn, m, k, nn);
    }
    check_finite(*n, "batched_matmul");
    if (n->requires_grad) {
        auto ap = a.node();
        auto bp = b.node();
        auto* o = n.get();
        n->backward_fn = [ap, bp, o, nb, m, k, nn]() {
            for (int bi = 0; bi < nb; ++bi) {
                const T* g = o->grad.data() + std::size_t(bi) * m * nn;
                if (ap->requires_grad) {
                    ap->ensure_grad();
                    detail::gemm_nt(g, bp->val.data() + std::size_t(bi) * k * nn,
                                    ap->grad.data() + std::size_t(bi) * m * k, m, nn, k);
                }
                if (bp->requires_grad) {
                    bp->ensure_grad();
                    detail::gemm_tn(ap->val.data() + std::size_t(bi) * m * k, g,
                                    bp->grad.data() + std::size_t(bi) * k * nn, k, m, nn);
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Per-batch matmul with the second operand transposed:
// (B, m, k) . (B, n, k)^T -> (B, m, n). Yields attention scores.
template <typename T>
BasicTensor<T> batched_matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2)) {
        throw shape_error("batched_matmul_nt: incompatible shapes");
    }
    const int nb = a.dim(0), m = a.dim(1), k = a.dim(2), nn = b.dim(1);
    auto n = detail::make_result<T>({nb, m, nn}, {a.node(), b.node()});
    for (int bi = 0; bi < nb; ++bi) {
        detail::gemm_nt(a.data() + std::size_t(bi) * m * k, b.data() + std::size_t(bi) * nn * k,
                        n->val.data() + std::size_t(bi) * m * nn, m, k, nn);
    }
    check_finite(*n, "batched_matmul_nt");
    if (n->requires_grad) {
        auto ap = a.node();
        auto bp = b.node();
        auto* o = n.get();
        n->backward_fn = [ap, bp, o, nb, m, k, nn]() {
            for (int bi = 0; bi < nb; ++bi) {
                const T* g = o->grad.data() + std::size_t(bi) * m * nn;
                if (ap->requires_grad) {
                    ap->ensure_grad();
                    detail::gemm_nn(g, bp->val.data() + std::size_t(bi) * nn * k,
                                    ap->grad.data() + std::size_t(bi) * m * k, m, nn, k);
                }
                if (bp->requires_grad) {
                    bp->ensure_grad();
                    detail::gemm_tn(g, ap->val.data() + std::size_t(bi) * m * k,
                                    bp->grad.data() + std::size_t(bi) * nn * k, nn, m, k);
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// (b, t, d) -> (b*h, t, d/h): head j of batch i lands at slot i*h + j.
template <typename T>
BasicTensor<T> split_heads(const BasicTensor<T>& x, int heads) {
    if (x.rank() != 3) throw shape_error("split_heads: rank-3 input required");
    if (heads <= 0 || x.dim(2) % heads != 0) throw shape_error("split_heads: feature dim not divisible by heads");
    const int b = x.dim(0), t = x.dim(1), d = x.dim(2), dh = d / heads;
    auto n = detail::make_result<T>({b * heads, t, dh}, {x.node()});
    for (int bi = 0; bi < b; ++bi) {
        for (int h = 0; h < heads; ++h) {
            for (int ti = 0; ti < t; ++ti) {
                const T* src = x.data() + (std::size_t(bi) * t + ti) * d + std::size_t(h) * dh;
                T* dst = n->val.data() + (std::size_t(bi * heads + h) * t + ti) * dh;
                std::copy(src, src + dh, dst);
            }
        }
    }
    if (n->requires_grad) {
        auto xp = x.node();
        auto* o = n.get();
        n->backward_fn = [xp, o, b, t, d, dh, heads]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (int bi = 0; bi < b; ++bi) {
                for (int h = 0; h < heads; ++h) {
                    for (int ti = 0; ti < t; ++ti) {
                        const T* src = o->grad.data() + (std::size_t(bi * heads + h) * t + ti) * dh;
                        T* dst = xp->grad.data() + (std::size_t(bi) * t + ti) * d + std::size_t(h) * dh;
                        for (int j = 0; j < dh; ++j) dst[j] += src[j];
                    }
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Inverse of split_heads: (b*h, t, dh) -> (b, t, dh*h).
template <typename T>
BasicTensor<T> merge_heads(const BasicTensor<T>& x, int heads) {
    if (x.rank() != 3) throw shape_error("merge_heads: rank-3 input required");
    if (heads <= 0 || x.dim(0) % heads != 0) throw shape_error("merge_heads: batch dim not divisible by heads");
    const int b = x.dim(0) / heads, t = x.dim(1), dh = x.dim(2), d = dh * heads;
    auto n = detail::make_result<T>({b, t, d}, {x.node()});
    for (int bi = 0; bi < b; ++bi) {
        for (int h = 0; h < heads; ++h) {
            for (int ti = 0; ti < t; ++ti) {
                const T* src = x.data() + (std::size_t(bi * heads + h) * t + ti) * dh;
                T* dst = n->val.data() + (std::size_t(bi) * t + ti) * d + std::size_t(h) * dh;
                std::copy(src, src + dh, dst);
            }
        }
    }
    if (n->requires_grad) {
        auto xp = x.node();
        auto* o = n.get();
        n->backward_fn = [xp, o, b, t, d, dh, heads]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (int bi = 0; bi < b; ++bi) {
                for (int h = 0; h < heads; ++h) {
                    for (int ti = 0; ti < t; ++ti) {
                        const T* src = o->grad.data() + (std::size_t(bi) * t + ti) * d + std::size_t(h) * dh;
                        T* dst = xp->grad.data() + (std::size_t(bi * heads + h) * t + ti) * dh;
                        for (int j = 0; j < dh; ++j) dst[j] += src[j];
                    }
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Temporal mean pool: (b, t, d) -> (b, d).
template <typename T>
BasicTensor<T> mean_over_dim1(const BasicTensor<T>& x) {
    if (x.rank() != 3) throw shape_error("mean_over_dim1: rank-3 input required");
    const int b = x.dim(0), t = x.dim(1), d = x.dim(2);
    auto n = detail::make_result<T>({b, d}, {x.node()});
    for (int bi = 0; bi < b; ++bi) {
        T* out = n->val.data() + std::size_t(bi) * d;
        for (int ti = 0; ti < t; ++ti) {
            const T* src = x.data() + (std::size_t(bi) * t + ti) * d;
            for (int j = 0; j < d; ++j) out[j] += src[j];
        }
        for (int j = 0; j < d; ++j) out[j] /= T(t);
    }
    check_finite(*n, "mean_over_dim1");
    if (n->requires_grad) {
        auto xp = x.node();
        auto* o = n.get();
        n->backward_fn = [xp, o, b, t, d]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (int bi = 0; bi < b; ++bi) {
                const T* g = o->grad.data() + std::size_t(bi) * d;
                for (int ti = 0; ti < t; ++ti) {
                    T* dst = xp->grad.data() + (std::size_t(bi) * t + ti) * d;
                    for (int j = 0; j < d; ++j) dst[j] += g[j] / T(t);
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Same data, new shape; element count must be preserved.
template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, std::initializer_list<int> dims) {
    auto n = detail::make_result<T>(dims, {x.node()});
    if (n->val.size() != x.size()) throw shape_error("reshape: element count mismatch");
    std::copy(x.data(), x.data() + x.size(), n->val.data());
    if (n->requires_grad) {
        auto xp = x.node();
        auto* o = n.get();
        n->backward_fn = [xp, o]() {
            if (!xp->requires_grad) return;
            xp->ensure_grad();
            for (std::size_t i = 0; i < o->grad.size(); ++i) xp->grad[i] += o->grad[i];
        };
    }
    return BasicTensor<T>(n);
}

// Mean cross-entropy between rows of logits and integer class labels,
// computed via the max-subtracted log-sum-exp so huge logits stay finite.
template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw shape_error("cross_entropy: logits must be rank 2");
    const int b = logits.dim(0), c = logits.dim(1);
    if (static_cast<int>(labels.size()) != b) throw shape_error("cross_entropy: label count mismatch");
    for (int lab : labels) {
        if (lab < 0 || lab >= c) throw param_error("cross_entropy: label out of range");
    }
    auto n = detail::make_result<T>({1}, {logits.node()});
    auto probs = std::make_shared<std::vector<T>>(logits.size());
    double total = 0.0;
    for (int r = 0; r < b; ++r) {
        const T* row = logits.data() + std::size_t(r) * c;
        T m = row[0];
        for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        T* prow = probs->data() + std::size_t(r) * c;
        for (int j = 0; j < c; ++j) {
            const double e = std::exp(double(row[j] - m));
            prow[j] = T(e);
            sum += e;
        }
        const T inv = T(1.0 / sum);
        for (int j = 0; j < c; ++j) prow[j] *= inv;
        total += std::log(sum) - double(row[labels[std::size_t(r)]] - m);
    }
    n->val[0] = T(total / b);
    check_finite(*n, "cross_entropy");
    if (n->requires_grad) {
        auto lp = logits.node();
        auto* o = n.get();
        auto labs = std::make_shared<std::vector<int>>(labels);
        n->backward_fn = [lp, o, probs, labs, b, c]() {
            if (!lp->requires_grad) return;
            lp->ensure_grad();
            const T g = o->grad[0] / T(b);
            for (int r = 0; r < b; ++r) {
                const T* prow = probs->data() + std::size_t(r) * c;
                T* xg = lp->grad.data() + std::size_t(r) * c;
                const int lab = (*labs)[std::size_t(r)];
                for (int j = 0; j < c; ++j) xg[j] += g * (prow[j] - T(j == lab));
            }
        };
    }
    return BasicTensor<T>(n);
}

// Mean squared error over every element.
template <typename T>
BasicTensor<T> mse(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    if (pred.rank() != target.rank() || pred.size() != target.size()) throw shape_error("mse: shape mismatch");
    for (int i = 0; i < pred.rank(); ++i) {
        if (pred.dim(i) != target.dim(i)) throw shape_error("mse: shape mismatch");
    }
    auto n = detail::make_result<T>({1}, {pred.node(), target.node()});
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = double(pred.data()[i]) - double(target.data()[i]);
        total += d * d;
    }
    n->val[0] = T(total / double(pred.size()));
    check_finite(*n, "mse");
    if (n->requires_grad) {
        auto pp = pred.node();
        auto tp = target.node();
        auto* o = n.get();
        n->backward_fn = [pp, tp, o]() {
            const T g = o->grad[0] * T(2.0 / double(pp->val.size()));
            if (pp->requires_grad) {
                pp->ensure_grad();
                for (std::size_t i = 0; i < pp->val.size(); ++i) {
                    pp->grad[i] += g * (pp->val[i] - tp->val[i]);
                }
            }
            if (tp->requires_grad) {
                tp->ensure_grad();
                for (std::size_t i = 0; i < tp->val.size(); ++i) {
                    tp->grad[i] -= g * (pp->val[i] - tp->val[i]);
                }
            }
        };
    }
    return BasicTensor<T>(n);
}

// Scaled dot-product multi-head self-attention over (b, t, d), composed from
// the primitives above so it differentiates for free.
template <typename T>
struct AttentionWeights {
    BasicTensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
BasicTensor<T> multi_head_attention(const BasicTensor<T>& x, const AttentionWeights<T>& w, int heads) {
    if (x.rank() != 3) throw shape_error("multi_head_attention: rank-3 input required");
    const int d = x.dim(2);
    if (heads <= 0 || d % heads != 0) throw shape_error("multi_head_attention: heads must divide feature dim");
    auto q = split_heads(linear(x, w.wq, w.bq), heads);
    auto k = split_heads(linear(x, w.wk, w.bk), heads);
    auto v = split_heads(linear(x, w.wv, w.bv), heads);
    auto scores = scale(batched_matmul_nt(q, k), T(1.0 / std::sqrt(double(d / heads))));
    auto ctx = batched_matmul(softmax_lastdim(scores), v);
    return linear(merge_heads(ctx, heads), w.wo, w.bo);
}

}  // namespace glovesim::nn
