#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prodemb/tensor.hpp"

namespace prodemb {

// Differentiable primitives. Each computes its value eagerly and, when a
// tape is active and an input requires gradients, records a backward
// closure onto it. Without an active tape they are plain functions.

Tensor add(const Tensor& a, const Tensor& b);
Tensor add_bias_rows(const Tensor& m, const Tensor& bias);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps);

/// Numerically stabilized softmax of a vector (max subtraction).
Tensor softmax(const Tensor& v);

/// Row-wise softmax over a [T x N] matrix. When `mask` is given (size
/// T*N, nonzero = allowed), disallowed entries get weight zero and each
/// row normalizes over its allowed set.
Tensor masked_softmax_rows(const Tensor& x,
                           const std::vector<std::uint8_t>* mask = nullptr);

Tensor gelu(const Tensor& x);

/// Scales row i of `m` by w[i].
Tensor scale_rows(const Tensor& m, const Tensor& w);

/// Extracts column j of a [T x N] matrix as a length-T vector.
Tensor column(const Tensor& m, std::size_t j);

/// Gathers rows of `m` at `idx` (also the embedding-table lookup).
Tensor take_rows(const Tensor& m, std::vector<std::size_t> idx);

Tensor take_elems(const Tensor& v, std::vector<std::size_t> idx);

/// out = base; out[idx[r], :] += rows[r, :]
Tensor scatter_add_rows(const Tensor& base, const Tensor& rows,
                        std::vector<std::size_t> idx);

Tensor concat_rows(const std::vector<Tensor>& parts);

Tensor mean_rows(const Tensor& m);

Tensor l2_normalize(const Tensor& v);

Tensor dot(const Tensor& a, const Tensor& b);
Tensor pick(const Tensor& v, std::size_t i);
Tensor sum(const Tensor& v);

/// Per-head attention weights of one multi-head self-attention call,
/// captured on demand for inspection/export. weights[h] is row-major
/// [T x T]; each row sums to 1.
struct AttentionTrace {
    std::size_t tokens = 0;
    std::vector<std::vector<double>> weights;
};

/// Multi-head scaled dot-product attention over already-projected
/// Q, K, V of shape [T x D]. Bidirectional (no mask). Head h reads the
/// contiguous column block [h*D/H, (h+1)*D/H).
Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v,
                      std::size_t heads, AttentionTrace* trace = nullptr);

/// InfoNCE with the positive as candidate 0:
///   loss = -log( exp(q.p/tau) / (exp(q.p/tau) + sum_n exp(q.n/tau)) )
/// computed via log-sum-exp. Gradients flow into q and p only; the
/// negatives are consumed as plain values and must stay alive until
/// backward() runs.
Tensor info_nce_loss(const Tensor& q, const Tensor& p,
                     std::span<const std::span<const double>> negatives,
                     double tau);

} // namespace prodemb
