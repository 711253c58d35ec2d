#pragma once

#include <cstddef>
#include <vector>

#include "gsformer/tensor.hpp"

// Differentiable kernels. Every function records a backward rule on the active tape when
// any input requires a gradient. Matrix products report MACs to the active FlopCounter.
namespace gsf {

// (a x b) . (b x c) -> (a x c); adds a*b*c MACs.
Tensor matmul(const Tensor& a, const Tensor& b);
// Batched product over the leading axis: (n x p x k) . (n x k x q), or with
// transpose_b, (n x p x k) . (n x q x k)^T. Adds n*p*k*q MACs.
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
// x: (R x C); b: (P x C) or (C) with R divisible by P. Row r receives b[r % P].
Tensor add_rows(const Tensor& x, const Tensor& b);
// x . w + bias for x: (R x in), w: (in x out), bias: (out).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor sigmoid(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor abs(const Tensor& x);

// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
// Normalizes each slice along the last axis (eps = 1e-5), then applies gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
inline constexpr double kLayerNormEps = 1e-5;

// Selects rows of a 2-D tensor in the given order; indices may repeat.
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices);
// Inverse of gather_rows for a permutation-like index list: out[indices[k]] = x[k].
// Rows never addressed are zero. Duplicate targets are rejected.
Tensor scatter_rows(const Tensor& x, const std::vector<std::size_t>& indices, std::size_t rows);
// Skip-sampled row selection; alias of gather_rows with range checking against T.
Tensor strided_gather(const Tensor& x, const std::vector<std::size_t>& indices);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t width);
Tensor reshape(const Tensor& x, Shape shape);

// Sliding windows over rows, grouped in `groups` independent sequences stacked vertically.
// Each output row concatenates `kernel` consecutive input rows (stride `stride`, `pad`
// zero rows on both ends of every sequence): the im2col of a 1-D convolution.
Tensor unfold_rows(const Tensor& x, std::size_t groups, std::size_t kernel, std::size_t stride,
                   std::size_t pad);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Euclidean norm of every row: (R x C) -> (R).
Tensor row_norm(const Tensor& x);

}  // namespace gsf
