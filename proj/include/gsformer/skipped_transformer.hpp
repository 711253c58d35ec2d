#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gsformer/params.hpp"
#include "gsformer/tensor.hpp"
#include "gsformer/trace.hpp"

namespace gsf {

// Residue-class partition of [0, T): set i holds every j with j % m == i.
struct SkipPartition {
    std::size_t length = 0;
    std::size_t interval = 0;
    std::vector<std::vector<std::size_t>> sets;
};

SkipPartition skip_partition(std::size_t length, std::size_t interval);

struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // (D x D) and (D)

    static AttentionParams create(ParamStore& store, const std::string& prefix, std::size_t dim);
};

// Position-wise FFN (kernel 1) or its 1-D convolutional form. Hidden width is 4D.
struct FeedForwardParams {
    Tensor w1, b1, w2, b2;  // (kernel*D x 4D), (4D), (4D x D), (D)
    std::size_t kernel = 1;
    std::size_t stride = 1;

    static FeedForwardParams create(ParamStore& store, const std::string& prefix, std::size_t dim,
                                    std::size_t kernel = 1, std::size_t stride = 1);
};

struct BlockParams {
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
    AttentionParams attn;
    FeedForwardParams ffn;
    Tensor merge_w, merge_b;  // decoder only: (m*D x D), (D)

    static BlockParams encoder(ParamStore& store, const std::string& prefix, std::size_t dim,
                               std::size_t ffn_kernel = 1, std::size_t ffn_stride = 1);
    static BlockParams decoder(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t interval);
};

// Shared per-call settings. `clips` independent sequences are stacked vertically in the
// input, each with the same length.
struct BlockContext {
    std::size_t heads = 1;
    std::size_t clips = 1;
    std::string stage = "encoder";  // FLOP scope prefix and attention-map label
    std::size_t layer = 0;
    AttentionTrace* trace = nullptr;
};

// Multi-head scaled dot-product attention inside sets of `set_len` consecutive rows of z
// ((G*set_len) x D). Per-head scaling is 1/sqrt(D/h). Q/K/V and output projections count
// under "<stage>-proj", the two token-mixing products under "<stage>-attention".
// `set_ids` labels each group in captured maps (defaults to the group index).
Tensor ssa_attend(const Tensor& z, std::size_t set_len, const AttentionParams& params, const BlockContext& ctx,
                  const std::vector<std::size_t>& set_ids = {});

Tensor feed_forward(const Tensor& x, const FeedForwardParams& params, std::size_t clips);

// Pre-norm Skipped Transformer block; sequence length preserved.
Tensor encoder_block(const Tensor& x, const BlockParams& params, std::size_t interval, const BlockContext& ctx);
// Vanilla full-sequence attention block with the same layout.
Tensor vanilla_block(const Tensor& x, const BlockParams& params, const BlockContext& ctx);
// Vanilla attention followed by a strided convolutional FFN; length shrinks by the stride.
Tensor strided_block(const Tensor& x, const BlockParams& params, const BlockContext& ctx);

// L1 encoder blocks. With `cross_layer_residual`, layer l >= 1 outputs the average of its
// block output and the input of layer l-1.
Tensor encoder_forward(const Tensor& x, const std::vector<BlockParams>& blocks, std::size_t interval,
                       bool cross_layer_residual, BlockContext ctx);

// Pads each clip to a multiple of m by repeating its last row, attends within the m sets,
// concatenates rank-aligned set outputs (token + attention) channelwise and merges back to D.
Tensor decoder_block(const Tensor& x, const BlockParams& params, std::size_t interval, const BlockContext& ctx);
Tensor decoder_forward(const Tensor& x, const std::vector<BlockParams>& blocks, std::size_t interval,
                       BlockContext ctx);

// Sequence lengths through `layers` decoder blocks, starting with `length`.
std::vector<std::size_t> decoder_lengths(std::size_t length, std::size_t interval, std::size_t layers);

// Row indices that repeat the last row of every clip until its length is a multiple of m.
std::vector<std::size_t> pad_to_multiple_indices(std::size_t clips, std::size_t length, std::size_t interval);

}  // namespace gsf
