#include "gsformer/skipped_transformer.hpp"

#include <cmath>
#include <map>

#include "gsformer/errors.hpp"
#include "gsformer/flops.hpp"
#include "gsformer/ops.hpp"

namespace gsf {

SkipPartition skip_partition(std::size_t length, std::size_t interval) {
    if (interval < 1) throw config_error("skip interval m must be >= 1");
    if (length < 1) throw config_error("sequence length T must be >= 1");
    SkipPartition part{length, interval, std::vector<std::vector<std::size_t>>(std::min(interval, length))};
    for (std::size_t j = 0; j < length; ++j) part.sets[j % interval].push_back(j);
    return part;
}

AttentionParams AttentionParams::create(ParamStore& store, const std::string& prefix, std::size_t dim) {
    AttentionParams p;
    p.wq = store.uniform(prefix + ".wq", {dim, dim}, dim);
    p.bq = store.uniform(prefix + ".bq", {dim}, dim);
    p.wk = store.uniform(prefix + ".wk", {dim, dim}, dim);
    p.bk = store.uniform(prefix + ".bk", {dim}, dim);
    p.wv = store.uniform(prefix + ".wv", {dim, dim}, dim);
    p.bv = store.uniform(prefix + ".bv", {dim}, dim);
    p.wo = store.uniform(prefix + ".wo", {dim, dim}, dim);
    p.bo = store.uniform(prefix + ".bo", {dim}, dim);
    return p;
}

FeedForwardParams FeedForwardParams::create(ParamStore& store, const std::string& prefix, std::size_t dim,
                                            std::size_t kernel, std::size_t stride) {
    FeedForwardParams p;
    p.kernel = kernel;
    p.stride = stride;
    p.w1 = store.uniform(prefix + ".w1", {kernel * dim, 4 * dim}, kernel * dim);
    p.b1 = store.uniform(prefix + ".b1", {4 * dim}, kernel * dim);
    p.w2 = store.uniform(prefix + ".w2", {4 * dim, dim}, 4 * dim);
    p.b2 = store.uniform(prefix + ".b2", {dim}, 4 * dim);
    return p;
}

namespace {
void add_norms(BlockParams& b, ParamStore& store, const std::string& prefix, std::size_t dim) {
    b.ln1_gain = store.constant(prefix + ".ln1.gain", {dim}, 1.0);
    b.ln1_bias = store.constant(prefix + ".ln1.bias", {dim}, 0.0);
    b.ln2_gain = store.constant(prefix + ".ln2.gain", {dim}, 1.0);
    b.ln2_bias = store.constant(prefix + ".ln2.bias", {dim}, 0.0);
}
}  // namespace

BlockParams BlockParams::encoder(ParamStore& store, const std::string& prefix, std::size_t dim,
                                 std::size_t ffn_kernel, std::size_t ffn_stride) {
    BlockParams b;
    add_norms(b, store, prefix, dim);
    b.attn = AttentionParams::create(store, prefix + ".attn", dim);
    b.ffn = FeedForwardParams::create(store, prefix + ".ffn", dim, ffn_kernel, ffn_stride);
    return b;
}

BlockParams BlockParams::decoder(ParamStore& store, const std::string& prefix, std::size_t dim,
                                 std::size_t interval) {
    BlockParams b;
    add_norms(b, store, prefix, dim);
    b.attn = AttentionParams::create(store, prefix + ".attn", dim);
    b.merge_w = store.uniform(prefix + ".merge.w", {interval * dim, dim}, interval * dim);
    b.merge_b = store.uniform(prefix + ".merge.b", {dim}, interval * dim);
    b.ffn = FeedForwardParams::create(store, prefix + ".ffn", dim);
    return b;
}

Tensor ssa_attend(const Tensor& z, std::size_t set_len, const AttentionParams& params, const BlockContext& ctx,
                  const std::vector<std::size_t>& set_ids) {
    if (z.rank() != 2 || set_len == 0 || z.dim(0) % set_len != 0) {
        throw dimension_error("ssa_attend: rows of " + shape_str(z.shape()) + " not divisible into sets of " +
                              std::to_string(set_len));
    }
    const auto dim = z.dim(1);
    if (ctx.heads == 0 || dim % ctx.heads != 0) {
        throw config_error("model width D=" + std::to_string(dim) + " not divisible by heads h=" +
                           std::to_string(ctx.heads));
    }
    const auto groups = z.dim(0) / set_len;
    const auto head_dim = dim / ctx.heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Tensor q, k, v;
    {
        FlopScope scope(ctx.stage + "-proj");
        q = linear(z, params.wq, params.bq);
        k = linear(z, params.wk, params.bk);
        v = linear(z, params.wv, params.bv);
    }
    std::vector<Tensor> heads;
    heads.reserve(ctx.heads);
    for (std::size_t h = 0; h < ctx.heads; ++h) {
        auto qh = reshape(slice_cols(q, h * head_dim, head_dim), {groups, set_len, head_dim});
        auto kh = reshape(slice_cols(k, h * head_dim, head_dim), {groups, set_len, head_dim});
        auto vh = reshape(slice_cols(v, h * head_dim, head_dim), {groups, set_len, head_dim});
        FlopScope scope(ctx.stage + "-attention");
        auto weights = softmax(scale(bmm(qh, kh, true), inv_scale), 2);
        if (ctx.trace != nullptr) {
            const auto wv = weights.values();
            for (std::size_t g = 0; g < groups; ++g) {
                AttentionMap map{ctx.stage, ctx.layer, h, set_ids.empty() ? g : set_ids.at(g), set_len, set_len, {}};
                map.values.assign(wv.begin() + g * set_len * set_len, wv.begin() + (g + 1) * set_len * set_len);
                ctx.trace->maps.push_back(std::move(map));
            }
        }
        heads.push_back(reshape(bmm(weights, vh), {groups * set_len, head_dim}));
    }
    FlopScope scope(ctx.stage + "-proj");
    return linear(heads.size() == 1 ? heads.front() : concat_cols(heads), params.wo, params.bo);
}

Tensor feed_forward(const Tensor& x, const FeedForwardParams& params, std::size_t clips) {
    Tensor input = x;
    if (params.kernel > 1 || params.stride > 1) {
        const auto pad = params.stride == 1 ? (params.kernel - 1) / 2 : 0;
        input = unfold_rows(x, clips, params.kernel, params.stride, pad);
    }
    return linear(gelu(linear(input, params.w1, params.b1)), params.w2, params.b2);
}

namespace {

std::size_t clip_length(const Tensor& x, std::size_t clips) {
    if (x.rank() != 2 || clips == 0 || x.dim(0) % clips != 0) {
        throw dimension_error("input rows " + shape_str(x.shape()) + " not divisible into " + std::to_string(clips) +
                              " clips");
    }
    return x.dim(0) / clips;
}

Tensor ffn_residual(const Tensor& x, const BlockParams& params, const BlockContext& ctx) {
    FlopScope scope(ctx.stage + "-ffn");
    return add(x, feed_forward(layer_norm(x, params.ln2_gain, params.ln2_bias), params.ffn, ctx.clips));
}

}  // namespace

Tensor encoder_block(const Tensor& x, const BlockParams& params, std::size_t interval, const BlockContext& ctx) {
    const auto length = clip_length(x, ctx.clips);
    const auto partition = skip_partition(length, interval);
    auto normed = layer_norm(x, params.ln1_gain, params.ln1_bias);

    // Sets of equal size are attended in one batched call; at most two sizes exist.
    std::map<std::size_t, std::vector<std::size_t>, std::greater<>> by_size;
    for (std::size_t i = 0; i < partition.sets.size(); ++i) by_size[partition.sets[i].size()].push_back(i);

    std::vector<Tensor> outputs;
    std::vector<std::size_t> positions;
    for (const auto& [size, set_indices] : by_size) {
        std::vector<std::size_t> rows;
        std::vector<std::size_t> ids;
        for (std::size_t c = 0; c < ctx.clips; ++c) {
            for (auto s : set_indices) {
                ids.push_back(s);
                for (auto j : partition.sets[s]) rows.push_back(c * length + j);
            }
        }
        outputs.push_back(ssa_attend(strided_gather(normed, rows), size, params.attn, ctx, ids));
        positions.insert(positions.end(), rows.begin(), rows.end());
    }
    auto attended = outputs.size() == 1 ? outputs.front() : concat_rows(outputs);
    auto mixed = add(x, scatter_rows(attended, positions, x.dim(0)));
    return ffn_residual(mixed, params, ctx);
}

Tensor vanilla_block(const Tensor& x, const BlockParams& params, const BlockContext& ctx) {
    const auto length = clip_length(x, ctx.clips);
    auto normed = layer_norm(x, params.ln1_gain, params.ln1_bias);
    auto mixed = add(x, ssa_attend(normed, length, params.attn, ctx));
    return ffn_residual(mixed, params, ctx);
}

Tensor strided_block(const Tensor& x, const BlockParams& params, const BlockContext& ctx) {
    const auto stride = params.ffn.stride;
    const auto length = clip_length(x, ctx.clips);
    Tensor input = x;
    auto padded_length = length;
    if (length % stride != 0) {
        input = gather_rows(x, pad_to_multiple_indices(ctx.clips, length, stride));
        padded_length = input.dim(0) / ctx.clips;
    }
    auto normed = layer_norm(input, params.ln1_gain, params.ln1_bias);
    auto mixed = add(input, ssa_attend(normed, padded_length, params.attn, ctx));

    FlopScope scope(ctx.stage + "-ffn");
    const auto out_length = padded_length / stride;
    std::vector<std::size_t> centers;
    for (std::size_t c = 0; c < ctx.clips; ++c) {
        for (std::size_t t = 0; t < out_length; ++t) {
            centers.push_back(c * padded_length + t * stride + (params.ffn.kernel - 1) / 2);
        }
    }
    auto reduced = feed_forward(layer_norm(mixed, params.ln2_gain, params.ln2_bias), params.ffn, ctx.clips);
    return add(gather_rows(mixed, centers), reduced);
}

Tensor encoder_forward(const Tensor& x, const std::vector<BlockParams>& blocks, std::size_t interval,
                       bool cross_layer_residual, BlockContext ctx) {
    Tensor previous_input = x;
    Tensor current = x;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        ctx.layer = l;
        auto out = encoder_block(current, blocks[l], interval, ctx);
        if (cross_layer_residual && l >= 1) out = scale(add(out, previous_input), 0.5);
        previous_input = current;
        current = out;
    }
    return current;
}

std::vector<std::size_t> pad_to_multiple_indices(std::size_t clips, std::size_t length, std::size_t interval) {
    const auto padded = (length + interval - 1) / interval * interval;
    std::vector<std::size_t> rows;
    rows.reserve(clips * padded);
    for (std::size_t c = 0; c < clips; ++c) {
        for (std::size_t t = 0; t < padded; ++t) rows.push_back(c * length + std::min(t, length - 1));
    }
    return rows;
}

Tensor decoder_block(const Tensor& x, const BlockParams& params, std::size_t interval, const BlockContext& ctx) {
    if (interval < 1) throw config_error("skip interval m must be >= 1");
    const auto length = clip_length(x, ctx.clips);
    if (!params.merge_w.defined() || params.merge_w.dim(0) != interval * x.dim(1)) {
        throw config_error("decoder block merge weights do not match m=" + std::to_string(interval));
    }
    Tensor input = x;
    if (length % interval != 0) input = gather_rows(x, pad_to_multiple_indices(ctx.clips, length, interval));
    const auto padded = input.dim(0) / ctx.clips;
    const auto steps = padded / interval;

    auto normed = layer_norm(input, params.ln1_gain, params.ln1_bias);
    // Set-major order per clip: (clip, set i, rank r) -> row r*m + i.
    std::vector<std::size_t> rows;
    std::vector<std::size_t> ids;
    rows.reserve(input.dim(0));
    for (std::size_t c = 0; c < ctx.clips; ++c) {
        for (std::size_t i = 0; i < interval; ++i) {
            ids.push_back(i);
            for (std::size_t r = 0; r < steps; ++r) rows.push_back(c * padded + r * interval + i);
        }
    }
    // Attention residual taken per token before the sets are merged.
    auto attended =
        add(strided_gather(input, rows), ssa_attend(strided_gather(normed, rows), steps, params.attn, ctx, ids));
    // Rank-aligned outputs of the m sets side by side: (clip, r) <- [set 0 rank r, ..., set m-1 rank r].
    std::vector<std::size_t> aligned;
    aligned.reserve(attended.dim(0));
    for (std::size_t c = 0; c < ctx.clips; ++c) {
        for (std::size_t r = 0; r < steps; ++r) {
            for (std::size_t i = 0; i < interval; ++i) aligned.push_back((c * interval + i) * steps + r);
        }
    }
    auto concatenated = reshape(gather_rows(attended, aligned), {ctx.clips * steps, interval * x.dim(1)});
    Tensor merged;
    {
        FlopScope scope(ctx.stage + "-merge");
        merged = linear(concatenated, params.merge_w, params.merge_b);
    }
    return ffn_residual(merged, params, ctx);
}

std::vector<std::size_t> decoder_lengths(std::size_t length, std::size_t interval, std::size_t layers) {
    if (interval < 1) throw config_error("skip interval m must be >= 1");
    std::vector<std::size_t> chain{length};
    for (std::size_t l = 0; l < layers; ++l) {
        length = (length + interval - 1) / interval;
        chain.push_back(length);
    }
    return chain;
}

Tensor decoder_forward(const Tensor& x, const std::vector<BlockParams>& blocks, std::size_t interval,
                       BlockContext ctx) {
    Tensor current = x;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        ctx.layer = l;
        current = decoder_block(current, blocks[l], interval, ctx);
    }
    const auto achieved = clip_length(current, ctx.clips);
    if (achieved != 1) {
        throw config_error("decoder output length is " + std::to_string(achieved) + " after " +
                           std::to_string(blocks.size()) + " layers with m=" + std::to_string(interval) +
                           "; expected 1");
    }
    return current;
}

}  // namespace gsf
