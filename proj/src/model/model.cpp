#include "gsformer/model.hpp"

#include <algorithm>

#include "gsformer/errors.hpp"
#include "gsformer/flops.hpp"
#include "gsformer/ops.hpp"

namespace gsf {

GSFormer::GSFormer(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), store_(seed) {
    config_.validate();
    const auto d = config_.model_dim;
    const auto out = 3 * config_.joints;
    spatial_ = SpatialParams::create(store_, config_.spatial());
    if (config_.temporal_pos_embedding) temporal_pos_ = store_.uniform("temporal.pos", {config_.frames, d}, d);

    switch (config_.temporal_mode) {
        case TemporalMode::Skipped:
            for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
                encoder_.push_back(BlockParams::encoder(store_, "encoder." + std::to_string(l), d));
            }
            for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
                decoder_.push_back(BlockParams::decoder(store_, "decoder." + std::to_string(l), d,
                                                        config_.effective_decoder_interval()));
            }
            break;
        case TemporalMode::VtConv:
            for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
                encoder_.push_back(BlockParams::encoder(store_, "encoder." + std::to_string(l), d, 3, 1));
            }
            for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
                decoder_.push_back(BlockParams::encoder(store_, "decoder." + std::to_string(l), d, 3, 1));
            }
            break;
        case TemporalMode::VtStrided:
            for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
                encoder_.push_back(BlockParams::encoder(store_, "encoder." + std::to_string(l), d, 3, 1));
            }
            for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
                decoder_.push_back(BlockParams::encoder(store_, "decoder." + std::to_string(l), d, 3, 3));
            }
            break;
    }
    seq_head_w_ = store_.uniform("head.sequence.w", {d, out}, d);
    seq_head_b_ = store_.uniform("head.sequence.b", {out}, d);
    target_head_w_ = store_.uniform("head.target.w", {d, out}, d);
    target_head_b_ = store_.uniform("head.target.b", {out}, d);
}

std::vector<std::size_t> rotation_indices(std::size_t clips, std::size_t length, const std::vector<long>& shift) {
    std::vector<std::size_t> rows;
    rows.reserve(clips * length);
    const auto len = static_cast<long>(length);
    for (std::size_t c = 0; c < clips; ++c) {
        const long s = shift.empty() ? 0 : shift.at(c);
        for (long i = 0; i < len; ++i) rows.push_back(c * length + static_cast<std::size_t>(((i + s) % len + len) % len));
    }
    return rows;
}

GSFormer::Output GSFormer::forward(const Tensor& frames, std::size_t clips, const std::vector<long>& decoder_shift,
                                   AttentionTrace* trace) const {
    const auto length = config_.frames;
    if (frames.rank() != 2 || frames.dim(0) != clips * length || frames.dim(1) != 2 * config_.joints) {
        throw dimension_error("forward: expected (" + std::to_string(clips * length) + " x " +
                              std::to_string(2 * config_.joints) + ") input for " + std::to_string(clips) +
                              " clips of T=" + std::to_string(length) + ", got " + shape_str(frames.shape()));
    }
    if (!decoder_shift.empty() && decoder_shift.size() != clips) {
        throw dimension_error("forward: one decoder shift per clip required");
    }

    auto tokens = spatial_forward(frames, spatial_, config_.spatial(), trace);
    if (temporal_pos_.defined()) tokens = add_rows(tokens, temporal_pos_);

    BlockContext ctx{config_.heads, clips, "encoder", 0, trace};
    Tensor encoded;
    if (config_.temporal_mode == TemporalMode::Skipped) {
        encoded = encoder_forward(tokens, encoder_, config_.interval, config_.variant == Variant::L, ctx);
    } else {
        encoded = tokens;
        for (std::size_t l = 0; l < encoder_.size(); ++l) {
            ctx.layer = l;
            encoded = vanilla_block(encoded, encoder_[l], ctx);
        }
    }

    Tensor decoder_input = encoded;
    const bool rotate = std::any_of(decoder_shift.begin(), decoder_shift.end(), [](long s) { return s != 0; });
    if (rotate) decoder_input = gather_rows(encoded, rotation_indices(clips, length, decoder_shift));

    BlockContext dctx{config_.heads, clips, "decoder", 0, trace};
    Tensor decoded;
    switch (config_.temporal_mode) {
        case TemporalMode::Skipped:
            decoded = decoder_forward(decoder_input, decoder_, config_.effective_decoder_interval(), dctx);
            break;
        case TemporalMode::VtConv: {
            decoded = decoder_input;
            for (std::size_t l = 0; l < decoder_.size(); ++l) {
                dctx.layer = l;
                decoded = vanilla_block(decoded, decoder_[l], dctx);
            }
            std::vector<std::size_t> centers;
            for (std::size_t c = 0; c < clips; ++c) centers.push_back(c * length + (length - 1) / 2);
            decoded = gather_rows(decoded, centers);
            break;
        }
        case TemporalMode::VtStrided: {
            decoded = decoder_input;
            for (std::size_t l = 0; l < decoder_.size(); ++l) {
                dctx.layer = l;
                decoded = strided_block(decoded, decoder_[l], dctx);
            }
            if (decoded.dim(0) != clips) {
                throw config_error("strided decoder output length is " + std::to_string(decoded.dim(0) / clips) +
                                   "; expected 1");
            }
            break;
        }
    }

    FlopScope scope("heads");
    Output out;
    out.sequence = scale(linear(encoded, seq_head_w_, seq_head_b_), kOutputScale);
    out.target = scale(linear(decoded, target_head_w_, target_head_b_), kOutputScale);
    return out;
}

std::size_t param_count(const ModelConfig& config) {
    const auto d = config.model_dim;
    const auto out = 3 * config.joints;
    auto block = [d](std::size_t kernel) {
        const auto norms = 4 * d;
        const auto attention = 4 * (d * d + d);
        const auto ffn = (kernel * d * 4 * d + 4 * d) + (4 * d * d + d);
        return norms + attention + ffn;
    };
    std::size_t total = SpatialParams::count(config.spatial());
    if (config.temporal_pos_embedding) total += config.frames * d;
    switch (config.temporal_mode) {
        case TemporalMode::Skipped: {
            const auto merge = config.effective_decoder_interval() * d * d + d;
            total += config.encoder_layers * block(1) + config.decoder_layers * (block(1) + merge);
            break;
        }
        case TemporalMode::VtConv:
        case TemporalMode::VtStrided:
            total += (config.encoder_layers + config.decoder_layers) * block(3);
            break;
    }
    total += 2 * (d * out + out);
    return total;
}

Tensor loss_target(const Tensor& pred, const Tensor& gt) {
    if (pred.shape() != gt.shape()) {
        throw dimension_error("loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
    }
    if (pred.size() % 3 != 0) throw dimension_error("loss: pose tensors must hold 3-D joints");
    return mean(row_norm(reshape(sub(pred, gt), {pred.size() / 3, 3})));
}

Tensor loss_full(const Tensor& pred_seq, const Tensor& gt_seq) {
    if (pred_seq.rank() != 2) throw dimension_error("loss_full: expected (T x 3J) sequences");
    // Every frame has J joints, so the mean over frames of per-frame means is the global mean.
    return loss_target(pred_seq, gt_seq);
}

LossBreakdown loss_total(double target, double full, double lambda) {
    if (lambda < 0) throw config_error("lambda must be >= 0");
    return {target + lambda * full, target, full};
}

Tensor loss_total(const Tensor& target, const Tensor& full, double lambda) {
    if (lambda < 0) throw config_error("lambda must be >= 0");
    return add(target, scale(full, lambda));
}

}  // namespace gsf
