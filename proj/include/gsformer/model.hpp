#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gsformer/config.hpp"
#include "gsformer/params.hpp"
#include "gsformer/skipped_transformer.hpp"
#include "gsformer/spatial_graph.hpp"
#include "gsformer/trace.hpp"

namespace gsf {

// Heads regress meters; outputs are reported in millimeters.
inline constexpr double kOutputScale = 1000.0;

// Spatial graph encoder -> temporal encoder -> temporal decoder, with linear regression
// heads on the full encoder sequence and on the single decoded target token.
class GSFormer {
public:
    explicit GSFormer(ModelConfig config, std::uint64_t seed = 0);

    struct Output {
        Tensor sequence;  // (clips*T x 3J) from the encoder head
        Tensor target;    // (clips x 3J) from the decoder head
    };

    // frames: (clips*T x 2J), normalized 2-D coordinates of `clips` stacked windows.
    // decoder_shift[c] rotates clip c's encoder features circularly (row i <- row i+shift)
    // before decoding, so an off-center target can be decoded from the center slot.
    Output forward(const Tensor& frames, std::size_t clips = 1, const std::vector<long>& decoder_shift = {},
                   AttentionTrace* trace = nullptr) const;

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

private:
    ModelConfig config_;
    ParamStore store_;
    SpatialParams spatial_;
    Tensor temporal_pos_;
    std::vector<BlockParams> encoder_;
    std::vector<BlockParams> decoder_;
    Tensor seq_head_w_, seq_head_b_;
    Tensor target_head_w_, target_head_b_;
};

// Closed-form number of scalar parameters implied by `config`.
std::size_t param_count(const ModelConfig& config);

struct LossBreakdown {
    double total = 0.0;
    double target = 0.0;  // L_t
    double full = 0.0;    // L_f
};

// Mean over joints of the Euclidean joint error; inputs are (N x 3J) or (N*J x 3) poses.
Tensor loss_target(const Tensor& pred, const Tensor& gt);
// Mean over frames of loss_target for (T x 3J) sequences (or stacked clips of them).
Tensor loss_full(const Tensor& pred_seq, const Tensor& gt_seq);
LossBreakdown loss_total(double target, double full, double lambda);
Tensor loss_total(const Tensor& target, const Tensor& full, double lambda);

// Rows r of x rotated circularly within each clip: out[c, i] = x[c, (i + shift[c]) mod T].
std::vector<std::size_t> rotation_indices(std::size_t clips, std::size_t length, const std::vector<long>& shift);

void save_checkpoint(const GSFormer& model, const std::string& path);
GSFormer load_checkpoint(const std::string& path);

}  // namespace gsf
