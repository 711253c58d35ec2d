#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "gsformer/config.hpp"
#include "gsformer/data.hpp"
#include "gsformer/model.hpp"

namespace gsf {

// Keeps large activation buffers on the heap instead of fresh mmap pages (glibc only).
void tune_allocator();

// Adaptive moment estimation over every tensor of a ParamStore.
class Adam {
public:
    explicit Adam(ParamStore& params, double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void step();
    void set_learning_rate(double lr) { lr_ = lr; }
    double learning_rate() const { return lr_; }

private:
    ParamStore& params_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t steps_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Dataset with screen-normalized inputs, flattened per sequence as (V x 2J) and (V x 3J).
struct PreparedData {
    std::size_t joints = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    std::vector<std::size_t> lengths;

    static PreparedData from(const Dataset& dataset);
    std::size_t size() const { return inputs.size(); }
};

// One target frame of one sequence, windowed for the model.
struct ClipRequest {
    std::size_t sequence = 0;
    std::size_t target = 0;
};

struct ClipBatch {
    Tensor inputs;                       // (B*T x 2J)
    Tensor full_gt;                      // (B*T x 3J)
    Tensor target_gt;                    // (B x 3J)
    std::vector<std::size_t> offsets;    // target position inside each clip
    std::vector<long> shifts;            // offset - center
};

ClipBatch make_batch(const PreparedData& data, const std::vector<ClipRequest>& requests, std::size_t length,
                     const CompletionPolicy& policy);

// Loss of one batch. Centered targets are supervised on the decoder output. An off-center
// target supervises the encoder-head row at its offset and, through a circular rotation
// of the encoder features, the decoder output as well.
Tensor batch_loss(const GSFormer& model, const ClipBatch& batch, LossBreakdown* breakdown = nullptr);

// Prediction for each request: the decoder output for centered targets, the encoder-head
// row at the target offset otherwise. Row-major (B x 3J), millimeters.
std::vector<double> predict(const GSFormer& model, const ClipBatch& batch);

struct EvalResult {
    double mpjpe = 0.0;
    double p_mpjpe = 0.0;
    bool degenerate = false;
    std::size_t frames = 0;
};

struct EvalOptions {
    CompletionPolicy policy;
    bool boundary_only = false;  // only targets whose ideal window leaves the video
    std::size_t batch_size = 64;
};

EvalResult evaluate(const GSFormer& model, const PreparedData& data, const std::vector<std::size_t>& sequences,
                    const EvalOptions& options);

struct EpochRecord {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double loss = 0.0;
    double loss_target = 0.0;
    double loss_full = 0.0;
    double test_mpjpe = 0.0;
    double seconds = 0.0;
};

struct TrainOptions {
    CompletionPolicy policy;
    bool eval_each_epoch = true;
    std::function<void(const EpochRecord&)> on_epoch;
};

std::vector<EpochRecord> train(GSFormer& model, const PreparedData& data, const Split& split,
                               const TrainConfig& config, const TrainOptions& options);

// Target frames of every training sequence visited in one epoch, shuffled.
std::vector<ClipRequest> epoch_requests(const PreparedData& data, const std::vector<std::size_t>& sequences,
                                        std::size_t clips_per_sequence, std::mt19937_64& rng);

// ----- reference predictors ---------------------------------------------------------------

// Predicts the mean training pose for every frame.
struct MeanPoseBaseline {
    std::vector<double> mean;  // 3J

    static MeanPoseBaseline fit(const PreparedData& data, const std::vector<std::size_t>& sequences);
    EvalResult evaluate(const PreparedData& data, const std::vector<std::size_t>& sequences) const;
};

// Single-frame ridge-regularized linear map from normalized 2-D to 3-D.
struct LinearLifter {
    std::size_t joints = 0;
    std::vector<double> weights;  // (2J + 1) x 3J, last row is the bias

    static LinearLifter fit(const PreparedData& data, const std::vector<std::size_t>& sequences, double ridge = 1e-6);
    EvalResult evaluate(const PreparedData& data, const std::vector<std::size_t>& sequences) const;
};

}  // namespace gsf
