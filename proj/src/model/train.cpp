#include "gsformer/train.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "gsformer/errors.hpp"
#include "gsformer/metrics.hpp"
#include "gsformer/ops.hpp"

namespace gsf {

void tune_allocator() {
#if defined(__GLIBC__)
    // Activations are allocated and freed every step; keep them off mmap.
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

Adam::Adam(ParamStore& params, double learning_rate, double beta1, double beta2, double eps)
    : params_(params), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& [name, t] : params_.entries()) {
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
    }
}

void Adam::step() {
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    const auto& entries = params_.entries();
    for (std::size_t p = 0; p < entries.size(); ++p) {
        Tensor t = entries[p].second;
        if (!t.has_grad()) continue;
        const auto& g = t.grad();
        auto values = t.mutable_values();
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            values[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

PreparedData PreparedData::from(const Dataset& dataset) {
    PreparedData out;
    out.joints = dataset.inputs.empty() ? 0 : dataset.inputs.front().joints;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.inputs[i].joints != out.joints || dataset.targets[i].joints != out.joints ||
            dataset.targets[i].frames != dataset.inputs[i].frames) {
            throw data_error("sequence " + std::to_string(i) + " has inconsistent frame or joint counts");
        }
        out.inputs.push_back(normalize_screen(dataset.inputs[i], dataset.camera).coords);
        out.targets.push_back(dataset.targets[i].coords);
        out.lengths.push_back(dataset.inputs[i].frames);
    }
    return out;
}

ClipBatch make_batch(const PreparedData& data, const std::vector<ClipRequest>& requests, std::size_t length,
                     const CompletionPolicy& policy) {
    if (requests.empty()) throw usage_error("make_batch: empty request list");
    const auto j2 = 2 * data.joints;
    const auto j3 = 3 * data.joints;
    const auto b = requests.size();
    const auto center = (length - 1) / 2;
    std::vector<double> in(b * length * j2), full(b * length * j3), target(b * j3);
    ClipBatch batch;
    for (std::size_t c = 0; c < b; ++c) {
        const auto& req = requests[c];
        if (req.sequence >= data.size()) throw data_error("sequence index out of range");
        const auto plan = make_clip(data.lengths[req.sequence], req.target, length, policy);
        const auto& x = data.inputs[req.sequence];
        const auto& y = data.targets[req.sequence];
        for (std::size_t r = 0; r < length; ++r) {
            const auto f = plan.frames[r];
            std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(f * j2), j2, in.begin() + static_cast<std::ptrdiff_t>((c * length + r) * j2));
            std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(f * j3), j3, full.begin() + static_cast<std::ptrdiff_t>((c * length + r) * j3));
        }
        std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(req.target * j3), j3, target.begin() + static_cast<std::ptrdiff_t>(c * j3));
        batch.offsets.push_back(plan.target_offset);
        batch.shifts.push_back(static_cast<long>(plan.target_offset) - static_cast<long>(center));
    }
    batch.inputs = Tensor({b * length, j2}, std::move(in));
    batch.full_gt = Tensor({b * length, j3}, std::move(full));
    batch.target_gt = Tensor({b, j3}, std::move(target));
    return batch;
}

namespace {

std::vector<std::size_t> off_center(const ClipBatch& batch) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < batch.shifts.size(); ++c) {
        if (batch.shifts[c] != 0) out.push_back(c);
    }
    return out;
}

bool any_shift(const ClipBatch& batch) {
    return std::any_of(batch.shifts.begin(), batch.shifts.end(), [](long s) { return s != 0; });
}

}  // namespace

Tensor batch_loss(const GSFormer& model, const ClipBatch& batch, LossBreakdown* breakdown) {
    const auto clips = batch.offsets.size();
    const auto length = model.config().frames;
    const auto out = model.forward(batch.inputs, clips, any_shift(batch) ? batch.shifts : std::vector<long>{});
    Tensor lt = loss_target(out.target, batch.target_gt);
    const auto extra = off_center(batch);
    if (!extra.empty()) {
        std::vector<std::size_t> rows, gt_rows;
        for (auto c : extra) {
            rows.push_back(c * length + batch.offsets[c]);
            gt_rows.push_back(c);
        }
        Tensor enc = loss_target(gather_rows(out.sequence, rows), gather_rows(batch.target_gt, gt_rows));
        lt = add(lt, scale(enc, static_cast<double>(extra.size()) / static_cast<double>(clips)));
    }
    Tensor lf = loss_full(out.sequence, batch.full_gt);
    Tensor total = loss_total(lt, lf, model.config().lambda);
    if (breakdown) *breakdown = loss_total(lt.item(), lf.item(), model.config().lambda);
    return total;
}

std::vector<double> predict(const GSFormer& model, const ClipBatch& batch) {
    const auto clips = batch.offsets.size();
    const auto length = model.config().frames;
    const auto j3 = batch.target_gt.dim(1);
    const auto out = model.forward(batch.inputs, clips);
    std::vector<double> pred(clips * j3);
    const auto& seq = out.sequence.values();
    const auto& tgt = out.target.values();
    for (std::size_t c = 0; c < clips; ++c) {
        const double* src = batch.shifts[c] == 0 ? tgt.data() + c * j3 : seq.data() + (c * length + batch.offsets[c]) * j3;
        std::copy_n(src, j3, pred.begin() + static_cast<std::ptrdiff_t>(c * j3));
    }
    return pred;
}

namespace {

EvalResult score(const std::vector<double>& pred, const std::vector<double>& gt, std::size_t joints) {
    EvalResult r;
    r.frames = joints == 0 ? 0 : pred.size() / (3 * joints);
    if (r.frames == 0) return r;
    r.mpjpe = mpjpe(pred, gt, joints);
    const auto p = p_mpjpe(pred, gt, joints);
    r.p_mpjpe = p.value;
    r.degenerate = p.degenerate;
    return r;
}

bool is_boundary(std::size_t length, std::size_t target, std::size_t window_length) {
    const auto w = window(length, target, window_length);
    return w.missing_before > 0 || w.missing_after > 0;
}

}  // namespace

EvalResult evaluate(const GSFormer& model, const PreparedData& data, const std::vector<std::size_t>& sequences,
                    const EvalOptions& options) {
    if (data.joints != model.config().joints) {
        throw config_error("model expects J=" + std::to_string(model.config().joints) + " but the data has J=" +
                           std::to_string(data.joints));
    }
    const auto t = model.config().frames;
    std::vector<ClipRequest> requests;
    for (auto s : sequences) {
        for (std::size_t f = 0; f < data.lengths.at(s); ++f) {
            if (!options.boundary_only || is_boundary(data.lengths[s], f, t)) requests.push_back({s, f});
        }
    }
    std::vector<double> pred, gt;
    const auto step = std::max<std::size_t>(1, options.batch_size);
    for (std::size_t start = 0; start < requests.size(); start += step) {
        const std::vector<ClipRequest> chunk(requests.begin() + static_cast<std::ptrdiff_t>(start),
                                             requests.begin() + static_cast<std::ptrdiff_t>(std::min(requests.size(), start + step)));
        const auto batch = make_batch(data, chunk, t, options.policy);
        const auto p = predict(model, batch);
        pred.insert(pred.end(), p.begin(), p.end());
        gt.insert(gt.end(), batch.target_gt.values().begin(), batch.target_gt.values().end());
    }
    return score(pred, gt, data.joints);
}

std::vector<ClipRequest> epoch_requests(const PreparedData& data, const std::vector<std::size_t>& sequences,
                                        std::size_t clips_per_sequence, std::mt19937_64& rng) {
    std::vector<ClipRequest> out;
    for (auto s : sequences) {
        for (std::size_t k = 0; k < clips_per_sequence; ++k) {
            out.push_back({s, static_cast<std::size_t>(rng() % data.lengths.at(s))});
        }
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::vector<EpochRecord> train(GSFormer& model, const PreparedData& data, const Split& split,
                               const TrainConfig& config, const TrainOptions& options) {
    config.validate();
    if (data.joints != model.config().joints) {
        throw config_error("model expects J=" + std::to_string(model.config().joints) + " but the data has J=" +
                           std::to_string(data.joints));
    }
    if (split.train.empty()) throw data_error("training split is empty");
    tune_allocator();
    std::mt19937_64 rng(config.seed);
    Adam adam(model.params(), config.learning_rate);
    std::vector<EpochRecord> history;
    const auto t = model.config().frames;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.learning_rate = adam.learning_rate();
        const auto requests = epoch_requests(data, split.train, config.clips_per_sequence, rng);
        std::size_t batches = 0;
        for (std::size_t start = 0; start < requests.size(); start += config.batch_size) {
            const std::vector<ClipRequest> chunk(
                requests.begin() + static_cast<std::ptrdiff_t>(start),
                requests.begin() + static_cast<std::ptrdiff_t>(std::min(requests.size(), start + config.batch_size)));
            const auto batch = make_batch(data, chunk, t, options.policy);
            Tape tape;
            TapeScope scope(tape);
            LossBreakdown parts;
            Tensor loss = batch_loss(model, batch, &parts);
            if (!std::isfinite(parts.total)) {
                throw numeric_error("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(batches + 1));
            }
            model.params().zero_grad();
            tape.backward(loss);
            adam.step();
            rec.loss += parts.total;
            rec.loss_target += parts.target;
            rec.loss_full += parts.full;
            ++batches;
        }
        if (batches > 0) {
            rec.loss /= static_cast<double>(batches);
            rec.loss_target /= static_cast<double>(batches);
            rec.loss_full /= static_cast<double>(batches);
        }
        adam.set_learning_rate(adam.learning_rate() * config.lr_decay);
        if (options.eval_each_epoch && !split.test.empty()) {
            rec.test_mpjpe = evaluate(model, data, split.test, {options.policy, false, 64}).mpjpe;
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        history.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec);
    }
    return history;
}

MeanPoseBaseline MeanPoseBaseline::fit(const PreparedData& data, const std::vector<std::size_t>& sequences) {
    MeanPoseBaseline b;
    const auto j3 = 3 * data.joints;
    b.mean.assign(j3, 0.0);
    std::size_t frames = 0;
    for (auto s : sequences) {
        const auto& y = data.targets.at(s);
        for (std::size_t i = 0; i < y.size(); ++i) b.mean[i % j3] += y[i];
        frames += data.lengths[s];
    }
    if (frames == 0) throw data_error("mean-pose baseline needs at least one frame");
    for (auto& v : b.mean) v /= static_cast<double>(frames);
    return b;
}

EvalResult MeanPoseBaseline::evaluate(const PreparedData& data, const std::vector<std::size_t>& sequences) const {
    std::vector<double> pred, gt;
    for (auto s : sequences) {
        for (std::size_t f = 0; f < data.lengths.at(s); ++f) pred.insert(pred.end(), mean.begin(), mean.end());
        gt.insert(gt.end(), data.targets[s].begin(), data.targets[s].end());
    }
    return score(pred, gt, data.joints);
}

LinearLifter LinearLifter::fit(const PreparedData& data, const std::vector<std::size_t>& sequences, double ridge) {
    const auto j2 = 2 * data.joints;
    const auto j3 = 3 * data.joints;
    const auto in = static_cast<Eigen::Index>(j2 + 1);
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(in, in);
    Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(in, static_cast<Eigen::Index>(j3));
    Eigen::VectorXd row(in);
    std::size_t frames = 0;
    for (auto s : sequences) {
        const auto& x = data.inputs.at(s);
        const auto& y = data.targets.at(s);
        for (std::size_t f = 0; f < data.lengths[s]; ++f) {
            for (std::size_t k = 0; k < j2; ++k) row[static_cast<Eigen::Index>(k)] = x[f * j2 + k];
            row[in - 1] = 1.0;
            xtx.noalias() += row * row.transpose();
            const Eigen::Map<const Eigen::RowVectorXd> target(y.data() + f * j3, static_cast<Eigen::Index>(j3));
            xty.noalias() += row * target;
        }
        frames += data.lengths[s];
    }
    if (frames == 0) throw data_error("linear lifter needs at least one frame");
    xtx.diagonal().array() += ridge * static_cast<double>(frames);
    const Eigen::MatrixXd w = xtx.ldlt().solve(xty);
    LinearLifter lifter;
    lifter.joints = data.joints;
    lifter.weights.resize(static_cast<std::size_t>(w.size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(lifter.weights.data(), w.rows(), w.cols()) = w;
    return lifter;
}

EvalResult LinearLifter::evaluate(const PreparedData& data, const std::vector<std::size_t>& sequences) const {
    if (data.joints != joints) throw config_error("linear lifter was fit for a different joint count");
    const auto j2 = 2 * joints;
    const auto j3 = 3 * joints;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> w(weights.data(), static_cast<Eigen::Index>(j2 + 1), static_cast<Eigen::Index>(j3));
    std::vector<double> pred, gt;
    for (auto s : sequences) {
        const auto v = static_cast<Eigen::Index>(data.lengths.at(s));
        const Eigen::Map<const RowMat> x(data.inputs[s].data(), v, static_cast<Eigen::Index>(j2));
        RowMat p = x * w.topRows(static_cast<Eigen::Index>(j2));
        p.rowwise() += w.row(static_cast<Eigen::Index>(j2));
        pred.insert(pred.end(), p.data(), p.data() + p.size());
        gt.insert(gt.end(), data.targets[s].begin(), data.targets[s].end());
    }
    return score(pred, gt, joints);
}

}  // namespace gsf
