#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gsformer/config.hpp"
#include "gsformer/tensor.hpp"

namespace gsf {

// frames x joints x Dims coordinates, row-major.
template <std::size_t Dims>
struct PoseSequence {
    std::size_t frames = 0;
    std::size_t joints = 0;
    std::vector<double> coords;

    PoseSequence() = default;
    PoseSequence(std::size_t frames_, std::size_t joints_)
        : frames(frames_), joints(joints_), coords(frames_ * joints_ * Dims, 0.0) {}

    double& at(std::size_t t, std::size_t j, std::size_t d) { return coords[(t * joints + j) * Dims + d]; }
    double at(std::size_t t, std::size_t j, std::size_t d) const { return coords[(t * joints + j) * Dims + d]; }
    std::span<const double> frame(std::size_t t) const {
        return {coords.data() + t * joints * Dims, joints * Dims};
    }

    bool operator==(const PoseSequence&) const = default;
};

using PoseSequence2D = PoseSequence<2>;  // pixels
using PoseSequence3D = PoseSequence<3>;  // millimeters, root-relative, camera frame

struct Camera {
    double focal = 1000.0;  // pixels
    std::size_t width = 1000;
    std::size_t height = 1000;

    bool operator==(const Camera&) const = default;
};

// Paired 2-D detections and 3-D ground truth, plus the camera-frame root trajectory.
struct Dataset {
    Camera camera;
    double fps = 50.0;
    std::vector<PoseSequence2D> inputs;
    std::vector<PoseSequence3D> targets;
    std::vector<std::vector<double>> roots;  // per sequence: frames x 3, millimeters

    std::size_t size() const { return inputs.size(); }
    // Values rounded to float32, the on-disk precision.
    Dataset quantized() const;

    bool operator==(const Dataset&) const = default;
};

// Pixel coordinates mapped to [-1, 1] by image width: u' = 2u/w - 1, v' = 2v/w - h/w.
PoseSequence2D normalize_screen(const PoseSequence2D& pixels, const Camera& camera);

// ----- windowing and completion -------------------------------------------------------

// Real frames of the ideal window [t-(T-1)/2, t+(T-1)/2] clipped to [0, V).
struct ClipWindow {
    std::vector<std::size_t> frames;
    std::size_t missing_before = 0;
    std::size_t missing_after = 0;
};

ClipWindow window(std::size_t video_length, std::size_t target, std::size_t length);

// Video frame indices for a T-frame input and the position of the target inside it.
struct ClipPlan {
    std::vector<std::size_t> frames;
    std::size_t target_offset = 0;
};

// Repeats the boundary frames.
std::vector<std::size_t> complete_edge(const ClipWindow& clip);
// Duplicates the first (or last) k real frames once each, in order.
std::vector<std::size_t> complete_expand(const ClipWindow& clip);
// Edge padding while at most R frames are missing; otherwise shifts the window to lie
// inside the video. Requires V >= T.
ClipPlan complete_roll(std::size_t video_length, std::size_t target, std::size_t length, std::size_t threshold);

struct CompletionPolicy {
    CompletionMode mode = CompletionMode::Edge;
    std::size_t threshold = 0;  // R
};

ClipPlan make_clip(std::size_t video_length, std::size_t target, std::size_t length, const CompletionPolicy& policy);

// ----- synthetic data -------------------------------------------------------------------

struct SynthOptions {
    std::uint64_t seed = 0;
    std::size_t count = 2000;
    std::size_t frames = 100;   // V
    std::size_t joints = 17;
    double noise = 2.0;         // Gaussian sigma on 2-D, pixels
    Camera camera;
    double fps = 50.0;
};

// Procedural 17-joint skeleton with fixed bone lengths, smooth sinusoidal joint angles,
// forward kinematics in the camera frame and pinhole projection.
Dataset synth_generate(const SynthOptions& options);

// Parent of each joint in the 17-joint skeleton (-1 for the root).
const std::vector<int>& skeleton_parents();

// ----- file I/O -------------------------------------------------------------------------

inline constexpr std::uint32_t kDatasetVersion = 1;

// "GSP1" | u32 version | u32 V | u32 J | u32 dims(2) | u32 width | u32 height | f32 focal |
// f32 fps | u64 count | records of float32 (V*J*2 pixels, V*J*3 mm, V*3 root mm).
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

struct SequenceEntry {
    std::size_t index = 0;
    std::size_t frames = 0;
    std::size_t joints = 0;
    double fps = 0.0;
};

// JSON manifest listing the sequences of a dataset file.
void write_manifest(const Dataset& dataset, const std::string& dataset_path, const std::string& manifest_path);
std::vector<SequenceEntry> read_manifest(const std::string& manifest_path, std::string* dataset_path = nullptr);

// Deterministic train/test split of sequence indices.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
Split split_dataset(std::size_t count, double train_fraction, std::uint64_t seed);

}  // namespace gsf
