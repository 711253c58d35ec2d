#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "gsformer/data.hpp"
#include "gsformer/errors.hpp"

namespace gsf {

namespace {

// Rest offsets from the parent joint in the body frame (x = subject's left, y = up,
// z = forward), millimeters.
const std::array<Eigen::Vector3d, 17>& rest_offsets() {
    static const std::array<Eigen::Vector3d, 17> offsets = {
        Eigen::Vector3d(0, 0, 0),       // 0 pelvis
        Eigen::Vector3d(-130, 0, 0),    // 1 right hip
        Eigen::Vector3d(0, -450, 0),    // 2 right knee
        Eigen::Vector3d(0, -440, 0),    // 3 right ankle
        Eigen::Vector3d(130, 0, 0),     // 4 left hip
        Eigen::Vector3d(0, -450, 0),    // 5 left knee
        Eigen::Vector3d(0, -440, 0),    // 6 left ankle
        Eigen::Vector3d(0, 230, 10),    // 7 spine
        Eigen::Vector3d(0, 250, 0),     // 8 thorax
        Eigen::Vector3d(0, 110, 30),    // 9 neck
        Eigen::Vector3d(0, 120, 0),     // 10 head
        Eigen::Vector3d(160, -10, 0),   // 11 left shoulder
        Eigen::Vector3d(0, -280, 0),    // 12 left elbow
        Eigen::Vector3d(0, -250, 0),    // 13 left wrist
        Eigen::Vector3d(-160, -10, 0),  // 14 right shoulder
        Eigen::Vector3d(0, -280, 0),    // 15 right elbow
        Eigen::Vector3d(0, -250, 0),    // 16 right wrist
    };
    return offsets;
}

// One sinusoidal degree of freedom: base + amplitude * sin(2 pi f t + phase).
struct Oscillator {
    double base = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;

    double operator()(double seconds) const {
        return base + amplitude * std::sin(2.0 * std::numbers::pi * frequency * seconds + phase);
    }
};

// Per-joint local rotation as (flex about x, twist about y, abduct about z).
struct JointMotion {
    Oscillator flex, twist, abduct;

    Eigen::Matrix3d rotation(double seconds) const {
        return (Eigen::AngleAxisd(abduct(seconds), Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(twist(seconds), Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(flex(seconds), Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    }
};

class MotionSampler {
public:
    explicit MotionSampler(std::mt19937_64& rng) : rng_(rng) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    Oscillator osc(double base, double max_amplitude) {
        return {base, uniform(0.0, max_amplitude), uniform(0.3, 1.5), uniform(0.0, 2.0 * std::numbers::pi)};
    }

    std::array<JointMotion, 17> sample() {
        std::array<JointMotion, 17> m{};
        m[0] = {osc(0, 0.12), osc(0, 0.0), osc(0, 0.08)};
        m[7] = {osc(uniform(-0.05, 0.3), 0.3), osc(0, 0.4), osc(0, 0.15)};
        m[8] = {osc(0, 0.15), osc(0, 0.2), osc(0, 0.1)};
        m[9] = {osc(0, 0.3), osc(0, 0.6), osc(0, 0.15)};
        for (int side : {1, 4}) {  // hips: flexion swings the leg forward (negative angle)
            const double outward = side == 4 ? 1.0 : -1.0;
            m[side] = {osc(uniform(-0.6, 0.1), 0.8), osc(0, 0.2), osc(outward * uniform(0.0, 0.2), 0.2)};
            const double knee_base = uniform(0.1, 0.9);  // knees bend backward (positive)
            m[side + 1] = {osc(knee_base, knee_base * 0.95), {}, {}};
        }
        for (int side : {11, 14}) {
            const double outward = side == 11 ? 1.0 : -1.0;
            m[side] = {osc(uniform(-1.0, 0.3), 1.0), osc(0, 0.4), osc(outward * uniform(0.1, 1.0), 0.5)};
            const double elbow_base = -uniform(0.2, 1.3);
            m[side + 1] = {osc(elbow_base, std::abs(elbow_base) * 0.9), {}, {}};
        }
        return m;
    }

private:
    std::mt19937_64& rng_;
};

}  // namespace

const std::vector<int>& skeleton_parents() {
    static const std::vector<int> parents = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
    return parents;
}

Dataset synth_generate(const SynthOptions& options) {
    if (options.joints != 17) {
        throw config_error("synthetic generator supports the 17-joint skeleton only, got J=" +
                           std::to_string(options.joints));
    }
    if (options.frames == 0) throw config_error("synthetic generator needs at least one frame");
    if (options.noise < 0) throw config_error("noise sigma must be >= 0");

    std::mt19937_64 rng(options.seed);
    MotionSampler sampler(rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto& parents = skeleton_parents();
    const auto& offsets = rest_offsets();
    // World (x right, y up, z toward camera) to camera (x right, y down, z forward).
    const Eigen::Matrix3d world_to_camera = Eigen::Vector3d(1, -1, -1).asDiagonal();
    const auto& cam = options.camera;
    const double cx = static_cast<double>(cam.width) / 2.0;
    const double cy = static_cast<double>(cam.height) / 2.0;

    Dataset ds;
    ds.camera = cam;
    ds.fps = options.fps;
    for (std::size_t s = 0; s < options.count; ++s) {
        const auto motion = sampler.sample();
        const double yaw0 = sampler.uniform(0.0, 2.0 * std::numbers::pi);
        const double yaw_rate = sampler.uniform(-0.6, 0.6);
        const double depth0 = sampler.uniform(3000.0, 6000.0);
        const Eigen::Vector3d root0(sampler.uniform(-0.12, 0.12) * depth0, sampler.uniform(-150.0, 150.0), depth0);
        const Eigen::Vector3d velocity(sampler.uniform(-300.0, 300.0), 0.0, sampler.uniform(-300.0, 300.0));

        PoseSequence2D pose2d(options.frames, 17);
        PoseSequence3D pose3d(options.frames, 17);
        std::vector<double> roots(options.frames * 3);
        for (std::size_t t = 0; t < options.frames; ++t) {
            const double sec = static_cast<double>(t) / options.fps;
            std::array<Eigen::Matrix3d, 17> global;
            std::array<Eigen::Vector3d, 17> pos;
            global[0] = Eigen::AngleAxisd(yaw0 + yaw_rate * sec, Eigen::Vector3d::UnitY()).toRotationMatrix() *
                        motion[0].rotation(sec);
            pos[0].setZero();
            for (std::size_t j = 1; j < 17; ++j) {
                const auto p = static_cast<std::size_t>(parents[j]);
                pos[j] = pos[p] + global[p] * offsets[j];
                global[j] = global[p] * motion[j].rotation(sec);
            }
            Eigen::Vector3d root = root0 + velocity * sec;
            root.z() = std::max(root.z(), 2500.0);
            for (int d = 0; d < 3; ++d) roots[t * 3 + d] = root[d];
            for (std::size_t j = 0; j < 17; ++j) {
                const Eigen::Vector3d rel = world_to_camera * pos[j];
                for (int d = 0; d < 3; ++d) pose3d.at(t, j, d) = rel[d];
                const Eigen::Vector3d abs = root + rel;
                pose2d.at(t, j, 0) = cam.focal * abs.x() / abs.z() + cx;
                pose2d.at(t, j, 1) = cam.focal * abs.y() / abs.z() + cy;
            }
        }
        if (options.noise > 0) {
            for (auto& v : pose2d.coords) v += options.noise * noise(rng);
        }
        ds.inputs.push_back(std::move(pose2d));
        ds.targets.push_back(std::move(pose3d));
        ds.roots.push_back(std::move(roots));
    }
    return ds;
}

Dataset Dataset::quantized() const {
    Dataset q = *this;
    auto round = [](std::vector<double>& values) {
        for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
    };
    for (auto& s : q.inputs) round(s.coords);
    for (auto& s : q.targets) round(s.coords);
    for (auto& r : q.roots) round(r);
    q.fps = static_cast<double>(static_cast<float>(q.fps));
    q.camera.focal = static_cast<double>(static_cast<float>(q.camera.focal));
    return q;
}

PoseSequence2D normalize_screen(const PoseSequence2D& pixels, const Camera& camera) {
    PoseSequence2D out = pixels;
    const double w = static_cast<double>(camera.width);
    const double aspect = static_cast<double>(camera.height) / w;
    for (std::size_t i = 0; i < out.coords.size(); i += 2) {
        out.coords[i] = out.coords[i] / w * 2.0 - 1.0;
        out.coords[i + 1] = out.coords[i + 1] / w * 2.0 - aspect;
    }
    return out;
}

}  // namespace gsf
