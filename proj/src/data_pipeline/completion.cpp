#include <algorithm>
#include <cstdlib>

#include "gsformer/data.hpp"
#include "gsformer/errors.hpp"

namespace gsf {

ClipWindow window(std::size_t video_length, std::size_t target, std::size_t length) {
    if (length % 2 == 0) throw config_error("window length T must be odd, got " + std::to_string(length));
    if (target >= video_length) {
        throw data_error("target frame " + std::to_string(target) + " outside video of length " +
                         std::to_string(video_length));
    }
    const auto half = (length - 1) / 2;
    ClipWindow w;
    w.missing_before = target < half ? half - target : 0;
    w.missing_after = target + half >= video_length ? target + half - (video_length - 1) : 0;
    const auto first = target - (half - w.missing_before);
    const auto last = target + (half - w.missing_after);
    for (auto f = first; f <= last; ++f) w.frames.push_back(f);
    return w;
}

std::vector<std::size_t> complete_edge(const ClipWindow& clip) {
    if (clip.frames.empty()) throw data_error("complete_edge: clip has no real frames");
    std::vector<std::size_t> out(clip.missing_before, clip.frames.front());
    out.insert(out.end(), clip.frames.begin(), clip.frames.end());
    out.insert(out.end(), clip.missing_after, clip.frames.back());
    return out;
}

std::vector<std::size_t> complete_expand(const ClipWindow& clip) {
    if (clip.frames.empty()) throw data_error("complete_expand: clip has no real frames");
    const auto k_before = clip.missing_before;
    const auto k_after = clip.missing_after;
    if (k_before > clip.frames.size() || k_after > clip.frames.size()) {
        throw data_error("complete_expand: " + std::to_string(std::max(k_before, k_after)) +
                         " missing frames need at least as many real frames, have " +
                         std::to_string(clip.frames.size()));
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        out.push_back(clip.frames[i]);
        if (i < k_before) out.push_back(clip.frames[i]);
    }
    if (k_after > 0) {
        std::vector<std::size_t> tail;
        const auto split = out.size() - k_after;
        tail.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(split));
        for (auto i = split; i < out.size(); ++i) {
            tail.push_back(out[i]);
            tail.push_back(out[i]);
        }
        out = std::move(tail);
    }
    return out;
}

ClipPlan complete_roll(std::size_t video_length, std::size_t target, std::size_t length, std::size_t threshold) {
    if (video_length < length) {
        throw data_error("complete_roll: video length " + std::to_string(video_length) + " shorter than window " +
                         std::to_string(length));
    }
    const auto w = window(video_length, target, length);
    const auto center = (length - 1) / 2;
    const auto missing = std::max(w.missing_before, w.missing_after);
    if (missing <= threshold) return {complete_edge(w), center};

    const std::size_t first = w.missing_before > 0 ? 0 : video_length - length;
    ClipPlan plan;
    for (std::size_t i = 0; i < length; ++i) plan.frames.push_back(first + i);
    plan.target_offset = target - first;
    return plan;
}

ClipPlan make_clip(std::size_t video_length, std::size_t target, std::size_t length, const CompletionPolicy& policy) {
    const auto center = (length - 1) / 2;
    switch (policy.mode) {
        case CompletionMode::Edge:
            return {complete_edge(window(video_length, target, length)), center};
        case CompletionMode::Expand: {
            ClipPlan plan{complete_expand(window(video_length, target, length)), center};
            // Duplication can move the target away from the center; use its nearest copy.
            std::size_t best = plan.frames.size();
            for (std::size_t i = 0; i < plan.frames.size(); ++i) {
                if (plan.frames[i] != target) continue;
                const auto dist = i > center ? i - center : center - i;
                const auto best_dist = best > center ? best - center : center - best;
                if (best == plan.frames.size() || dist < best_dist) best = i;
            }
            plan.target_offset = best;
            return plan;
        }
        case CompletionMode::Roll:
            return complete_roll(video_length, target, length, policy.threshold);
    }
    throw config_error("unknown completion mode");
}

}  // namespace gsf
