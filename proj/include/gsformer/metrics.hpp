#pragma once

#include <cstddef>
#include <span>

namespace gsf {

// Poses are flattened (N x J x 3) arrays; errors are means over all N*J joints.
double mpjpe(std::span<const double> pred, std::span<const double> gt, std::size_t joints);

struct ProcrustesResult {
    double value = 0.0;
    bool degenerate = false;  // some frame had all joints coincident; its error is unaligned
};

// MPJPE after per-frame similarity alignment (rotation, uniform scale, translation) of
// the prediction onto the ground truth.
ProcrustesResult p_mpjpe(std::span<const double> pred, std::span<const double> gt, std::size_t joints);

}  // namespace gsf
