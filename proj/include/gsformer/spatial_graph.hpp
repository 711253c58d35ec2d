#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gsformer/params.hpp"
#include "gsformer/tensor.hpp"
#include "gsformer/trace.hpp"

namespace gsf {

// Partition of the joints into body-part node lists.
struct PartGrouping {
    std::vector<std::vector<std::size_t>> parts;

    // Human3.6M 17-joint order: trunk, left arm, right arm, left leg, right leg.
    static PartGrouping h36m17();
    // One node per joint (the joint-wise graph baseline).
    static PartGrouping singletons(std::size_t joints);

    std::size_t num_parts() const { return parts.size(); }
    std::size_t max_part_size() const;
    // Throws a config error unless the lists are disjoint and cover [0, joints).
    void validate(std::size_t joints) const;

    bool operator==(const PartGrouping&) const = default;
};

enum class Activation { Gelu, Relu };
enum class SpatialMode { AdaptiveGraph, Mlp, JointwiseGcn };

struct SpatialConfig {
    std::size_t joints = 17;
    std::size_t channels = 64;    // C, per-part feature width
    std::size_t model_dim = 256;  // D, pose token width
    Activation activation = Activation::Gelu;
    SpatialMode mode = SpatialMode::AdaptiveGraph;
    PartGrouping grouping = PartGrouping::h36m17();

    // Grouping actually used to build nodes (singletons for the joint-wise baseline).
    PartGrouping effective_grouping() const;
};

struct SpatialParams {
    Tensor mlp_w1, mlp_b1;  // (2*max_part x C), (C)
    Tensor mlp_w2, mlp_b2;  // (C x C), (C)
    Tensor pos;             // (nodes x C) positional embedding
    Tensor attn_w;          // (C x 1), undefined for the MLP baseline
    Tensor proj_w, proj_b;  // (nodes*2C x D) graph path; (nodes*C x D) for the MLP baseline
    Tensor joint_w, joint_b;  // (2J x D) joint residual

    static SpatialParams create(ParamStore& store, const SpatialConfig& config, const std::string& prefix = "spatial");
    static std::size_t count(const SpatialConfig& config);
};

// Frames are rows of interleaved (x, y) joint coordinates: (F x 2J).
// Returns (F*nodes x 2*max_part): each node's coordinates in listed order, zero-padded.
Tensor group_joints(const Tensor& frames, const PartGrouping& grouping);

// Shared two-layer MLP per node plus positional embedding: (F*nodes x C).
Tensor encode_parts(const Tensor& part_coords, const SpatialParams& params, Activation activation);

// Adjacency from additive attention: alpha_ij = sigmoid(<w, |f_i + f_j|>), shape (F x nodes x nodes).
Tensor part_attention(const Tensor& features, const Tensor& attn_w, std::size_t nodes);

// f'_i = [ act(sum_j alpha_ij f_j), f_i ]: (F*nodes x 2C).
Tensor aggregate_update(const Tensor& features, const Tensor& alpha, Activation activation);

// Per-frame pose token: graph path projected to D plus linear joint residual, (F x D).
// When `trace` is set, the frame-summed adjacency is appended as one "spatial" map.
Tensor spatial_forward(const Tensor& frames, const SpatialParams& params, const SpatialConfig& config,
                       AttentionTrace* trace = nullptr);

Tensor apply_activation(const Tensor& x, Activation activation);

}  // namespace gsf
