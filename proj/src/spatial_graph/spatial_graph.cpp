#include "gsformer/spatial_graph.hpp"

#include <algorithm>

#include "gsformer/errors.hpp"
#include "gsformer/flops.hpp"
#include "gsformer/ops.hpp"

namespace gsf {

PartGrouping PartGrouping::h36m17() {
    return PartGrouping{{
        {0, 7, 8, 9, 10},  // trunk: pelvis, spine, thorax, neck, head
        {11, 12, 13},      // left arm
        {14, 15, 16},      // right arm
        {4, 5, 6},         // left leg
        {1, 2, 3},         // right leg
    }};
}

PartGrouping PartGrouping::singletons(std::size_t joints) {
    PartGrouping g;
    for (std::size_t j = 0; j < joints; ++j) g.parts.push_back({j});
    return g;
}

std::size_t PartGrouping::max_part_size() const {
    std::size_t best = 0;
    for (const auto& p : parts) best = std::max(best, p.size());
    return best;
}

void PartGrouping::validate(std::size_t joints) const {
    if (parts.empty()) throw config_error("grouping: no parts");
    std::vector<int> hits(joints, 0);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p].empty()) throw config_error("grouping: part " + std::to_string(p) + " is empty");
        for (auto j : parts[p]) {
            if (j >= joints) {
                throw config_error("grouping: joint index " + std::to_string(j) + " out of range for J=" +
                                   std::to_string(joints));
            }
            if (hits[j]++) throw config_error("grouping: joint " + std::to_string(j) + " listed twice");
        }
    }
    for (std::size_t j = 0; j < joints; ++j) {
        if (!hits[j]) throw config_error("grouping: joint " + std::to_string(j) + " not assigned to any part");
    }
}

PartGrouping SpatialConfig::effective_grouping() const {
    return mode == SpatialMode::JointwiseGcn ? PartGrouping::singletons(joints) : grouping;
}

SpatialParams SpatialParams::create(ParamStore& store, const SpatialConfig& config, const std::string& prefix) {
    const auto grouping = config.effective_grouping();
    grouping.validate(config.joints);
    const auto nodes = grouping.num_parts();
    const auto in_width = 2 * grouping.max_part_size();
    const auto c = config.channels;
    const auto d = config.model_dim;

    SpatialParams p;
    p.mlp_w1 = store.uniform(prefix + ".mlp.w1", {in_width, c}, in_width);
    p.mlp_b1 = store.uniform(prefix + ".mlp.b1", {c}, in_width);
    p.mlp_w2 = store.uniform(prefix + ".mlp.w2", {c, c}, c);
    p.mlp_b2 = store.uniform(prefix + ".mlp.b2", {c}, c);
    p.pos = store.uniform(prefix + ".pos", {nodes, c}, c);
    std::size_t graph_width = nodes * c;
    if (config.mode != SpatialMode::Mlp) {
        p.attn_w = store.uniform(prefix + ".attn.w", {c, 1}, c);
        graph_width = nodes * 2 * c;
    }
    p.proj_w = store.uniform(prefix + ".proj.w", {graph_width, d}, graph_width);
    p.proj_b = store.uniform(prefix + ".proj.b", {d}, graph_width);
    p.joint_w = store.uniform(prefix + ".joint.w", {2 * config.joints, d}, 2 * config.joints);
    p.joint_b = store.uniform(prefix + ".joint.b", {d}, 2 * config.joints);
    return p;
}

std::size_t SpatialParams::count(const SpatialConfig& config) {
    const auto grouping = config.effective_grouping();
    const auto nodes = grouping.num_parts();
    const auto in_width = 2 * grouping.max_part_size();
    const auto c = config.channels;
    const auto d = config.model_dim;
    const bool graph = config.mode != SpatialMode::Mlp;
    const auto graph_width = nodes * c * (graph ? 2 : 1);
    return (in_width * c + c) + (c * c + c) + nodes * c + (graph ? c : 0) + (graph_width * d + d) +
           (2 * config.joints * d + d);
}

Tensor apply_activation(const Tensor& x, Activation activation) {
    return activation == Activation::Gelu ? gelu(x) : relu(x);
}

Tensor group_joints(const Tensor& frames, const PartGrouping& grouping) {
    if (frames.rank() != 2 || frames.dim(1) % 2 != 0) {
        throw dimension_error("group_joints: frames must be (F x 2J), got " + shape_str(frames.shape()));
    }
    const auto count = frames.dim(0);
    const auto joints = frames.dim(1) / 2;
    const auto nodes = grouping.num_parts();
    const auto width = 2 * grouping.max_part_size();
    std::vector<double> out(count * nodes * width, 0.0);
    const auto fv = frames.values();
    for (std::size_t f = 0; f < count; ++f) {
        for (std::size_t p = 0; p < nodes; ++p) {
            double* dst = out.data() + (f * nodes + p) * width;
            const auto& part = grouping.parts[p];
            for (std::size_t k = 0; k < part.size(); ++k) {
                if (part[k] >= joints) {
                    throw dimension_error("group_joints: joint index " + std::to_string(part[k]) +
                                          " out of range for J=" + std::to_string(joints));
                }
                dst[2 * k] = fv[f * 2 * joints + 2 * part[k]];
                dst[2 * k + 1] = fv[f * 2 * joints + 2 * part[k] + 1];
            }
        }
    }
    return Tensor({count * nodes, width}, std::move(out));
}

Tensor encode_parts(const Tensor& part_coords, const SpatialParams& params, Activation activation) {
    auto hidden = apply_activation(linear(part_coords, params.mlp_w1, params.mlp_b1), activation);
    return add_rows(linear(hidden, params.mlp_w2, params.mlp_b2), params.pos);
}

Tensor part_attention(const Tensor& features, const Tensor& attn_w, std::size_t nodes) {
    if (features.rank() != 2 || features.dim(0) % nodes != 0) {
        throw dimension_error("part_attention: features must be (F*nodes x C)");
    }
    const auto frames = features.dim(0) / nodes;
    std::vector<std::size_t> left, right;
    left.reserve(frames * nodes * nodes);
    right.reserve(frames * nodes * nodes);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t i = 0; i < nodes; ++i) {
            for (std::size_t j = 0; j < nodes; ++j) {
                left.push_back(f * nodes + i);
                right.push_back(f * nodes + j);
            }
        }
    }
    auto pair_sum = abs(add(gather_rows(features, left), gather_rows(features, right)));
    auto logits = matmul(pair_sum, attn_w);
    return reshape(sigmoid(logits), {frames, nodes, nodes});
}

Tensor aggregate_update(const Tensor& features, const Tensor& alpha, Activation activation) {
    if (alpha.rank() != 3 || alpha.dim(1) != alpha.dim(2)) {
        throw dimension_error("aggregate_update: alpha must be (F x N x N)");
    }
    const auto frames = alpha.dim(0), nodes = alpha.dim(1), channels = features.dim(1);
    if (features.dim(0) != frames * nodes) throw dimension_error("aggregate_update: feature rows != F*N");
    auto mixed = bmm(alpha, reshape(features, {frames, nodes, channels}));
    auto graph = apply_activation(reshape(mixed, {frames * nodes, channels}), activation);
    return concat_cols({graph, features});
}

Tensor spatial_forward(const Tensor& frames, const SpatialParams& params, const SpatialConfig& config,
                       AttentionTrace* trace) {
    FlopScope scope("spatial");
    if (frames.rank() != 2 || frames.dim(1) != 2 * config.joints) {
        throw dimension_error("spatial_forward: expected (F x " + std::to_string(2 * config.joints) + ") input, got " +
                              shape_str(frames.shape()));
    }
    const auto grouping = config.effective_grouping();
    const auto nodes = grouping.num_parts();
    const auto count = frames.dim(0);

    auto features = encode_parts(group_joints(frames, grouping), params, config.activation);
    Tensor node_out = features;
    if (config.mode != SpatialMode::Mlp) {
        auto alpha = part_attention(features, params.attn_w, nodes);
        if (trace != nullptr) {
            AttentionMap map{"spatial", 0, 0, 0, nodes, nodes, std::vector<double>(nodes * nodes, 0.0)};
            const auto av = alpha.values();
            for (std::size_t f = 0; f < count; ++f) {
                for (std::size_t k = 0; k < nodes * nodes; ++k) map.values[k] += av[f * nodes * nodes + k];
            }
            trace->maps.push_back(std::move(map));
        }
        node_out = aggregate_update(features, alpha, config.activation);
    }
    auto flat = reshape(node_out, {count, node_out.size() / count});
    auto graph_path = linear(flat, params.proj_w, params.proj_b);
    auto joint_path = linear(frames, params.joint_w, params.joint_b);
    return add(graph_path, joint_path);
}

}  // namespace gsf
