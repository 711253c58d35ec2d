#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "gsformer/errors.hpp"
#include "gsformer/ops.hpp"
#include "gsformer/spatial_graph.hpp"

using namespace gsf;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = u(rng);
    return Tensor(std::move(shape), std::move(v));
}

void zero(Tensor t) {
    for (auto& v : t.mutable_values()) v = 0.0;
}

SpatialConfig small_config() {
    SpatialConfig cfg;
    cfg.channels = 6;
    cfg.model_dim = 8;
    return cfg;
}

}  // namespace

TEST(PartGrouping, DefaultPartSizes) {
    const auto g = PartGrouping::h36m17();
    ASSERT_EQ(g.num_parts(), 5u);
    std::vector<std::size_t> sizes;
    for (const auto& p : g.parts) sizes.push_back(p.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{5, 3, 3, 3, 3}));
    EXPECT_NO_THROW(g.validate(17));
}

TEST(PartGrouping, ValidationRejectsOverlapGapsAndRange) {
    EXPECT_THROW((PartGrouping{{{0, 1}, {1, 2}}}.validate(3)), Error);
    EXPECT_THROW((PartGrouping{{{0}, {2}}}.validate(3)), Error);
    EXPECT_THROW((PartGrouping{{{0, 1, 2, 3}}}.validate(3)), Error);
}

TEST(GroupJoints, CoordinatesInListedOrderZeroPadded) {
    std::vector<double> frame(34);
    for (std::size_t j = 0; j < 17; ++j) {
        frame[2 * j] = static_cast<double>(j);
        frame[2 * j + 1] = 100.0 + static_cast<double>(j);
    }
    const auto grouping = PartGrouping::h36m17();
    const auto parts = group_joints(Tensor({1, 34}, frame), grouping);
    ASSERT_EQ(parts.shape(), (Shape{5, 10}));
    for (std::size_t p = 0; p < 5; ++p) {
        const auto& list = grouping.parts[p];
        for (std::size_t k = 0; k < 5; ++k) {
            const double x = k < list.size() ? static_cast<double>(list[k]) : 0.0;
            const double y = k < list.size() ? 100.0 + static_cast<double>(list[k]) : 0.0;
            EXPECT_DOUBLE_EQ(parts.at({p, 2 * k}), x);
            EXPECT_DOUBLE_EQ(parts.at({p, 2 * k + 1}), y);
        }
    }
}

TEST(GroupJoints, PermutedPartListPermutesCoordinates) {
    std::mt19937_64 rng(1);
    const auto frame = random_tensor({1, 34}, rng);
    auto grouping = PartGrouping::h36m17();
    const auto base = group_joints(frame, grouping);
    std::swap(grouping.parts[1][0], grouping.parts[1][2]);
    const auto permuted = group_joints(frame, grouping);
    EXPECT_DOUBLE_EQ(permuted.at({1, 0}), base.at({1, 4}));
    EXPECT_DOUBLE_EQ(permuted.at({1, 1}), base.at({1, 5}));
    EXPECT_DOUBLE_EQ(permuted.at({1, 2}), base.at({1, 2}));
    EXPECT_DOUBLE_EQ(permuted.at({1, 4}), base.at({1, 0}));
}

TEST(GroupJoints, ZeroPoseAndOutOfRange) {
    const auto parts = group_joints(Tensor({1, 34}), PartGrouping::h36m17());
    for (double v : parts.values()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(group_joints(Tensor({1, 10}), PartGrouping::h36m17()), Error);
}

TEST(EncodeParts, ZeroMlpGivesPositionalEmbedding) {
    ParamStore store(2);
    auto params = SpatialParams::create(store, small_config());
    zero(params.mlp_w1), zero(params.mlp_b1), zero(params.mlp_w2), zero(params.mlp_b2);
    std::mt19937_64 rng(3);
    const auto f = encode_parts(group_joints(random_tensor({3, 34}, rng), PartGrouping::h36m17()), params,
                                Activation::Gelu);
    ASSERT_EQ(f.shape(), (Shape{15, 6}));
    for (std::size_t r = 0; r < 15; ++r) {
        for (std::size_t c = 0; c < 6; ++c) EXPECT_DOUBLE_EQ(f.at({r, c}), params.pos.at({r % 5, c}));
    }
}

TEST(EncodeParts, HandSetWeightsMatchProjection) {
    // E_pos = 0, ReLU MLP with w1 = [I; 0], w2 = I on non-negative inputs: output = padded coordinates.
    ParamStore store(2);
    auto cfg = small_config();
    cfg.channels = 10;
    cfg.activation = Activation::Relu;
    auto params = SpatialParams::create(store, cfg);
    zero(params.pos), zero(params.mlp_b1), zero(params.mlp_b2), zero(params.mlp_w1), zero(params.mlp_w2);
    for (std::size_t i = 0; i < 10; ++i) {
        params.mlp_w1.mutable_values()[i * 10 + i] = 1.0;
        params.mlp_w2.mutable_values()[i * 10 + i] = 1.0;
    }
    std::mt19937_64 rng(4);
    const auto coords = group_joints(random_tensor({2, 34}, rng, 0.0, 1.0), PartGrouping::h36m17());
    const auto f = encode_parts(coords, params, Activation::Relu);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f.values()[i], coords.values()[i], 1e-15);
}

TEST(PartAttention, ZeroWeightGivesOneHalf) {
    std::mt19937_64 rng(5);
    const auto alpha = part_attention(random_tensor({10, 4}, rng), Tensor({4, 1}), 5);
    ASSERT_EQ(alpha.shape(), (Shape{2, 5, 5}));
    for (double a : alpha.values()) EXPECT_DOUBLE_EQ(a, 0.5);
}

TEST(PartAttention, SymmetricAndOpenUnitInterval) {
    std::mt19937_64 rng(6);
    const auto alpha = part_attention(random_tensor({15, 6}, rng, -2, 2), random_tensor({6, 1}, rng), 5);
    for (std::size_t f = 0; f < 3; ++f) {
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                const double a = alpha.at({f, i, j});
                EXPECT_GT(a, 0.0);
                EXPECT_LT(a, 1.0);
                EXPECT_DOUBLE_EQ(a, alpha.at({f, j, i}));
            }
        }
    }
}

TEST(PartAttention, LogitLn3GivesThreeQuarters) {
    // Nodes f0 = (ln3, 0), f1 = (0, 0): e_01 = <(1, 1), |f0 + f1|> = ln 3.
    const Tensor features({2, 2}, {std::log(3.0), 0.0, 0.0, 0.0});
    const auto alpha = part_attention(features, Tensor({2, 1}, {1.0, 1.0}), 2);
    EXPECT_NEAR(alpha.at({0, 0, 1}), 0.75, 1e-12);
    EXPECT_NEAR(alpha.at({0, 1, 1}), 0.5, 1e-12);
}

TEST(AggregateUpdate, ZeroAlphaKeepsOriginalHalf) {
    std::mt19937_64 rng(7);
    const auto f = random_tensor({5, 3}, rng);
    const auto out = aggregate_update(f, Tensor({1, 5, 5}), Activation::Gelu);
    ASSERT_EQ(out.shape(), (Shape{5, 6}));
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_DOUBLE_EQ(out.at({i, c}), 0.0);
            EXPECT_DOUBLE_EQ(out.at({i, 3 + c}), f.at({i, c}));
        }
    }
}

TEST(AggregateUpdate, SingleNodeIdentityAdjacency) {
    const Tensor f({1, 3}, {0.5, -1.0, 2.0});
    const auto out = aggregate_update(f, Tensor({1, 1, 1}, std::vector<double>{1.0}), Activation::Gelu);
    const auto act = gelu(f);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_DOUBLE_EQ(out.at({0, c}), act.at({0, c}));
        EXPECT_DOUBLE_EQ(out.at({0, 3 + c}), f.at({0, c}));
    }
}

TEST(AggregateUpdate, MatchesNestedLoopReference) {
    std::mt19937_64 rng(8);
    const auto f = random_tensor({2, 4}, rng);
    const auto alpha = random_tensor({1, 2, 2}, rng, 0, 1);
    const auto out = aggregate_update(f, alpha, Activation::Gelu);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t c = 0; c < 4; ++c) {
            double s = 0;
            for (std::size_t j = 0; j < 2; ++j) s += alpha.at({0, i, j}) * f.at({j, c});
            const double expected = 0.5 * s * (1.0 + std::erf(s / std::sqrt(2.0)));
            EXPECT_NEAR(out.at({i, c}), expected, 1e-12);
        }
    }
}

class SpatialForward : public ::testing::Test {
protected:
    SpatialConfig cfg = small_config();
    ParamStore store{9};
    SpatialParams params = SpatialParams::create(store, cfg);
    std::mt19937_64 rng{10};
};

TEST_F(SpatialForward, AdditiveDecomposition) {
    const auto frames = random_tensor({4, 34}, rng);
    const auto full = spatial_forward(frames, params, cfg);
    ASSERT_EQ(full.shape(), (Shape{4, 8}));

    auto graph_only = params;
    graph_only.joint_w = Tensor({34, 8});
    graph_only.joint_b = Tensor({8});
    auto joint_only = params;
    joint_only.proj_w = Tensor(params.proj_w.shape());
    joint_only.proj_b = Tensor({8});
    const auto g = spatial_forward(frames, graph_only, cfg);
    const auto j = spatial_forward(frames, joint_only, cfg);
    const auto joint = linear(frames, params.joint_w, params.joint_b);
    for (std::size_t i = 0; i < full.size(); ++i) {
        EXPECT_NEAR(full.values()[i], g.values()[i] + j.values()[i], 1e-12);
        EXPECT_NEAR(j.values()[i], joint.values()[i], 1e-12);
    }
}

TEST_F(SpatialForward, FrameLocal) {
    const auto frames = random_tensor({4, 34}, rng);
    const auto base = spatial_forward(frames, params, cfg);
    auto changed_values = std::vector<double>(frames.values().begin(), frames.values().end());
    for (std::size_t k = 0; k < 34; ++k) changed_values[2 * 34 + k] += 0.3;
    const auto changed = spatial_forward(Tensor({4, 34}, changed_values), params, cfg);
    for (std::size_t r = 0; r < 4; ++r) {
        double diff = 0;
        for (std::size_t c = 0; c < 8; ++c) diff += std::abs(base.at({r, c}) - changed.at({r, c}));
        if (r == 2) EXPECT_GT(diff, 0.0);
        else EXPECT_EQ(diff, 0.0);
    }
}

TEST_F(SpatialForward, FramePermutationEquivariant) {
    const auto frames = random_tensor({3, 34}, rng);
    const std::vector<std::size_t> perm = {2, 0, 1};
    const auto a = gather_rows(spatial_forward(frames, params, cfg), perm);
    const auto b = spatial_forward(gather_rows(frames, perm), params, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
}

TEST_F(SpatialForward, TraceHoldsFiveByFiveMap) {
    AttentionTrace trace;
    spatial_forward(random_tensor({3, 34}, rng), params, cfg, &trace);
    ASSERT_EQ(trace.maps.size(), 1u);
    EXPECT_EQ(trace.maps[0].rows, 5u);
    EXPECT_EQ(trace.maps[0].cols, 5u);
}

TEST_F(SpatialForward, GradientCheck) {
    const auto frames = random_tensor({2, 34}, rng);
    std::vector<Tensor> tensors = {params.mlp_w1, params.mlp_b1, params.mlp_w2, params.mlp_b2, params.pos,
                                   params.attn_w, params.proj_w, params.proj_b, params.joint_w, params.joint_b};
    const auto report = check_gradients(
        [&] {
            auto y = spatial_forward(frames, params, cfg);
            return sum(mul(y, y));
        },
        tensors);
    EXPECT_LT(report.max_rel, 1e-4) << "worst tensor " << report.worst;
}

TEST(SpatialBaselines, MlpAndJointwiseShapes) {
    ParamStore store(1);
    auto cfg = small_config();
    cfg.mode = SpatialMode::Mlp;
    const auto mlp = SpatialParams::create(store, cfg, "mlp");
    EXPECT_FALSE(mlp.attn_w.defined());
    EXPECT_EQ(mlp.proj_w.shape(), (Shape{5 * 6, 8}));
    EXPECT_EQ(spatial_forward(Tensor({2, 34}), mlp, cfg).shape(), (Shape{2, 8}));

    cfg.mode = SpatialMode::JointwiseGcn;
    EXPECT_EQ(cfg.effective_grouping().num_parts(), 17u);
    const auto gcn = SpatialParams::create(store, cfg, "gcn");
    EXPECT_EQ(gcn.pos.shape(), (Shape{17, 6}));
    AttentionTrace trace;
    spatial_forward(Tensor({1, 34}), gcn, cfg, &trace);
    EXPECT_EQ(trace.maps.at(0).rows, 17u);
}

TEST(SpatialParamsCount, MatchesStore) {
    for (auto mode : {SpatialMode::AdaptiveGraph, SpatialMode::Mlp, SpatialMode::JointwiseGcn}) {
        ParamStore store(1);
        auto cfg = small_config();
        cfg.mode = mode;
        SpatialParams::create(store, cfg);
        EXPECT_EQ(store.count(), SpatialParams::count(cfg));
    }
}
