#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "gsformer/errors.hpp"
#include "gsformer/flops.hpp"
#include "gsformer/ops.hpp"
#include "gsformer/params.hpp"

using namespace gsf;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = u(rng);
    return Tensor(std::move(shape), std::move(v));
}

// Weighted sum so every output element gets a distinct upstream gradient.
Tensor probe(const Tensor& y) {
    std::vector<double> w(y.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(0.37 * static_cast<double>(i) + 0.1);
    return sum(mul(y, Tensor(y.shape(), w)));
}

}  // namespace

TEST(Matmul, SmallExample) {
    const auto a = Tensor::from_rows({{1, 2}, {3, 4}});
    const auto b = Tensor::from_rows({{5, 6}, {7, 8}});
    const auto c = matmul(a, b);
    EXPECT_EQ(c.shape(), (Shape{2, 2}));
    EXPECT_DOUBLE_EQ(c.at({0, 0}), 19);
    EXPECT_DOUBLE_EQ(c.at({0, 1}), 22);
    EXPECT_DOUBLE_EQ(c.at({1, 0}), 43);
    EXPECT_DOUBLE_EQ(c.at({1, 1}), 50);
}

TEST(Matmul, MatchesNestedLoops) {
    std::mt19937_64 rng(3);
    const auto a = random_tensor({5, 7}, rng);
    const auto b = random_tensor({7, 4}, rng);
    const auto c = matmul(a, b);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 7; ++k) s += a.at({i, k}) * b.at({k, j});
            EXPECT_NEAR(c.at({i, j}), s, 1e-12);
        }
    }
}

TEST(Matmul, InnerDimensionMismatchThrows) {
    const Tensor a({2, 3});
    const Tensor b({4, 2});
    try {
        matmul(a, b);
        FAIL() << "expected a dimension error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
}

TEST(Matmul, CountsABCMacs) {
    FlopCounter counter;
    {
        CountingScope scope(counter);
        FlopScope label("probe");
        matmul(Tensor({3, 4}), Tensor({4, 5}));
        bmm(Tensor({2, 3, 4}), Tensor({2, 5, 4}), true);
    }
    EXPECT_EQ(counter.macs("probe"), 3u * 4 * 5 + 2u * 3 * 4 * 5);
    EXPECT_EQ(counter.total_macs(), counter.macs("probe"));
}

TEST(Bmm, TransposeMatchesExplicit) {
    std::mt19937_64 rng(5);
    const auto a = random_tensor({3, 2, 4}, rng);
    const auto b = random_tensor({3, 5, 4}, rng);
    const auto c = bmm(a, b, true);
    for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                double s = 0;
                for (std::size_t k = 0; k < 4; ++k) s += a.at({n, i, k}) * b.at({n, j, k});
                EXPECT_NEAR(c.at({n, i, j}), s, 1e-12);
            }
        }
    }
}

TEST(Softmax, SmallExample) {
    const auto y = softmax(Tensor({3}, {std::log(1.0), std::log(2.0), std::log(3.0)}), 0);
    EXPECT_NEAR(y.at({0}), 1.0 / 6, 1e-12);
    EXPECT_NEAR(y.at({1}), 2.0 / 6, 1e-12);
    EXPECT_NEAR(y.at({2}), 3.0 / 6, 1e-12);
}

TEST(Softmax, ShiftInvariantAndStableForLargeInputs) {
    const auto a = softmax(Tensor({3}, {1.0, 2.0, 3.0}), 0);
    const auto b = softmax(Tensor({3}, {1001.0, 1002.0, 1003.0}), 0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.at({i}), b.at({i}), 1e-12);
    EXPECT_TRUE(softmax(Tensor({2}, {1e308, -1e308}), 0).all_finite());
}

TEST(Softmax, RowsSumToOneAlongAnyAxis) {
    std::mt19937_64 rng(11);
    const auto x = random_tensor({4, 3, 5}, rng, -30, 30);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const auto y = softmax(x, axis);
        const auto& s = x.shape();
        std::size_t inner = 1;
        for (std::size_t a = axis + 1; a < 3; ++a) inner *= s[a];
        const std::size_t outer = x.size() / (s[axis] * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                double total = 0;
                for (std::size_t k = 0; k < s[axis]; ++k) total += y.values()[(o * s[axis] + k) * inner + i];
                EXPECT_NEAR(total, 1.0, 1e-12);
            }
        }
    }
}

TEST(Sigmoid, Examples) {
    EXPECT_DOUBLE_EQ(sigmoid(Tensor({1}, std::vector<double>{0.0})).item(), 0.5);
    EXPECT_NEAR(sigmoid(Tensor({1}, std::vector<double>{std::log(3.0)})).item(), 0.75, 1e-12);
    const auto extreme = sigmoid(Tensor({2}, {-800.0, 800.0}));
    EXPECT_TRUE(extreme.all_finite());
    EXPECT_GE(extreme.at({0}), 0.0);
    EXPECT_LE(extreme.at({1}), 1.0);
}

TEST(LayerNorm, TwoElementExample) {
    const auto y = layer_norm(Tensor({1, 2}, {1.0, 3.0}), Tensor::full({2}, 1.0), Tensor::zeros({2}));
    EXPECT_NEAR(y.at({0, 0}), -1.0, 1e-2);
    EXPECT_NEAR(y.at({0, 1}), 1.0, 1e-2);
}

TEST(LayerNorm, ZeroMeanUnitVariance) {
    std::mt19937_64 rng(2);
    const auto x = random_tensor({6, 16}, rng, -5, 5);
    const auto y = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}));
    for (std::size_t r = 0; r < 6; ++r) {
        double m = 0, v = 0;
        for (std::size_t c = 0; c < 16; ++c) m += y.at({r, c});
        m /= 16;
        for (std::size_t c = 0; c < 16; ++c) v += (y.at({r, c}) - m) * (y.at({r, c}) - m);
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(v / 16, 1.0, 1e-3);
    }
}

TEST(StridedGather, SkipSamplingExamples) {
    std::vector<double> rows(9 * 2);
    for (std::size_t t = 0; t < 9; ++t) rows[2 * t] = rows[2 * t + 1] = static_cast<double>(t);
    const Tensor x({9, 2}, rows);
    const auto y = strided_gather(x, {1, 4, 7});
    EXPECT_EQ(y.shape(), (Shape{3, 2}));
    EXPECT_DOUBLE_EQ(y.at({0, 0}), 1);
    EXPECT_DOUBLE_EQ(y.at({1, 0}), 4);
    EXPECT_DOUBLE_EQ(y.at({2, 0}), 7);
    EXPECT_THROW(strided_gather(x, {9}), Error);
}

TEST(GatherScatter, ScatterInvertsGather) {
    std::mt19937_64 rng(4);
    const auto x = random_tensor({6, 3}, rng);
    const std::vector<std::size_t> perm = {4, 1, 5, 0, 3, 2};
    const auto back = scatter_rows(gather_rows(x, perm), perm, 6);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(back.values()[i], x.values()[i]);
    EXPECT_THROW(scatter_rows(x, {0, 0, 1, 2, 3, 4}, 6), Error);
}

TEST(UnfoldRows, ConvolutionWindows) {
    const Tensor x({4, 1}, {1, 2, 3, 4});
    const auto same = unfold_rows(x, 1, 3, 1, 1);
    EXPECT_EQ(same.shape(), (Shape{4, 3}));
    EXPECT_EQ(std::vector<double>(same.values().begin(), same.values().end()),
              (std::vector<double>{0, 1, 2, 1, 2, 3, 2, 3, 4, 3, 4, 0}));
    const auto strided = unfold_rows(Tensor({6, 1}, {1, 2, 3, 4, 5, 6}), 1, 3, 3, 0);
    EXPECT_EQ(strided.shape(), (Shape{2, 3}));
    EXPECT_DOUBLE_EQ(strided.at({1, 0}), 4);
}

TEST(Tape, BackwardRejectsNonScalar) {
    Tape tape;
    TapeScope scope(tape);
    const auto x = Tensor::full({2, 2}, 1.0, true);
    const auto y = scale(x, 2.0);
    EXPECT_THROW(tape.backward(y), Error);
}

TEST(Tape, SumOfSquaresGradient) {
    Tape tape;
    TapeScope scope(tape);
    auto x = Tensor({3}, {1.0, -2.0, 0.5}, true);
    tape.backward(sum(mul(x, x)));
    ASSERT_TRUE(x.has_grad());
    EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], -4.0);
    EXPECT_DOUBLE_EQ(x.grad()[2], 1.0);
}

TEST(Tape, NoRecordingWithoutActiveTape) {
    auto x = Tensor::full({2}, 1.0, true);
    const auto y = sum(scale(x, 3.0));
    EXPECT_DOUBLE_EQ(y.item(), 6.0);
    EXPECT_EQ(Tape::current(), nullptr);
}

TEST(Tape, SharedInputAccumulates) {
    Tape tape;
    TapeScope scope(tape);
    auto x = Tensor({1}, std::vector<double>{3.0}, true);
    tape.backward(sum(add(mul(x, x), scale(x, 5.0))));
    EXPECT_DOUBLE_EQ(x.grad()[0], 11.0);
}

// ----- finite-difference checks of every differentiable kernel -------------------------

class KernelGrad : public ::testing::Test {
protected:
    std::mt19937_64 rng{17};
};

TEST_F(KernelGrad, Matmul) {
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({4, 2}, rng);
    EXPECT_LT(check_gradients([&] { return probe(matmul(a, b)); }, {a, b}).max_rel, 1e-6);
}

TEST_F(KernelGrad, Bmm) {
    auto a = random_tensor({2, 3, 4}, rng);
    auto b = random_tensor({2, 4, 5}, rng);
    auto c = random_tensor({2, 5, 4}, rng);
    EXPECT_LT(check_gradients([&] { return probe(bmm(a, b)); }, {a, b}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(bmm(a, c, true)); }, {a, c}).max_rel, 1e-6);
}

TEST_F(KernelGrad, Elementwise) {
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({3, 4}, rng);
    EXPECT_LT(check_gradients([&] { return probe(add(a, b)); }, {a, b}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(sub(a, b)); }, {a, b}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(mul(a, b)); }, {a, b}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(scale(a, -1.7)); }, {a}).max_rel, 1e-6);
}

TEST_F(KernelGrad, Activations) {
    auto x = random_tensor({4, 5}, rng, -3, 3);
    EXPECT_LT(check_gradients([&] { return probe(sigmoid(x)); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(gelu(x)); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(relu(x)); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(abs(x)); }, {x}).max_rel, 1e-6);
}

TEST_F(KernelGrad, SoftmaxEachAxis) {
    auto x = random_tensor({2, 3, 4}, rng, -2, 2);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        EXPECT_LT(check_gradients([&] { return probe(softmax(x, axis)); }, {x}).max_rel, 1e-6) << axis;
    }
}

TEST_F(KernelGrad, LayerNorm) {
    auto x = random_tensor({3, 6}, rng, -2, 2);
    auto g = random_tensor({6}, rng, 0.5, 1.5);
    auto b = random_tensor({6}, rng);
    EXPECT_LT(check_gradients([&] { return probe(layer_norm(x, g, b)); }, {x, g, b}).max_rel, 1e-6);
}

TEST_F(KernelGrad, LinearAndAddRows) {
    auto x = random_tensor({6, 3}, rng);
    auto w = random_tensor({3, 2}, rng);
    auto bias = random_tensor({2}, rng);
    auto periodic = random_tensor({3, 3}, rng);
    EXPECT_LT(check_gradients([&] { return probe(linear(x, w, bias)); }, {x, w, bias}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(add_rows(x, periodic)); }, {x, periodic}).max_rel, 1e-6);
}

TEST_F(KernelGrad, RowSelectionAndLayout) {
    auto x = random_tensor({5, 4}, rng);
    auto y = random_tensor({5, 2}, rng);
    EXPECT_LT(check_gradients([&] { return probe(gather_rows(x, {4, 0, 0, 2})); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(scatter_rows(x, {3, 0, 6, 1, 2}, 7)); }, {x}).max_rel,
              1e-6);
    EXPECT_LT(check_gradients([&] { return probe(concat_cols({x, y})); }, {x, y}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(concat_rows({x, x})); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(slice_cols(x, 1, 2)); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(reshape(x, {2, 10})); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(unfold_rows(x, 1, 3, 1, 1)); }, {x}).max_rel, 1e-6);
}

TEST_F(KernelGrad, Reductions) {
    auto x = random_tensor({4, 3}, rng);
    EXPECT_LT(check_gradients([&] { return mean(x); }, {x}).max_rel, 1e-6);
    EXPECT_LT(check_gradients([&] { return probe(row_norm(x)); }, {x}).max_rel, 1e-6);
}

TEST(ParamStore, InitializationBoundsAndDeterminism) {
    ParamStore a(9), b(9);
    const auto wa = a.uniform("w", {16, 8}, 16);
    const auto wb = b.uniform("w", {16, 8}, 16);
    for (std::size_t i = 0; i < wa.size(); ++i) {
        EXPECT_LE(std::abs(wa.values()[i]), 0.25);
        EXPECT_DOUBLE_EQ(wa.values()[i], wb.values()[i]);
    }
    EXPECT_THROW(a.uniform("w", {1}, 1), Error);
    EXPECT_EQ(a.count(), 128u);
}
