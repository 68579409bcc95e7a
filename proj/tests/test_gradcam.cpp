#include <gtest/gtest.h>

#include "owleye/gradcam.hpp"
#include "owleye/synth/synthetic_ui.hpp"

using namespace owleye;

namespace {

LocalizationMap map_from(int w, int h, std::vector<double> v) {
    LocalizationMap m;
    m.values = Grid<double>(w, h);
    m.values.values = std::move(v);
    return m;
}

}  // namespace

TEST(Core, HandOracle) {
    nn::Tensor<double> a({1, 2, 2}, std::vector<double>{1, -1, 0, 2});
    nn::Tensor<double> g({1, 2, 2}, 1.0);
    const auto core = grad_cam_core(a, g);
    ASSERT_EQ(core.weights.size(), 1u);
    EXPECT_EQ(core.weights[0], 1.0);
    EXPECT_EQ(core.raw.values, (std::vector<double>{1, 0, 0, 2}));
    EXPECT_EQ(normalize_by_max(core.raw).values, (std::vector<double>{0.5, 0, 0, 1}));
}

TEST(Core, ZeroGradientGivesZeroMap) {
    nn::Tensor<double> a({1, 3, 2, 2}, 5.0);
    const auto core = grad_cam_core(a, nn::Tensor<double>({1, 3, 2, 2}));
    for (double w : core.weights) EXPECT_EQ(w, 0.0);
    for (double v : normalize_by_max(core.raw).values) EXPECT_EQ(v, 0.0);
}

TEST(Core, OppositeWeightsCancel) {
    nn::Tensor<double> a({2, 2, 2}, std::vector<double>{1, 2, 3, 4, 1, 2, 3, 4});
    nn::Tensor<double> g({2, 2, 2}, std::vector<double>{1, 1, 1, 1, -1, -1, -1, -1});
    for (double v : grad_cam_core(a, g).raw.values) EXPECT_EQ(v, 0.0);
}

TEST(Core, WeightsAreMeanGradients) {
    nn::Tensor<double> a({2, 1, 2}, 1.0);
    nn::Tensor<double> g({2, 1, 2}, std::vector<double>{1, 3, -2, 0});
    const auto core = grad_cam_core(a, g);
    EXPECT_EQ(core.weights, (std::vector<double>{2.0, -1.0}));
    EXPECT_EQ(core.raw.values, (std::vector<double>{1.0, 1.0}));
}

TEST(Core, PositiveScalingLeavesNormalizedMap) {
    Rng rng(4);
    nn::Tensor<double> a({3, 4, 5}), g({3, 4, 5});
    for (auto& v : a.values()) v = rng.uniform(0, 2);
    for (auto& v : g.values()) v = rng.uniform(-1, 1);
    nn::Tensor<double> g7 = g;
    for (auto& v : g7.values()) v *= 7.0;
    const auto c1 = grad_cam_core(a, g), c7 = grad_cam_core(a, g7);
    for (std::size_t i = 0; i < c1.raw.values.size(); ++i) EXPECT_NEAR(c7.raw.values[i], 7 * c1.raw.values[i], 1e-12);
    const auto n1 = normalize_by_max(c1.raw), n7 = normalize_by_max(c7.raw);
    for (std::size_t i = 0; i < n1.values.size(); ++i) EXPECT_NEAR(n1.values[i], n7.values[i], 1e-12);
    EXPECT_EQ(map_argmax(n1), map_argmax(n7));
}

TEST(Core, ShapeErrors) {
    EXPECT_THROW(grad_cam_core(nn::Tensor<double>({1, 2, 2}), nn::Tensor<double>({1, 2, 3})), Error);
    EXPECT_THROW(grad_cam_core(nn::Tensor<double>({2, 1, 2, 2}), nn::Tensor<double>({2, 1, 2, 2})), Error);
}

TEST(Resize, ConstantAndIdentity) {
    Grid<double> g(3, 2, 0.4);
    for (double v : resize_grid(g, 12, 9).values) EXPECT_NEAR(v, 0.4, 1e-15);
    Grid<double> r(2, 2);
    r.values = {1, 2, 3, 4};
    EXPECT_EQ(resize_grid(r, 2, 2).values, r.values);
}

TEST(Resize, ArgmaxStaysNearSourceCell) {
    Rng rng(8);
    for (int t = 0; t < 30; ++t) {
        Grid<double> g(6, 4);
        // A dominant peak; with near-ties interpolation between two high
        // neighbours can outrank it.
        for (auto& v : g.values) v = rng.uniform(0.0, 0.5);
        g.values[rng.below(g.values.size())] = 1.0;
        const Point src = map_argmax(g);
        const Point up = map_argmax(resize_grid(g, 48, 32));
        // Footprint of the source cell, widened by one interpolation cell.
        EXPECT_GE(up.x, (src.x - 1) * 8);
        EXPECT_LT(up.x, (src.x + 2) * 8);
        EXPECT_GE(up.y, (src.y - 1) * 8);
        EXPECT_LT(up.y, (src.y + 2) * 8);
    }
}

TEST(Region, SingleHotPixel) {
    std::vector<double> v(40 * 30, 0.0);
    v[20 * 40 + 10] = 1.0;
    EXPECT_EQ(map_to_region(map_from(40, 30, v)), (BBox{10, 20, 11, 21}));
}

TEST(Region, UniformMapIsFullImage) {
    EXPECT_EQ(map_to_region(map_from(5, 4, std::vector<double>(20, 0.3))), (BBox{0, 0, 5, 4}));
}

TEST(Region, DisjointBlobsUnion) {
    std::vector<double> v(20 * 20, 0.0);
    for (int y = 2; y < 4; ++y)
        for (int x = 1; x < 3; ++x) v[static_cast<std::size_t>(y * 20 + x)] = 0.9;
    for (int y = 15; y < 18; ++y)
        for (int x = 12; x < 16; ++x) v[static_cast<std::size_t>(y * 20 + x)] = 1.0;
    EXPECT_EQ(map_to_region(map_from(20, 20, v)), (BBox{1, 2, 16, 18}));
    EXPECT_EQ(map_to_region(map_from(20, 20, v), 0.95), (BBox{12, 15, 16, 18}));
}

TEST(Region, ErrorsOnZeroMapAndBadFraction) {
    try {
        map_to_region(map_from(3, 3, std::vector<double>(9, 0.0)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateRegion);
    }
    EXPECT_THROW(map_to_region(map_from(1, 1, {1.0}), 1.0), Error);
    EXPECT_THROW(map_to_region(map_from(1, 1, {1.0}), 0.0), Error);
}

TEST(Hit, InsideOutsideAndBoundary) {
    std::vector<double> v(10 * 10, 0.0);
    v[5 * 10 + 7] = 1.0;  // argmax (7,5)
    const auto m = map_from(10, 10, v);
    EXPECT_TRUE(localization_hit(m, {7, 5, 8, 6}));
    EXPECT_FALSE(localization_hit(m, {0, 0, 7, 10}));
    EXPECT_FALSE(localization_hit(m, {0, 0, 10, 5}));
    EXPECT_FALSE(localization_hit(map_from(10, 10, std::vector<double>(100, 0.0)), {0, 0, 10, 10}));
}

TEST(Hit, TiesGoToFirstRowMajor) {
    std::vector<double> v(4 * 4, 0.0);
    v[1 * 4 + 3] = 1.0;
    v[2 * 4 + 0] = 1.0;
    const auto m = map_from(4, 4, v);
    EXPECT_EQ(map_argmax(m.values), (Point{3, 1}));
    EXPECT_TRUE(localization_hit(m, {3, 1, 4, 2}));
    EXPECT_FALSE(localization_hit(m, {0, 2, 1, 3}));
}

TEST(Network, MapShapeRangeAndDeterminism) {
    Network<float> net(desk_preset(), 3);
    const auto img = synth::make_screen(5, 1).image;
    const auto a = grad_cam(net, img, kBuggy);
    EXPECT_EQ(a.values.width, 128);
    EXPECT_EQ(a.values.height, 192);
    EXPECT_EQ(a.raw.width, 4);
    EXPECT_EQ(a.raw.height, 6);
    EXPECT_EQ(a.weights.size(), 32u);
    EXPECT_EQ(a.layer_index, 12);
    double mx = 0;
    for (double v : a.values.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        mx = std::max(mx, v);
    }
    EXPECT_TRUE(mx == 1.0 || mx == 0.0);
    const auto b = grad_cam(net, img, kBuggy);
    EXPECT_EQ(a.values.values, b.values.values);
    EXPECT_EQ(grad_cam(net, img, kBuggy, 8).raw.width, 16);
    EXPECT_THROW(grad_cam(net, img, 2), Error);
}

TEST(Network, WeightsMatchManualBackprop) {
    // alpha_0 is the mean over the 6x4 plane of the buggy logit's gradient
    // at conv12's activation, seeded by hand.
    Network<double> net(desk_preset(), 9);
    Rng rng(2);
    nn::Tensor<double> x({1, 3, 192, 128});
    for (auto& v : x.values()) v = rng.normal();
    const auto m = grad_cam(net, x, kBuggy);
    const std::size_t layer = net.conv_activation_layer(12);
    auto traced = net.forward_traced(x, layer);
    nn::Tensor<double> seed(traced.logits.shape());
    seed[kBuggy] = 1.0;
    const auto grads = net.backward(seed, layer);
    double sum = 0;
    for (std::size_t i = 0; i < 24; ++i) sum += grads[i];
    EXPECT_NEAR(m.weights[0], sum / 24.0, 1e-12);
}

TEST(Overlay, ZeroAlphaIsIdentity) {
    const auto img = synth::make_screen(1, 1).image;
    LocalizationMap m;
    m.values = Grid<double>(img.width(), img.height(), 0.7);
    EXPECT_EQ(overlay_heatmap(img, m, 0.0), img);
}
