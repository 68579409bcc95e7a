#ifndef OWLEYE_GRADCAM_HPP
#define OWLEYE_GRADCAM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/imaging.hpp"
#include "owleye/nn/tensor.hpp"
#include "owleye/owlnet.hpp"

namespace owleye {

struct LocalizationMap {
    Grid<double> values;      // [0,1] at input resolution
    Grid<double> raw;         // ReLU(sum_k alpha_k A^k) at the target layer's resolution
    std::vector<double> weights;  // alpha_k, one per feature map
    int layer_index = 0;      // 1-based conv index
};

/// Bilinear resample of a scalar grid with half-pixel centers (the same
/// sampling rule as resize_normalize, without rounding).
inline Grid<double> resize_grid(const Grid<double>& g, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) fail(ErrorKind::InvalidArgument, "grid resize target must be positive");
    Grid<double> out(out_w, out_h);
    const double sx = static_cast<double>(g.width) / out_w;
    const double sy = static_cast<double>(g.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(g.height - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, g.height - 1);
        const double ty = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(g.width - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, g.width - 1);
            const double tx = fx - x0;
            const double top = g.at(x0, y0) * (1 - tx) + g.at(x1, y0) * tx;
            const double bot = g.at(x0, y1) * (1 - tx) + g.at(x1, y1) * tx;
            out.at(x, y) = top * (1 - ty) + bot * ty;
        }
    }
    return out;
}

/// Divides by the maximum; an all-zero grid stays zero.
inline Grid<double> normalize_by_max(Grid<double> g) {
    const double mx = g.values.empty() ? 0.0 : *std::max_element(g.values.begin(), g.values.end());
    if (mx > 0.0) {
        for (auto& v : g.values) v /= mx;
    } else {
        std::fill(g.values.begin(), g.values.end(), 0.0);
    }
    return g;
}

struct CamCore {
    std::vector<double> weights;
    Grid<double> raw;
};

/// Channel weights alpha_k = mean_ij dY/dA^k_ij and the map
/// ReLU(sum_k alpha_k A^k) for one sample. Both tensors are [1, K, h, w]
/// or [K, h, w].
template <typename T>
CamCore grad_cam_core(const nn::Tensor<T>& activations, const nn::Tensor<T>& gradients) {
    if (activations.shape() != gradients.shape()) fail(ErrorKind::Shape, "activation and gradient shapes differ");
    const auto& s = activations.shape();
    if (!(s.size() == 3 || (s.size() == 4 && s[0] == 1))) {
        fail(ErrorKind::Shape, "grad-cam expects one sample of [K,h,w] feature maps, got " + nn::to_string(s));
    }
    const std::size_t off = s.size() - 3;
    const std::size_t K = s[off], h = s[off + 1], w = s[off + 2];
    const std::size_t Z = h * w;

    CamCore core{std::vector<double>(K, 0.0), Grid<double>(static_cast<int>(w), static_cast<int>(h))};
    for (std::size_t k = 0; k < K; ++k) {
        double sum = 0;
        for (std::size_t i = 0; i < Z; ++i) sum += gradients[k * Z + i];
        core.weights[k] = sum / static_cast<double>(Z);
    }
    for (std::size_t i = 0; i < Z; ++i) {
        double acc = 0;
        for (std::size_t k = 0; k < K; ++k) acc += core.weights[k] * activations[k * Z + i];
        core.raw.values[i] = std::max(0.0, acc);
    }
    return core;
}

/// Grad-CAM for one preprocessed input [1,3,H,W]: backpropagates the
/// pre-softmax logit of target_class to the post-ReLU activations of conv
/// layer `conv_index` (default: the last conv), weights each feature map by
/// its mean gradient, and upsamples the rectified sum to H x W.
template <typename T>
LocalizationMap grad_cam(Network<T>& net, const nn::Tensor<T>& input, int target_class,
                         std::optional<std::size_t> conv_index = std::nullopt) {
    if (input.rank() != 4 || input.dim(0) != 1) fail(ErrorKind::Shape, "grad-cam takes a single [1,3,H,W] input");
    if (target_class != kClean && target_class != kBuggy) fail(ErrorKind::InvalidArgument, "target class must be 0 or 1");
    const std::size_t conv = conv_index.value_or(net.conv_count());
    const std::size_t layer = net.conv_activation_layer(conv);

    auto traced = net.forward_traced(input, layer);
    if (traced.activation.empty()) fail(ErrorKind::StaleCache, "target layer activation was not captured");
    nn::Tensor<T> seed(traced.logits.shape());
    seed[static_cast<std::size_t>(target_class)] = T(1);
    const nn::Tensor<T> grads = net.backward(seed, layer);

    CamCore core = grad_cam_core(traced.activation, grads);
    LocalizationMap map;
    map.weights = std::move(core.weights);
    map.raw = std::move(core.raw);
    map.layer_index = static_cast<int>(conv);
    map.values = normalize_by_max(resize_grid(map.raw, static_cast<int>(input.dim(3)), static_cast<int>(input.dim(2))));
    return map;
}

/// Grad-CAM for a screenshot; the map is at network input resolution
/// (the portrait, resized frame).
template <typename T>
LocalizationMap grad_cam(Network<T>& net, const RasterImage& img, int target_class,
                         std::optional<std::size_t> conv_index = std::nullopt) {
    nn::Tensor<T> x = preprocess<T>(img, net.config(), net.input_stats());
    return grad_cam(net, x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)}), target_class, conv_index);
}

/// First maximum in row-major order.
inline Point map_argmax(const Grid<double>& g) {
    const auto it = std::max_element(g.values.begin(), g.values.end());
    const auto i = static_cast<int>(std::distance(g.values.begin(), it));
    return {i % g.width, i / g.width};
}

/// Tight box around every pixel with value >= frac * max. Disjoint hot
/// spots yield one box spanning all of them.
inline BBox map_to_region(const LocalizationMap& map, double frac = 0.5) {
    if (!(frac > 0.0 && frac < 1.0)) fail(ErrorKind::InvalidArgument, "region fraction must be in (0,1)");
    const auto& g = map.values;
    const double mx = g.values.empty() ? 0.0 : *std::max_element(g.values.begin(), g.values.end());
    if (!(mx > 0.0)) fail(ErrorKind::DegenerateRegion, "localization map is all zero");
    BBox b{g.width, g.height, -1, -1};
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            if (g.at(x, y) >= frac * mx) {
                b.x1 = std::min(b.x1, x);
                b.y1 = std::min(b.y1, y);
                b.x2 = std::max(b.x2, x + 1);
                b.y2 = std::max(b.y2, y + 1);
            }
        }
    }
    return b;
}

/// Hit iff the map's argmax lies inside truth (x2/y2 exclusive). An
/// all-zero map is a miss.
inline bool localization_hit(const LocalizationMap& map, const BBox& truth) {
    const auto& g = map.values;
    if (g.values.empty() || *std::max_element(g.values.begin(), g.values.end()) <= 0.0) return false;
    const Point p = map_argmax(g);
    return truth.contains(p.x, p.y);
}

inline RasterImage overlay_heatmap(const RasterImage& img, const LocalizationMap& map, double alpha) {
    return overlay_heatmap(img, map.values, alpha);
}

}  // namespace owleye

#endif
