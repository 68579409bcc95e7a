#ifndef OWLEYE_OWLNET_HPP
#define OWLEYE_OWLNET_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "owleye/augmentor.hpp"
#include "owleye/error.hpp"
#include "owleye/imaging.hpp"
#include "owleye/metrics.hpp"
#include "owleye/nn/layers.hpp"
#include "owleye/nn/tensor.hpp"
#include "owleye/rng.hpp"

namespace owleye {

enum class ScalePreset { Paper, Desk, Custom };

inline std::string_view to_string(ScalePreset p) {
    switch (p) {
        case ScalePreset::Paper: return "paper";
        case ScalePreset::Desk: return "desk";
        case ScalePreset::Custom: return "custom";
    }
    return "custom";
}

struct NetworkConfig {
    int input_h = 768;
    int input_w = 448;
    std::vector<int> conv_channels;
    std::set<int> pool_after;  // 1-based conv indices followed by a 2x2 max pool
    std::vector<int> fc_sizes; // last entry is the class count
    double bn_momentum = 0.1;
    ScalePreset preset = ScalePreset::Custom;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// 768x448 input, 12 conv layers (16/32/64/128 kernels), a pool after every
/// second conv, fully connected widths 4096/1024/128/2.
inline NetworkConfig paper_preset() {
    return {768, 448, {16, 16, 16, 16, 32, 32, 64, 64, 128, 128, 128, 128}, {2, 4, 6, 8, 10, 12}, {4096, 1024, 128, 2},
            0.1, ScalePreset::Paper};
}

/// Same topology at quarter width and 192x128 input, for CPU-scale runs.
inline NetworkConfig desk_preset() {
    return {192, 128, {4, 4, 4, 4, 8, 8, 16, 16, 32, 32, 32, 32}, {2, 4, 6, 8, 10, 12}, {256, 64, 32, 2}, 0.1,
            ScalePreset::Desk};
}

inline NetworkConfig preset_config(std::string_view name) {
    if (name == "paper") return paper_preset();
    if (name == "desk") return desk_preset();
    fail(ErrorKind::Config, "unknown preset '" + std::string(name) + "' (expected paper or desk)");
}

struct LayerShape {
    std::string name;
    nn::Shape shape;  // per-sample, without the batch axis
};

/// Per-sample activation shapes after every layer, computed without
/// allocating parameters. Throws Config when a pool meets an odd extent.
inline std::vector<LayerShape> shape_chain(const NetworkConfig& cfg) {
    if (cfg.input_h < 1 || cfg.input_w < 1) fail(ErrorKind::Config, "input dimensions must be positive");
    if (cfg.conv_channels.empty()) fail(ErrorKind::Config, "at least one conv layer is required");
    if (cfg.fc_sizes.empty() || cfg.fc_sizes.back() != 2) {
        fail(ErrorKind::Config, "the last fully connected layer must have 2 outputs (clean, buggy)");
    }
    for (int p : cfg.pool_after) {
        if (p < 1 || p > static_cast<int>(cfg.conv_channels.size())) {
            fail(ErrorKind::Config, "pool position " + std::to_string(p) + " does not name a conv layer");
        }
    }
    if (!(cfg.bn_momentum >= 0.0 && cfg.bn_momentum <= 1.0)) fail(ErrorKind::Config, "bn momentum must be in [0,1]");

    std::vector<LayerShape> chain;
    std::size_t c = 3, h = static_cast<std::size_t>(cfg.input_h), w = static_cast<std::size_t>(cfg.input_w);
    chain.push_back({"input", {c, h, w}});
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
        const int k = cfg.conv_channels[i];
        if (k < 1) fail(ErrorKind::Config, "conv channel counts must be positive");
        c = static_cast<std::size_t>(k);
        const std::string idx = std::to_string(i + 1);
        chain.push_back({"conv" + idx, {c, h, w}});
        if (cfg.pool_after.count(static_cast<int>(i + 1))) {
            if (h % 2 || w % 2) {
                fail(ErrorKind::Config, "pool after conv" + idx + " meets odd spatial size " + std::to_string(h) + "x" +
                                            std::to_string(w));
            }
            h /= 2;
            w /= 2;
            chain.push_back({"pool_after_conv" + idx, {c, h, w}});
        }
    }
    chain.push_back({"flatten", {c * h * w}});
    for (std::size_t i = 0; i < cfg.fc_sizes.size(); ++i) {
        if (cfg.fc_sizes[i] < 1) fail(ErrorKind::Config, "fully connected widths must be positive");
        chain.push_back({"fc" + std::to_string(i + 1), {static_cast<std::size_t>(cfg.fc_sizes[i])}});
    }
    return chain;
}

inline void validate(const NetworkConfig& cfg) { (void)shape_chain(cfg); }

/// Fixed per-channel standardization applied after scaling pixels to [0,1].
struct ChannelStats {
    std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
    std::array<float, 3> stddev{1.0f, 1.0f, 1.0f};

    friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

inline constexpr double kOutputInitStd = 0.01;

inline constexpr int kClean = 0;
inline constexpr int kBuggy = 1;

/// [Conv -> BN -> ReLU] per conv entry with max pools at the configured
/// positions, then [FC -> ReLU] for the hidden widths and a final FC to the
/// two logits. Softmax is applied by the caller.
template <typename T>
class Network {
public:
    using LayerVariant = std::variant<nn::Conv2d<T>, nn::BatchNorm2d<T>, nn::Relu<T>, nn::MaxPool2x2<T>, nn::Linear<T>>;

    explicit Network(NetworkConfig cfg, std::uint64_t seed = 0) : cfg_(std::move(cfg)) {
        const auto chain = shape_chain(cfg_);
        Rng rng(seed);
        std::size_t in_ch = 3;
        for (std::size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
            const auto k = static_cast<std::size_t>(cfg_.conv_channels[i]);
            const std::string idx = std::to_string(i + 1);
            add("conv" + idx, nn::Conv2d<T>(in_ch, k, rng, "conv" + idx));
            add("bn" + idx, nn::BatchNorm2d<T>(k, cfg_.bn_momentum, "bn" + idx));
            add("relu" + idx, nn::Relu<T>());
            conv_activation_index_.push_back(layers_.size() - 1);
            if (cfg_.pool_after.count(static_cast<int>(i + 1))) add("pool" + idx, nn::MaxPool2x2<T>());
            in_ch = k;
        }
        std::size_t features = chain[chain.size() - cfg_.fc_sizes.size() - 1].shape[0];
        for (std::size_t i = 0; i < cfg_.fc_sizes.size(); ++i) {
            const auto width = static_cast<std::size_t>(cfg_.fc_sizes[i]);
            const std::string idx = std::to_string(i + 1);
            nn::Linear<T> fc(features, width, rng, "fc" + idx);
            if (i + 1 < cfg_.fc_sizes.size()) {
                add("fc" + idx, std::move(fc));
                add("fc_relu" + idx, nn::Relu<T>());
            } else {
                // Output layer starts near zero so the initial softmax is near uniform.
                for (auto& v : fc.weight.value.values()) v = static_cast<T>(rng.normal() * kOutputInitStd);
                add("fc" + idx, std::move(fc));
            }
            features = width;
        }
    }

    const NetworkConfig& config() const { return cfg_; }
    std::size_t layer_count() const { return layers_.size(); }
    const std::string& layer_name(std::size_t i) const { return names_.at(i); }
    std::size_t conv_count() const { return conv_activation_index_.size(); }

    /// Index of the ReLU output that follows conv `conv_index` (1-based).
    std::size_t conv_activation_layer(std::size_t conv_index) const {
        if (conv_index < 1 || conv_index > conv_activation_index_.size()) {
            fail(ErrorKind::InvalidArgument, "conv layer " + std::to_string(conv_index) + " does not exist");
        }
        return conv_activation_index_[conv_index - 1];
    }

    ChannelStats& input_stats() { return stats_; }
    const ChannelStats& input_stats() const { return stats_; }

    /// Logits [N, 2].
    nn::Tensor<T> forward(const nn::Tensor<T>& x, bool training) {
        nn::Tensor<T> a = x;
        for (auto& layer : layers_) {
            a = std::visit([&](auto& l) { return l.forward(a, training); }, layer);
        }
        return a;
    }

    struct Traced {
        nn::Tensor<T> logits;
        nn::Tensor<T> activation;
    };

    /// Inference-mode forward that keeps every cache, returning the output
    /// of layer `capture` alongside the logits.
    Traced forward_traced(const nn::Tensor<T>& x, std::size_t capture) {
        Traced out;
        nn::Tensor<T> a = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            a = std::visit(
                [&](auto& l) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(l)>, nn::BatchNorm2d<T>>) {
                        return l.forward_inference_traced(a);
                    } else {
                        return l.forward(a, false);
                    }
                },
                layers_[i]);
            if (i == capture) out.activation = a;
        }
        out.logits = std::move(a);
        return out;
    }

    /// Backpropagates from the logits. Returns the gradient with respect to
    /// the output of layer `stop_after`, or the network input when absent.
    nn::Tensor<T> backward(const nn::Tensor<T>& grad_logits, std::optional<std::size_t> stop_after = std::nullopt) {
        nn::Tensor<T> g = grad_logits;
        const std::size_t end = stop_after ? *stop_after + 1 : 0;
        for (std::size_t i = layers_.size(); i-- > end;) {
            g = std::visit([&](auto& l) { return l.backward(g); }, layers_[i]);
        }
        return g;
    }

    std::vector<nn::Param<T>*> params() {
        std::vector<nn::Param<T>*> out;
        for (auto& layer : layers_) {
            std::visit([&](auto& l) { for (auto* p : l.params()) out.push_back(p); }, layer);
        }
        return out;
    }

    std::vector<nn::Buffer<T>*> buffers() {
        std::vector<nn::Buffer<T>*> out;
        for (auto& layer : layers_) {
            std::visit([&](auto& l) { for (auto* b : l.buffers()) out.push_back(b); }, layer);
        }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto* p : params()) n += p->value.size();
        return n;
    }

    /// Parameter and buffer values, for best-epoch snapshots.
    std::vector<nn::Tensor<T>> state() {
        std::vector<nn::Tensor<T>> s;
        for (auto* p : params()) s.push_back(p->value);
        for (auto* b : buffers()) s.push_back(b->value);
        return s;
    }

    void restore(const std::vector<nn::Tensor<T>>& s) {
        std::size_t i = 0;
        for (auto* p : params()) p->value = s.at(i++);
        for (auto* b : buffers()) b->value = s.at(i++);
    }

private:
    template <typename L>
    void add(std::string name, L layer) {
        names_.push_back(std::move(name));
        layers_.emplace_back(std::move(layer));
    }

    NetworkConfig cfg_;
    std::vector<LayerVariant> layers_;
    std::vector<std::string> names_;
    std::vector<std::size_t> conv_activation_index_;
    ChannelStats stats_;
};

template <typename T = float>
Network<T> build_network(const NetworkConfig& cfg, std::uint64_t seed = 0) {
    return Network<T>(cfg, seed);
}

// ---------------------------------------------------------------------------
// Data

/// Rotate landscape screens to portrait, then stretch to the network input.
inline RasterImage fit_to_input(const RasterImage& img, const NetworkConfig& cfg) {
    return resize_normalize(rotate_to_portrait(img), cfg.input_h, cfg.input_w);
}

/// Writes a fitted image into dst as [3, H, W], scaled to [0,1] then
/// standardized per channel.
template <typename T>
void write_input(const RasterImage& fitted, const ChannelStats& stats, T* dst) {
    const std::size_t plane = static_cast<std::size_t>(fitted.width()) * fitted.height();
    const auto& px = fitted.data();
    for (std::size_t c = 0; c < 3; ++c) {
        const T mean = static_cast<T>(stats.mean[c]);
        const T inv = static_cast<T>(1.0f / stats.stddev[c]);
        for (std::size_t i = 0; i < plane; ++i) dst[c * plane + i] = (static_cast<T>(px[i * 3 + c]) / T(255) - mean) * inv;
    }
}

/// Full preprocessing of one screenshot to a [3, H, W] tensor.
template <typename T = float>
nn::Tensor<T> preprocess(const RasterImage& img, const NetworkConfig& cfg, const ChannelStats& stats) {
    const RasterImage fitted = fit_to_input(img, cfg);
    nn::Tensor<T> t({3, static_cast<std::size_t>(cfg.input_h), static_cast<std::size_t>(cfg.input_w)});
    write_input(fitted, stats, t.data());
    return t;
}

struct Example {
    RasterImage image;  // already fitted to the network input
    int label = kClean;
    std::optional<BugCategory> category;
    std::string source_id;
    std::optional<BBox> bug_region;
};

using Dataset = std::vector<Example>;

/// Translates by (dx, dy), replicating edge pixels into the uncovered band.
inline RasterImage shift_image(const RasterImage& img, int dx, int dy) {
    if (dx == 0 && dy == 0) return img;
    RasterImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        const int sy = std::clamp(y - dy, 0, img.height() - 1);
        for (int x = 0; x < img.width(); ++x) out.set(x, y, img.at(std::clamp(x - dx, 0, img.width() - 1), sy));
    }
    return out;
}

template <typename T>
nn::Tensor<T> make_batch(std::span<const Example* const> examples, const ChannelStats& stats) {
    const Example& first = *examples.front();
    const auto h = static_cast<std::size_t>(first.image.height());
    const auto w = static_cast<std::size_t>(first.image.width());
    nn::Tensor<T> x({examples.size(), 3, h, w});
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i]->image.width() != first.image.width() || examples[i]->image.height() != first.image.height()) {
            fail(ErrorKind::Shape, "examples in a batch must share one size");
        }
        write_input(examples[i]->image, stats, x.data() + i * 3 * h * w);
    }
    return x;
}

/// Mean and standard deviation of each channel (in [0,1] units) over a
/// dataset of fitted images.
inline ChannelStats compute_channel_stats(const Dataset& data) {
    ChannelStats s;
    if (data.empty()) return s;
    std::array<double, 3> sum{}, sq{};
    double n = 0;
    for (const auto& ex : data) {
        const auto& px = ex.image.data();
        for (std::size_t i = 0; i < px.size(); i += 3) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = px[i + c] / 255.0;
                sum[c] += v;
                sq[c] += v * v;
            }
        }
        n += static_cast<double>(px.size() / 3);
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const double mean = sum[c] / n;
        const double var = std::max(0.0, sq[c] / n - mean * mean);
        s.mean[c] = static_cast<float>(mean);
        s.stddev[c] = var > 1e-12 ? static_cast<float>(std::sqrt(var)) : 1.0f;
    }
    return s;
}

/// App id of a source: the text before the first '/', else before the last
/// '_', else the whole id.
inline std::string app_id(std::string_view source_id) {
    if (auto slash = source_id.find('/'); slash != std::string_view::npos) return std::string(source_id.substr(0, slash));
    if (auto us = source_id.rfind('_'); us != std::string_view::npos && us > 0) return std::string(source_id.substr(0, us));
    return std::string(source_id);
}

/// Throws Config when any app contributes screenshots to both sets.
inline void require_disjoint_apps(const Dataset& a, const Dataset& b) {
    std::set<std::string> apps;
    for (const auto& ex : a) apps.insert(app_id(ex.source_id));
    for (const auto& ex : b) {
        if (apps.count(app_id(ex.source_id))) {
            fail(ErrorKind::Config, "app '" + app_id(ex.source_id) + "' appears in both training and validation data");
        }
    }
}

// ---------------------------------------------------------------------------
// Inference and evaluation

struct Detection {
    bool buggy = false;
    double p_buggy = 0.0;
};

inline constexpr double kDecisionThreshold = 0.5;

template <typename T>
std::vector<Detection> detect_batch(Network<T>& net, const nn::Tensor<T>& x) {
    const nn::Tensor<T> logits = net.forward(x, false);
    const std::vector<int> dummy(logits.dim(0), 0);
    const auto sm = nn::softmax_cross_entropy(logits, dummy);
    std::vector<Detection> out(logits.dim(0));
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n].p_buggy = sm.probs[n * 2 + kBuggy];
        out[n].buggy = out[n].p_buggy >= kDecisionThreshold;
    }
    return out;
}

/// Inference-mode classification of one screenshot.
template <typename T>
Detection classify(Network<T>& net, const RasterImage& img) {
    nn::Tensor<T> x = preprocess<T>(img, net.config(), net.input_stats());
    x = x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
    return detect_batch(net, x).front();
}

template <typename T>
std::vector<Detection> classify_all(Network<T>& net, const Dataset& data, std::size_t batch = 16) {
    std::vector<Detection> out;
    out.reserve(data.size());
    std::vector<const Example*> ptrs;
    for (std::size_t i = 0; i < data.size(); i += batch) {
        ptrs.clear();
        for (std::size_t j = i; j < std::min(data.size(), i + batch); ++j) ptrs.push_back(&data[j]);
        const auto dets = detect_batch(net, make_batch<T>(ptrs, net.input_stats()));
        out.insert(out.end(), dets.begin(), dets.end());
    }
    return out;
}

template <typename T>
MetricsReport evaluate(Network<T>& net, const Dataset& data) {
    MetricsReport report;
    const auto dets = classify_all(net, data);
    for (std::size_t i = 0; i < data.size(); ++i) report.add(data[i].label == kBuggy, data[i].category, dets[i].buggy);
    return report;
}

// ---------------------------------------------------------------------------
// Training

struct TrainHyper {
    int epochs = 100;
    std::size_t batch_size = 16;
    double lr = 0.01;
    double momentum = 0.9;
    std::vector<int> lr_milestones{60, 85};
    double lr_decay = 0.1;
    std::uint64_t seed = 0;
    /// Recompute input standardization from the training set before training.
    bool fit_input_stats = true;
    /// L2 penalty on conv and FC weights (not biases or BN parameters).
    double weight_decay = 0.0;
    /// Each training image is shifted by up to this many pixels per axis,
    /// edges replicated. 0 disables.
    int jitter_px = 0;
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double lr = 0;
    double train_loss = 0;
    double train_accuracy = 0;
    std::optional<double> val_f1;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    std::optional<double> best_val_f1;
};

inline double learning_rate_at(const TrainHyper& h, int epoch0) {
    double lr = h.lr;
    for (int m : h.lr_milestones) {
        if (epoch0 >= m) lr *= h.lr_decay;
    }
    return lr;
}

namespace detail {

template <typename T>
std::string layer_norm_report(Network<T>& net) {
    std::string s;
    for (auto* p : net.params()) {
        if (!s.empty()) s += ", ";
        s += p->name + "=" + std::to_string(std::sqrt(p->value.squared_norm()));
    }
    return s;
}

}  // namespace detail

/// Shuffled mini-batch momentum SGD on softmax cross-entropy. After every
/// epoch the validation F1 is measured; the network is left holding the
/// parameters of the best-F1 epoch (the latest one on ties), or of the
/// final epoch when there is no validation data.
template <typename T>
TrainResult train(Network<T>& net, const Dataset& train_set, const Dataset& val_set, const TrainHyper& hyper,
                  const std::function<void(const EpochStats&)>& on_epoch = {}) {
    if (train_set.empty()) fail(ErrorKind::InvalidArgument, "training set is empty");
    if (hyper.batch_size < 1) fail(ErrorKind::InvalidArgument, "batch size must be >= 1");
    if (hyper.lr < 0) fail(ErrorKind::InvalidArgument, "learning rate must be >= 0");
    require_disjoint_apps(train_set, val_set);
    if (hyper.fit_input_stats) net.input_stats() = compute_channel_stats(train_set);

    Rng rng(hyper.seed);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    std::vector<nn::Tensor<T>> best_state;
    std::vector<const Example*> batch;
    std::vector<Example> jittered;
    std::vector<int> labels;
    const auto params = net.params();

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        const double lr = learning_rate_at(hyper, epoch);
        rng.shuffle(order);
        double loss_sum = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0, b = 0; start < order.size(); start += hyper.batch_size, ++b) {
            batch.clear();
            labels.clear();
            jittered.clear();
            for (std::size_t j = start; j < std::min(order.size(), start + hyper.batch_size); ++j) {
                const Example& ex = train_set[order[j]];
                if (hyper.jitter_px > 0) {
                    const auto span = static_cast<std::uint64_t>(2 * hyper.jitter_px + 1);
                    const int dx = static_cast<int>(rng.below(span)) - hyper.jitter_px;
                    const int dy = static_cast<int>(rng.below(span)) - hyper.jitter_px;
                    jittered.push_back({shift_image(ex.image, dx, dy), ex.label, ex.category, ex.source_id, std::nullopt});
                }
                labels.push_back(ex.label);
            }
            if (hyper.jitter_px > 0) {
                for (const auto& ex : jittered) batch.push_back(&ex);
            } else {
                for (std::size_t j = start; j < std::min(order.size(), start + hyper.batch_size); ++j) batch.push_back(&train_set[order[j]]);
            }
            const nn::Tensor<T> x = make_batch<T>(batch, net.input_stats());
            const nn::Tensor<T> logits = net.forward(x, true);
            const auto sm = nn::softmax_cross_entropy(logits, labels);
            if (!std::isfinite(sm.loss) || !logits.all_finite()) {
                fail(ErrorKind::Numeric, "non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                             std::to_string(b) + "; parameter norms: " + detail::layer_norm_report(net));
            }
            net.backward(sm.grad_logits);
            for (auto* p : params) nn::sgd_step(*p, lr, hyper.momentum, p->value.rank() > 1 ? hyper.weight_decay : 0.0);
            loss_sum += sm.loss * static_cast<double>(batch.size());
            for (std::size_t n = 0; n < batch.size(); ++n) {
                const bool pred_buggy = sm.probs[n * 2 + kBuggy] >= kDecisionThreshold;
                correct += pred_buggy == (labels[n] == kBuggy);
            }
        }

        EpochStats st;
        st.epoch = epoch + 1;
        st.lr = lr;
        st.train_loss = loss_sum / static_cast<double>(order.size());
        st.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        if (!val_set.empty()) {
            const auto f1 = evaluate(net, val_set).overall.f1();
            st.val_f1 = f1.value_or(0.0);
            if (!result.best_val_f1 || *st.val_f1 >= *result.best_val_f1) {
                result.best_val_f1 = st.val_f1;
                result.best_epoch = st.epoch;
                best_state = net.state();
            }
        } else {
            result.best_epoch = st.epoch;
        }
        result.history.push_back(st);
        if (on_epoch) on_epoch(st);
    }
    if (!best_state.empty()) net.restore(best_state);
    return result;
}

}  // namespace owleye

#endif
