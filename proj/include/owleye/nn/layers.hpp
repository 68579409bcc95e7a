#ifndef OWLEYE_NN_LAYERS_HPP
#define OWLEYE_NN_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/nn/tensor.hpp"
#include "owleye/rng.hpp"

namespace owleye::nn {

// ===========================================================================
// Kernels. Each forward returns its output; each backward takes the forward
// inputs (the cache) and the upstream gradient.

/// 3x3 convolution, stride 1, zero padding 1: spatial size is preserved.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    require_rank(x.shape(), 4, "conv2d input");
    require_rank(w.shape(), 4, "conv2d weight");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t K = w.dim(0);
    if (w.dim(1) != C || w.dim(2) != 3 || w.dim(3) != 3) {
        fail(ErrorKind::Shape, "conv2d weight " + to_string(w.shape()) + " does not match input " + to_string(x.shape()));
    }
    if (b.size() != K) fail(ErrorKind::Shape, "conv2d bias length does not match output channels");

    Tensor<T> y({N, K, H, W});
    const std::size_t plane = H * W;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
            T* out = y.data() + (n * K + k) * plane;
            std::fill(out, out + plane, b[k]);
            for (std::size_t c = 0; c < C; ++c) {
                const T* in = x.data() + (n * C + c) * plane;
                const T* wk = w.data() + (k * C + c) * 9;
                for (int di = 0; di < 3; ++di) {
                    for (int dj = 0; dj < 3; ++dj) {
                        const T wv = wk[di * 3 + dj];
                        const std::size_t j0 = dj == 0 ? 1 : 0;
                        const std::size_t j1 = dj == 2 ? W - 1 : W;
                        for (std::size_t i = 0; i < H; ++i) {
                            const long r = static_cast<long>(i) + di - 1;
                            if (r < 0 || r >= static_cast<long>(H)) continue;
                            T* __restrict orow = out + i * W;
                            const T* __restrict irow = in + static_cast<std::size_t>(r) * W + dj - 1;
                            for (std::size_t j = j0; j < j1; ++j) orow[j] += wv * irow[j];
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
struct ConvGrads {
    Tensor<T> dx;
    Tensor<T> dw;
    Tensor<T> db;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out) {
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t K = w.dim(0);
    if (grad_out.shape() != Shape{N, K, H, W}) fail(ErrorKind::Shape, "conv2d upstream gradient has the wrong shape");

    ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({K})};
    const std::size_t plane = H * W;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
            const T* go = grad_out.data() + (n * K + k) * plane;
            T bsum = 0;
            for (std::size_t p = 0; p < plane; ++p) bsum += go[p];
            g.db[k] += bsum;
            for (std::size_t c = 0; c < C; ++c) {
                const T* in = x.data() + (n * C + c) * plane;
                T* din = g.dx.data() + (n * C + c) * plane;
                const T* wk = w.data() + (k * C + c) * 9;
                T* dwk = g.dw.data() + (k * C + c) * 9;
                for (int di = 0; di < 3; ++di) {
                    for (int dj = 0; dj < 3; ++dj) {
                        const T wv = wk[di * 3 + dj];
                        const std::size_t j0 = dj == 0 ? 1 : 0;
                        const std::size_t j1 = dj == 2 ? W - 1 : W;
                        T acc = 0;
                        for (std::size_t i = 0; i < H; ++i) {
                            const long r = static_cast<long>(i) + di - 1;
                            if (r < 0 || r >= static_cast<long>(H)) continue;
                            const T* __restrict grow = go + i * W;
                            const T* __restrict irow = in + static_cast<std::size_t>(r) * W + dj - 1;
                            T* __restrict drow = din + static_cast<std::size_t>(r) * W + dj - 1;
                            T row_acc = 0;
                            for (std::size_t j = j0; j < j1; ++j) {
                                row_acc += grow[j] * irow[j];
                                drow[j] += wv * grow[j];
                            }
                            acc += row_acc;
                        }
                        dwk[di * 3 + dj] += acc;
                    }
                }
            }
        }
    }
    return g;
}

inline constexpr double kBatchNormEpsilon = 1e-5;

template <typename T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<double> inv_std;  // per channel
    Tensor<T> gamma;
};

/// Per-channel statistics over every axis except 1 ([N,C] or [N,C,H,W]).
template <typename T>
struct ChannelLayout {
    std::size_t outer = 0;    // N
    std::size_t channels = 0; // C
    std::size_t inner = 0;    // H*W (1 for rank 2)

    explicit ChannelLayout(const Shape& s) {
        if (s.size() != 2 && s.size() != 4) fail(ErrorKind::Shape, "batch norm expects rank 2 or 4, got " + to_string(s));
        outer = s[0];
        channels = s[1];
        inner = s.size() == 4 ? s[2] * s[3] : 1;
    }
    std::size_t count() const { return outer * inner; }
};

/// Training mode normalizes with batch statistics and folds them into the
/// running estimates: r <- (1 - momentum) r + momentum * stat. The running
/// variance uses the unbiased batch variance. Inference mode normalizes with
/// the running estimates.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& f, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                            Tensor<T>& running_var, double momentum, bool training,
                            BatchNormCache<T>* cache = nullptr, double eps = kBatchNormEpsilon) {
    const ChannelLayout<T> L(f.shape());
    if (gamma.size() != L.channels || beta.size() != L.channels || running_mean.size() != L.channels ||
        running_var.size() != L.channels) {
        fail(ErrorKind::Shape, "batch norm parameters do not match channel count");
    }
    if (L.count() == 0) fail(ErrorKind::Shape, "batch norm over an empty batch");
    Tensor<T> y(f.shape());
    if (cache) {
        cache->xhat = Tensor<T>(f.shape());
        cache->inv_std.assign(L.channels, 0.0);
        cache->gamma = gamma;
    }
    for (std::size_t c = 0; c < L.channels; ++c) {
        double mean, var;
        if (training) {
            double s = 0;
            for (std::size_t n = 0; n < L.outer; ++n) {
                const T* p = f.data() + (n * L.channels + c) * L.inner;
                for (std::size_t i = 0; i < L.inner; ++i) s += p[i];
            }
            mean = s / static_cast<double>(L.count());
            double ss = 0;
            for (std::size_t n = 0; n < L.outer; ++n) {
                const T* p = f.data() + (n * L.channels + c) * L.inner;
                for (std::size_t i = 0; i < L.inner; ++i) {
                    const double d = p[i] - mean;
                    ss += d * d;
                }
            }
            var = ss / static_cast<double>(L.count());
            const double unbiased = L.count() > 1 ? ss / static_cast<double>(L.count() - 1) : var;
            running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * mean);
            running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * unbiased);
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps);
        const double g = gamma[c];
        const double bt = beta[c];
        for (std::size_t n = 0; n < L.outer; ++n) {
            const std::size_t off = (n * L.channels + c) * L.inner;
            for (std::size_t i = 0; i < L.inner; ++i) {
                const double xh = (f[off + i] - mean) * inv_std;
                if (cache) cache->xhat[off + i] = static_cast<T>(xh);
                y[off + i] = static_cast<T>(g * xh + bt);
            }
        }
        if (cache) cache->inv_std[c] = inv_std;
    }
    return y;
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> dx;
    Tensor<T> dgamma;
    Tensor<T> dbeta;
};

/// Gradient through the batch mean and variance (training-mode forward).
template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& grad_out) {
    if (grad_out.shape() != cache.xhat.shape()) fail(ErrorKind::Shape, "batch norm upstream gradient has the wrong shape");
    const ChannelLayout<T> L(grad_out.shape());
    BatchNormGrads<T> g{Tensor<T>(grad_out.shape()), Tensor<T>({L.channels}), Tensor<T>({L.channels})};
    const double m = static_cast<double>(L.count());
    for (std::size_t c = 0; c < L.channels; ++c) {
        double sum_g = 0, sum_gx = 0;
        for (std::size_t n = 0; n < L.outer; ++n) {
            const std::size_t off = (n * L.channels + c) * L.inner;
            for (std::size_t i = 0; i < L.inner; ++i) {
                sum_g += grad_out[off + i];
                sum_gx += static_cast<double>(grad_out[off + i]) * cache.xhat[off + i];
            }
        }
        g.dbeta[c] = static_cast<T>(sum_g);
        g.dgamma[c] = static_cast<T>(sum_gx);
        const double scale = cache.gamma[c] * cache.inv_std[c] / m;
        for (std::size_t n = 0; n < L.outer; ++n) {
            const std::size_t off = (n * L.channels + c) * L.inner;
            for (std::size_t i = 0; i < L.inner; ++i) {
                g.dx[off + i] = static_cast<T>(scale * (m * grad_out[off + i] - sum_g - cache.xhat[off + i] * sum_gx));
            }
        }
    }
    return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    return y;
}

/// Gradient passes only where x > 0; the subgradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
    if (grad_out.shape() != x.shape()) fail(ErrorKind::Shape, "relu upstream gradient has the wrong shape");
    Tensor<T> dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? grad_out[i] : T(0);
    return dx;
}

template <typename T>
struct PoolResult {
    Tensor<T> y;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// 2x2 max pooling, stride 2. Ties go to the first maximum in row-major order.
template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& x) {
    require_rank(x.shape(), 4, "max pool input");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 || W % 2) fail(ErrorKind::Shape, "max pool needs even spatial dims, got " + to_string(x.shape()));
    const std::size_t Ho = H / 2, Wo = W / 2;
    PoolResult<T> r{Tensor<T>({N, C, Ho, Wo}), std::vector<std::uint32_t>(N * C * Ho * Wo)};
    std::size_t o = 0;
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const std::size_t base = nc * H * W;
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j, ++o) {
                std::size_t best = base + (2 * i) * W + 2 * j;
                const std::size_t cand[3] = {best + 1, best + W, best + W + 1};
                for (std::size_t q : cand) {
                    if (x[q] > x[best]) best = q;
                }
                r.y[o] = x[best];
                r.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return r;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor<T>& grad_out) {
    if (grad_out.size() != argmax.size()) fail(ErrorKind::Shape, "max pool upstream gradient has the wrong shape");
    Tensor<T> dx(input_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += grad_out[o];
    return dx;
}

/// x[N,D] * w[D,M] + b[M]. Inputs of higher rank are flattened per sample.
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    require_rank(w.shape(), 2, "fc weight");
    const std::size_t N = x.dim(0);
    const std::size_t D = w.dim(0), M = w.dim(1);
    if (x.size() != N * D) fail(ErrorKind::Shape, "fc input " + to_string(x.shape()) + " does not match weight " + to_string(w.shape()));
    if (b.size() != M) fail(ErrorKind::Shape, "fc bias length does not match output width");
    Tensor<T> y({N, M});
    for (std::size_t n = 0; n < N; ++n) {
        T* __restrict out = y.data() + n * M;
        for (std::size_t m = 0; m < M; ++m) out[m] = b[m];
        const T* xin = x.data() + n * D;
        for (std::size_t d = 0; d < D; ++d) {
            const T xv = xin[d];
            if (xv == T(0)) continue;
            const T* __restrict wr = w.data() + d * M;
            for (std::size_t m = 0; m < M; ++m) out[m] += xv * wr[m];
        }
    }
    return y;
}

template <typename T>
struct FcGrads {
    Tensor<T> dx;
    Tensor<T> dw;
    Tensor<T> db;
};

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out) {
    const std::size_t N = x.dim(0);
    const std::size_t D = w.dim(0), M = w.dim(1);
    if (grad_out.shape() != Shape{N, M}) fail(ErrorKind::Shape, "fc upstream gradient has the wrong shape");
    FcGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({M})};
    for (std::size_t n = 0; n < N; ++n) {
        const T* go = grad_out.data() + n * M;
        const T* xin = x.data() + n * D;
        T* dxn = g.dx.data() + n * D;
        for (std::size_t m = 0; m < M; ++m) g.db[m] += go[m];
        for (std::size_t d = 0; d < D; ++d) {
            const T* __restrict wr = w.data() + d * M;
            T* __restrict dwr = g.dw.data() + d * M;
            const T xv = xin[d];
            T acc = 0;
            for (std::size_t m = 0; m < M; ++m) {
                acc += go[m] * wr[m];
                dwr[m] += xv * go[m];
            }
            dxn[d] = acc;
        }
    }
    return g;
}

template <typename T>
struct SoftmaxCE {
    double loss = 0;
    Tensor<T> probs;
    Tensor<T> grad_logits;
};

/// Row-wise softmax with max subtraction. loss is the batch mean of
/// -log p[label]; grad_logits = (probs - onehot) / N.
template <typename T>
SoftmaxCE<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    require_rank(logits.shape(), 2, "softmax logits");
    const std::size_t N = logits.dim(0), K = logits.dim(1);
    if (labels.size() != N) fail(ErrorKind::Shape, "label count does not match batch size");
    SoftmaxCE<T> r{0.0, Tensor<T>(logits.shape()), Tensor<T>(logits.shape())};
    for (std::size_t n = 0; n < N; ++n) {
        const int label = labels[n];
        if (label < 0 || static_cast<std::size_t>(label) >= K) {
            fail(ErrorKind::InvalidArgument, "label " + std::to_string(label) + " out of range for " + std::to_string(K) + " classes");
        }
        const T* z = logits.data() + n * K;
        double zmax = z[0];
        for (std::size_t k = 1; k < K; ++k) zmax = std::max<double>(zmax, z[k]);
        double denom = 0;
        for (std::size_t k = 0; k < K; ++k) denom += std::exp(z[k] - zmax);
        const double log_denom = std::log(denom);
        for (std::size_t k = 0; k < K; ++k) {
            const double p = std::exp(z[k] - zmax - log_denom);
            r.probs[n * K + k] = static_cast<T>(p);
            r.grad_logits[n * K + k] = static_cast<T>((p - (static_cast<std::size_t>(label) == k ? 1.0 : 0.0)) / N);
        }
        r.loss += -(z[label] - zmax - log_denom);
    }
    r.loss /= static_cast<double>(N);
    return r;
}

// ===========================================================================
// Layers: kernels plus parameters and the forward cache.

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> velocity;

    Param() = default;
    Param(std::string n, Tensor<T> v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()), velocity(value.shape()) {}
};

/// Named non-trainable state (batch norm running statistics).
template <typename T>
struct Buffer {
    std::string name;
    Tensor<T> value;
};

[[noreturn]] inline void stale(const char* layer) {
    fail(ErrorKind::StaleCache, std::string(layer) + " backward called without a preceding forward");
}

/// He-normal initialization: N(0, 2 / fan_in).
template <typename T>
Tensor<T> he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
    Tensor<T> t(std::move(shape));
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.values()) v = static_cast<T>(rng.normal() * sd);
    return t;
}

template <typename T>
class Conv2d {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, Rng& rng, const std::string& name)
        : weight(name + ".weight", he_normal<T>({out_ch, in_ch, 3, 3}, in_ch * 9, rng)),
          bias(name + ".bias", Tensor<T>({out_ch})) {}

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        cache_ = x;
        return conv2d_forward(x, weight.value, bias.value);
    }

    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!cache_) stale("conv2d");
        auto g = conv2d_backward(*cache_, weight.value, grad_out);
        cache_.reset();
        weight.grad = std::move(g.dw);
        bias.grad = std::move(g.db);
        return std::move(g.dx);
    }

    std::vector<Param<T>*> params() { return {&weight, &bias}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    Shape output_shape(const Shape& in) const { return {in[0], weight.value.dim(0), in[2], in[3]}; }
    std::size_t out_channels() const { return weight.value.dim(0); }

    Param<T> weight;
    Param<T> bias;

private:
    std::optional<Tensor<T>> cache_;
};

template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d(std::size_t channels, double momentum, const std::string& name)
        : gamma(name + ".gamma", Tensor<T>({channels}, T(1))),
          beta(name + ".beta", Tensor<T>({channels})),
          running_mean{name + ".running_mean", Tensor<T>({channels})},
          running_var{name + ".running_var", Tensor<T>({channels}, T(1))},
          momentum_(momentum) {}

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (!training) {
            cache_.reset();
            return batchnorm_forward(x, gamma.value, beta.value, running_mean.value, running_var.value, momentum_, false);
        }
        cache_.emplace();
        return batchnorm_forward(x, gamma.value, beta.value, running_mean.value, running_var.value, momentum_, true, &*cache_);
    }

    /// Backward through a training-mode forward. After an inference-mode
    /// forward the layer is affine and its gradient is gamma * inv_std.
    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (cache_) {
            auto g = batchnorm_backward(*cache_, grad_out);
            cache_.reset();
            gamma.grad = std::move(g.dgamma);
            beta.grad = std::move(g.dbeta);
            return std::move(g.dx);
        }
        if (!inference_input_shape_ || *inference_input_shape_ != grad_out.shape()) stale("batch norm");
        const ChannelLayout<T> L(grad_out.shape());
        Tensor<T> dx(grad_out.shape());
        for (std::size_t c = 0; c < L.channels; ++c) {
            const double s = gamma.value[c] / std::sqrt(static_cast<double>(running_var.value[c]) + kBatchNormEpsilon);
            for (std::size_t n = 0; n < L.outer; ++n) {
                const std::size_t off = (n * L.channels + c) * L.inner;
                for (std::size_t i = 0; i < L.inner; ++i) dx[off + i] = static_cast<T>(s * grad_out[off + i]);
            }
        }
        inference_input_shape_.reset();
        return dx;
    }

    /// Inference-mode forward that keeps enough state for backward (used by
    /// saliency, which differentiates the deployed network).
    Tensor<T> forward_inference_traced(const Tensor<T>& x) {
        cache_.reset();
        inference_input_shape_ = x.shape();
        return batchnorm_forward(x, gamma.value, beta.value, running_mean.value, running_var.value, momentum_, false);
    }

    std::vector<Param<T>*> params() { return {&gamma, &beta}; }
    std::vector<Buffer<T>*> buffers() { return {&running_mean, &running_var}; }
    Shape output_shape(const Shape& in) const { return in; }
    double momentum() const { return momentum_; }

    Param<T> gamma;
    Param<T> beta;
    Buffer<T> running_mean;
    Buffer<T> running_var;

private:
    double momentum_;
    std::optional<BatchNormCache<T>> cache_;
    std::optional<Shape> inference_input_shape_;
};

template <typename T>
class Relu {
public:
    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        cache_ = x;
        return relu_forward(x);
    }
    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!cache_) stale("relu");
        auto dx = relu_backward(*cache_, grad_out);
        cache_.reset();
        return dx;
    }
    std::vector<Param<T>*> params() { return {}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    Shape output_shape(const Shape& in) const { return in; }

private:
    std::optional<Tensor<T>> cache_;
};

template <typename T>
class MaxPool2x2 {
public:
    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        auto r = maxpool2x2_forward(x);
        input_shape_ = x.shape();
        argmax_ = std::move(r.argmax);
        return std::move(r.y);
    }
    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!input_shape_) stale("max pool");
        auto dx = maxpool2x2_backward(*input_shape_, argmax_, grad_out);
        input_shape_.reset();
        argmax_.clear();
        return dx;
    }
    std::vector<Param<T>*> params() { return {}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    Shape output_shape(const Shape& in) const {
        if (in[2] % 2 || in[3] % 2) fail(ErrorKind::Config, "max pool over odd spatial dims " + to_string(in));
        return {in[0], in[1], in[2] / 2, in[3] / 2};
    }

private:
    std::optional<Shape> input_shape_;
    std::vector<std::uint32_t> argmax_;
};

/// Fully connected layer; flattens its input per sample.
template <typename T>
class Linear {
public:
    Linear(std::size_t in_features, std::size_t out_features, Rng& rng, const std::string& name)
        : weight(name + ".weight", he_normal<T>({in_features, out_features}, in_features, rng)),
          bias(name + ".bias", Tensor<T>({out_features})) {}

    Tensor<T> forward(const Tensor<T>& x, bool /*training*/) {
        cache_ = x.reshaped({x.dim(0), x.size() / x.dim(0)});
        input_shape_ = x.shape();
        return fc_forward(*cache_, weight.value, bias.value);
    }
    Tensor<T> backward(const Tensor<T>& grad_out) {
        if (!cache_) stale("fully connected");
        auto g = fc_backward(*cache_, weight.value, grad_out);
        cache_.reset();
        weight.grad = std::move(g.dw);
        bias.grad = std::move(g.db);
        return g.dx.reshaped(input_shape_);
    }
    std::vector<Param<T>*> params() { return {&weight, &bias}; }
    std::vector<Buffer<T>*> buffers() { return {}; }
    Shape output_shape(const Shape& in) const {
        std::size_t d = 1;
        for (std::size_t i = 1; i < in.size(); ++i) d *= in[i];
        if (d != weight.value.dim(0)) {
            fail(ErrorKind::Shape, "fc input " + to_string(in) + " does not match " + std::to_string(weight.value.dim(0)) + " features");
        }
        return {in[0], weight.value.dim(1)};
    }

    Param<T> weight;
    Param<T> bias;

private:
    std::optional<Tensor<T>> cache_;
    Shape input_shape_;
};

// ===========================================================================
// Optimizer

/// Momentum SGD: v <- mu v - lr g; p <- p + v.
template <typename T>
void sgd_step(Param<T>& p, double lr, double momentum, double weight_decay = 0.0) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i] + weight_decay * p.value[i];
        const double v = momentum * p.velocity[i] - lr * g;
        p.velocity[i] = static_cast<T>(v);
        p.value[i] = static_cast<T>(p.value[i] + v);
    }
}

}  // namespace owleye::nn

#endif
