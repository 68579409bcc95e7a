#ifndef OWLEYE_DEDUP_HPP
#define OWLEYE_DEDUP_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/imaging.hpp"
#include "owleye/orb_pattern.hpp"
#include "owleye/rng.hpp"

namespace owleye {

/// 256-bit binary descriptor.
struct Descriptor {
    std::array<std::uint64_t, 4> words{};

    bool bit(int j) const { return (words[static_cast<std::size_t>(j >> 6)] >> (j & 63)) & 1U; }
    void set(int j) { words[static_cast<std::size_t>(j >> 6)] |= std::uint64_t{1} << (j & 63); }

    friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

inline int hamming(const Descriptor& a, const Descriptor& b) {
    int d = 0;
    for (std::size_t i = 0; i < 4; ++i) d += std::popcount(a.words[i] ^ b.words[i]);
    return d;
}

struct Keypoint {
    int x = 0;
    int y = 0;
    float response = 0.0f;
    float angle = 0.0f;  // radians
};

struct OrbOptions {
    int fast_threshold = 20;
    std::size_t max_keypoints = 500;
};

struct OrbFeatures {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;
};

namespace orb {

inline constexpr int kHalfPatch = 15;
inline constexpr int kEdge = 20;

// Bresenham circle of radius 3, clockwise from 12 o'clock.
inline constexpr std::array<std::array<int, 2>, 16> kCircle = {{{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1},
                                                                 {2, 2}, {1, 3}, {0, 3}, {-1, 3}, {-2, 2}, {-3, 1},
                                                                 {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

struct Gray8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> px;

    int at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
};

inline Gray8 gray8(const RasterImage& img) {
    Gray8 g{img.width(), img.height(), std::vector<std::uint8_t>(static_cast<std::size_t>(img.width()) * img.height())};
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            g.px[static_cast<std::size_t>(y) * g.width + x] = to_channel(img.at(x, y).luminance());
        }
    }
    return g;
}

/// FAST-9 segment test; returns the corner score (sum of excess contrast
/// over the threshold on the circle) or 0 when not a corner.
inline int fast_score(const Gray8& g, int x, int y, int t) {
    const int p = g.at(x, y);
    std::array<int, 16> d{};
    for (std::size_t i = 0; i < 16; ++i) d[i] = g.at(x + kCircle[i][0], y + kCircle[i][1]) - p;
    auto arc = [&](auto pred) {
        int run = 0;
        for (int i = 0; i < 32; ++i) {
            if (pred(d[static_cast<std::size_t>(i & 15)])) {
                if (++run >= 9) return true;
            } else {
                run = 0;
            }
        }
        return false;
    };
    const bool bright = arc([t](int v) { return v > t; });
    const bool dark = !bright && arc([t](int v) { return v < -t; });
    if (!bright && !dark) return 0;
    int score = 0;
    for (int v : d) {
        if (bright && v > t) score += v - t;
        if (dark && v < -t) score += -v - t;
    }
    return score;
}

/// Harris corner response over a 7x7 window of Sobel gradients.
inline float harris_response(const Gray8& g, int x, int y) {
    constexpr int r = 3;
    double a = 0, b = 0, c = 0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const int u = x + dx;
            const int v = y + dy;
            const double ix = (g.at(u + 1, v - 1) + 2 * g.at(u + 1, v) + g.at(u + 1, v + 1)) -
                              (g.at(u - 1, v - 1) + 2 * g.at(u - 1, v) + g.at(u - 1, v + 1));
            const double iy = (g.at(u - 1, v + 1) + 2 * g.at(u, v + 1) + g.at(u + 1, v + 1)) -
                              (g.at(u - 1, v - 1) + 2 * g.at(u, v - 1) + g.at(u + 1, v - 1));
            a += ix * ix;
            b += iy * iy;
            c += ix * iy;
        }
    }
    constexpr double k = 0.04;
    constexpr double norm = 1.0 / (4.0 * 49.0 * 255.0);
    const double s = norm * norm * norm * norm;
    return static_cast<float>(((a * b - c * c) - k * (a + b) * (a + b)) * s);
}

/// Half-widths of the circular orientation patch per row offset.
inline std::array<int, kHalfPatch + 1> circle_extents() {
    std::array<int, kHalfPatch + 1> umax{};
    const int vmax = static_cast<int>(std::floor(kHalfPatch * std::sqrt(2.0) / 2 + 1));
    const int vmin = static_cast<int>(std::ceil(kHalfPatch * std::sqrt(2.0) / 2));
    const double hp2 = kHalfPatch * kHalfPatch;
    for (int v = 0; v <= vmax; ++v) umax[static_cast<std::size_t>(v)] = static_cast<int>(std::lround(std::sqrt(hp2 - v * v)));
    for (int v = kHalfPatch, v0 = 0; v >= vmin; --v) {
        while (umax[static_cast<std::size_t>(v0)] == umax[static_cast<std::size_t>(v0 + 1)]) ++v0;
        umax[static_cast<std::size_t>(v)] = v0;
        ++v0;
    }
    return umax;
}

/// Intensity-centroid orientation.
inline float centroid_angle(const Gray8& g, int x, int y, const std::array<int, kHalfPatch + 1>& umax) {
    long m01 = 0, m10 = 0;
    for (int u = -kHalfPatch; u <= kHalfPatch; ++u) m10 += static_cast<long>(u) * g.at(x + u, y);
    for (int v = 1; v <= kHalfPatch; ++v) {
        long vsum = 0;
        const int d = umax[static_cast<std::size_t>(v)];
        for (int u = -d; u <= d; ++u) {
            const int below = g.at(x + u, y + v);
            const int above = g.at(x + u, y - v);
            vsum += below - above;
            m10 += static_cast<long>(u) * (below + above);
        }
        m01 += static_cast<long>(v) * vsum;
    }
    return static_cast<float>(std::atan2(static_cast<double>(m01), static_cast<double>(m10)));
}

/// 7x7 Gaussian blur, sigma 2, edge-replicated.
inline Gray8 smooth(const Gray8& g) {
    std::array<double, 7> k{};
    double sum = 0;
    for (int i = -3; i <= 3; ++i) sum += k[static_cast<std::size_t>(i + 3)] = std::exp(-(i * i) / 8.0);
    for (auto& v : k) v /= sum;
    std::vector<double> tmp(g.px.size());
    auto clampi = [](int v, int n) { return std::clamp(v, 0, n - 1); };
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            double acc = 0;
            for (int i = -3; i <= 3; ++i) acc += k[static_cast<std::size_t>(i + 3)] * g.at(clampi(x + i, g.width), y);
            tmp[static_cast<std::size_t>(y) * g.width + x] = acc;
        }
    }
    Gray8 out{g.width, g.height, std::vector<std::uint8_t>(g.px.size())};
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            double acc = 0;
            for (int i = -3; i <= 3; ++i) {
                acc += k[static_cast<std::size_t>(i + 3)] * tmp[static_cast<std::size_t>(clampi(y + i, g.height)) * g.width + x];
            }
            out.px[static_cast<std::size_t>(y) * g.width + x] = to_channel(acc);
        }
    }
    return out;
}

inline Descriptor describe(const Gray8& smoothed, const Keypoint& kp) {
    const double c = std::cos(kp.angle);
    const double s = std::sin(kp.angle);
    auto sample = [&](int px, int py) {
        const int rx = static_cast<int>(std::lround(px * c - py * s));
        const int ry = static_cast<int>(std::lround(px * s + py * c));
        return smoothed.at(kp.x + rx, kp.y + ry);
    };
    Descriptor d;
    for (int j = 0; j < 256; ++j) {
        const auto* p = &kBitPattern31[static_cast<std::size_t>(j) * 4];
        if (sample(p[0], p[1]) < sample(p[2], p[3])) d.set(j);
    }
    return d;
}

}  // namespace orb

/// Single-scale ORB: FAST-9 corners with 3x3 non-maximum suppression,
/// ranked by Harris response and capped, intensity-centroid orientation and
/// rotated-BRIEF descriptors on a blurred copy.
inline OrbFeatures orb_detect(const RasterImage& img, const OrbOptions& opts = {}) {
    OrbFeatures out;
    const orb::Gray8 g = orb::gray8(img);
    if (g.width <= 2 * orb::kEdge || g.height <= 2 * orb::kEdge) return out;

    const int w = g.width;
    const int h = g.height;
    std::vector<int> score(static_cast<std::size_t>(w) * h, 0);
    for (int y = orb::kEdge - 1; y < h - orb::kEdge + 1; ++y) {
        for (int x = orb::kEdge - 1; x < w - orb::kEdge + 1; ++x) {
            score[static_cast<std::size_t>(y) * w + x] = orb::fast_score(g, x, y, opts.fast_threshold);
        }
    }
    std::vector<Keypoint> kps;
    for (int y = orb::kEdge; y < h - orb::kEdge; ++y) {
        for (int x = orb::kEdge; x < w - orb::kEdge; ++x) {
            const int s = score[static_cast<std::size_t>(y) * w + x];
            if (s == 0) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx || dy) && score[static_cast<std::size_t>(y + dy) * w + x + dx] > s) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) kps.push_back({x, y, orb::harris_response(g, x, y), 0.0f});
        }
    }
    std::stable_sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
    if (kps.size() > opts.max_keypoints) kps.resize(opts.max_keypoints);

    const auto umax = orb::circle_extents();
    const orb::Gray8 smoothed = orb::smooth(g);
    out.descriptors.reserve(kps.size());
    for (auto& kp : kps) {
        kp.angle = orb::centroid_angle(g, kp.x, kp.y, umax);
        out.descriptors.push_back(orb::describe(smoothed, kp));
    }
    out.keypoints = std::move(kps);
    return out;
}

inline std::vector<Descriptor> orb_features(const RasterImage& img, const OrbOptions& opts = {}) {
    return orb_detect(img, opts).descriptors;
}

struct ImageSignature {
    std::array<double, 256> vector{};
    std::size_t keypoint_count = 0;
};

/// Per-bit set frequency over the descriptors.
inline ImageSignature image_signature(std::span<const Descriptor> descriptors) {
    ImageSignature sig;
    sig.keypoint_count = descriptors.size();
    if (descriptors.empty()) return sig;
    std::array<std::size_t, 256> counts{};
    for (const auto& d : descriptors) {
        for (int j = 0; j < 256; ++j) counts[static_cast<std::size_t>(j)] += d.bit(j);
    }
    const double n = static_cast<double>(descriptors.size());
    for (std::size_t j = 0; j < 256; ++j) sig.vector[j] = static_cast<double>(counts[j]) / n;
    return sig;
}

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine_similarity(const ImageSignature& u, const ImageSignature& v) {
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t j = 0; j < 256; ++j) {
        dot += u.vector[j] * v.vector[j];
        nu += u.vector[j] * u.vector[j];
        nv += v.vector[j] * v.vector[j];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), 0.0, 1.0);
}

enum class SimilarityMode {
    Cosine,          // cosine of the raw bit-frequency vectors
    CenteredCosine,  // cosine after subtracting 0.5 from every entry
};

/// Cosine of (u - 0.5) and (v - 0.5), clamped to [0,1]. Raw frequency
/// vectors all point roughly along the diagonal, so their plain cosine sits
/// near 1 for unrelated screenshots; centering removes that shared
/// component. Signatures without keypoints score 0.
inline double centered_cosine_similarity(const ImageSignature& u, const ImageSignature& v) {
    if (u.keypoint_count == 0 || v.keypoint_count == 0) return 0.0;
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t j = 0; j < 256; ++j) {
        const double a = u.vector[j] - 0.5;
        const double b = v.vector[j] - 0.5;
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), 0.0, 1.0);
}

inline double signature_similarity(const ImageSignature& u, const ImageSignature& v, SimilarityMode mode) {
    return mode == SimilarityMode::Cosine ? cosine_similarity(u, v) : centered_cosine_similarity(u, v);
}

struct DedupDecision {
    bool kept = true;
    double max_sim = 0.0;  // against previously kept items in scan order
    std::optional<std::size_t> nearest;
};

/// Greedy scan: an item is dropped iff its similarity to any previously
/// kept item is strictly greater than threshold. Decisions are indexed by
/// item, not by scan position.
inline std::vector<DedupDecision> greedy_dedup(std::span<const std::size_t> scan_order,
                                               const std::function<double(std::size_t, std::size_t)>& similarity,
                                               double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) fail(ErrorKind::InvalidArgument, "dedup threshold must be in (0,1]");
    std::vector<DedupDecision> decisions(scan_order.size());
    std::vector<std::size_t> kept;
    for (std::size_t item : scan_order) {
        if (item >= decisions.size()) fail(ErrorKind::InvalidArgument, "scan order index out of range");
        DedupDecision& d = decisions[item];
        for (std::size_t k : kept) {
            const double s = similarity(item, k);
            if (!d.nearest || s > d.max_sim) {
                d.max_sim = s;
                d.nearest = k;
            }
        }
        d.kept = !(d.nearest && d.max_sim > threshold);
        if (d.kept) kept.push_back(item);
    }
    return decisions;
}

/// Seeded scan order: a Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    return order;
}

struct DedupResult {
    std::vector<std::size_t> kept;  // original order
    std::vector<DedupDecision> decisions;
    std::vector<std::size_t> scan_order;
};

inline DedupResult dedup_stream(std::span<const ImageSignature> signatures, double threshold, std::uint64_t seed,
                                SimilarityMode mode = SimilarityMode::Cosine) {
    DedupResult r;
    r.scan_order = shuffled_order(signatures.size(), seed);
    r.decisions = greedy_dedup(
        r.scan_order,
        [&](std::size_t a, std::size_t b) { return signature_similarity(signatures[a], signatures[b], mode); },
        threshold);
    for (std::size_t i = 0; i < r.decisions.size(); ++i) {
        if (r.decisions[i].kept) r.kept.push_back(i);
    }
    return r;
}

inline DedupResult dedup_stream(std::span<const RasterImage> images, double threshold, std::uint64_t seed,
                                const OrbOptions& opts = {}, SimilarityMode mode = SimilarityMode::Cosine) {
    std::vector<ImageSignature> sigs;
    sigs.reserve(images.size());
    for (const auto& img : images) sigs.push_back(image_signature(orb_features(img, opts)));
    return dedup_stream(std::span<const ImageSignature>(sigs), threshold, seed, mode);
}

}  // namespace owleye

#endif
