#ifndef OWLEYE_AUGMENTOR_HPP
#define OWLEYE_AUGMENTOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/hierarchy.hpp"
#include "owleye/imaging.hpp"
#include "owleye/rng.hpp"

namespace owleye {

enum class BugCategory { ComponentOcclusion, TextOverlap, MissingImage, NullValue, BlurredScreen };

inline constexpr std::array<BugCategory, 4> kSynthesizedCategories = {
    BugCategory::ComponentOcclusion, BugCategory::TextOverlap, BugCategory::MissingImage, BugCategory::NullValue};

inline constexpr std::array<BugCategory, 5> kAllCategories = {BugCategory::ComponentOcclusion, BugCategory::TextOverlap,
                                                              BugCategory::MissingImage, BugCategory::NullValue,
                                                              BugCategory::BlurredScreen};

inline std::string_view to_string(BugCategory c) {
    switch (c) {
        case BugCategory::ComponentOcclusion: return "component_occlusion";
        case BugCategory::TextOverlap: return "text_overlap";
        case BugCategory::MissingImage: return "missing_image";
        case BugCategory::NullValue: return "null_value";
        case BugCategory::BlurredScreen: return "blurred_screen";
    }
    return "unknown";
}

/// Human-facing row label, as printed in evaluation tables.
inline std::string_view display_name(BugCategory c) {
    switch (c) {
        case BugCategory::ComponentOcclusion: return "Component occlusion";
        case BugCategory::TextOverlap: return "Text overlap";
        case BugCategory::MissingImage: return "Missing image";
        case BugCategory::NullValue: return "NULL value";
        case BugCategory::BlurredScreen: return "Blurred screen";
    }
    return "Unknown";
}

inline BugCategory parse_category(std::string_view s) {
    for (BugCategory c : kAllCategories) {
        if (to_string(c) == s) return c;
    }
    fail(ErrorKind::InvalidArgument, "unknown bug category '" + std::string(s) + "'");
}

/// Per-category fractions in kSynthesizedCategories order.
using CategoryMix = std::array<double, 4>;

/// 10% occlusion, 30% for each of the other three.
inline constexpr CategoryMix kDefaultMix = {0.10, 0.30, 0.30, 0.30};

/// Category for each of n sources: quotas by largest remainder, laid out as
/// contiguous slices over a seeded shuffle of the sources. Sources past the
/// total quota get no category.
inline std::vector<std::optional<BugCategory>> assign_categories(std::size_t n, const CategoryMix& mix,
                                                                 std::uint64_t seed) {
    double total = 0;
    for (double f : mix) {
        if (!(f >= 0.0)) fail(ErrorKind::Config, "category fractions must be >= 0");
        total += f;
    }
    if (total > 1.0 + 1e-9) fail(ErrorKind::Config, "category fractions sum to more than 1");

    std::array<std::size_t, 4> quota{};
    std::array<double, 4> rem{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double exact = static_cast<double>(n) * mix[i];
        quota[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[i] = exact - static_cast<double>(quota[i]);
        assigned += quota[i];
    }
    const auto target = std::min<std::size_t>(n, static_cast<std::size_t>(round_half_up(static_cast<double>(n) * total)));
    while (assigned < target) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < 4; ++i) {
            if (rem[i] > rem[best] + 1e-12) best = i;
        }
        ++quota[best];
        rem[best] = -1.0;
        ++assigned;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::optional<BugCategory>> out(n);
    std::size_t k = 0;
    for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t q = 0; q < quota[c]; ++q) out[order[k++]] = kSynthesizedCategories[c];
    }
    return out;
}

struct AugmentationRecord {
    std::string source_id;
    BugCategory category = BugCategory::ComponentOcclusion;
    BBox bug_region;
    std::uint64_t seed = 0;
    BBox target_view;
    std::vector<double> rand_draws;

    friend bool operator==(const AugmentationRecord&, const AugmentationRecord&) = default;
};

struct AugmentOptions {
    int min_view_px = 12;
    /// Smallest |rand| accepted for occlusion; smaller draws are resampled.
    double occlusion_floor = 0.1;
    /// Center the missing-image icon instead of placing its corner at the
    /// view center.
    bool center_icon = false;
    /// Draw xrand from [0, 0.5w) so the copy always overlaps the source text.
    bool force_overlap = false;
    int max_overlap_attempts = 8;
};

/// Source of uniform samples for the injectors. Every draw is the final
/// scaled value, which is what gets recorded and replayed.
class UniformDraws {
public:
    virtual ~UniformDraws() = default;
    virtual double uniform(double lo, double hi) = 0;
};

/// Seeded draws that remember every value handed out.
class RecordingDraws final : public UniformDraws {
public:
    explicit RecordingDraws(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) override {
        const double v = rng_.uniform(lo, hi);
        draws_.push_back(v);
        return v;
    }

    const std::vector<double>& draws() const { return draws_; }

private:
    Rng rng_;
    std::vector<double> draws_;
};

/// Replays a fixed sequence, e.g. AugmentationRecord::rand_draws.
class ScriptedDraws final : public UniformDraws {
public:
    explicit ScriptedDraws(std::vector<double> values) : values_(std::move(values)) {}

    double uniform(double, double) override {
        if (next_ >= values_.size()) fail(ErrorKind::InvalidArgument, "scripted draws exhausted");
        return values_[next_++];
    }

    std::size_t consumed() const { return next_; }

private:
    std::vector<double> values_;
    std::size_t next_ = 0;
};

struct Injection {
    RasterImage image;
    BBox region;
};

/// Black on light backgrounds, white on dark ones.
inline Color contrast_text_color(Color bg) {
    const int lum1000 = 299 * bg.r + 587 * bg.g + 114 * bg.b;  // exact, unlike the double form
    return lum1000 >= 128000 ? Color::black() : Color::white();
}

/// The built-in 24x24 broken-image glyph used when no icon is supplied.
inline RasterImage default_icon() {
    constexpr int n = 24;
    const Color paper{236, 236, 236};
    const Color frame{117, 117, 117};
    const Color hill{76, 175, 80};
    const Color sun{255, 193, 7};
    RasterImage icon(n, n, paper);
    for (int i = 0; i < n; ++i) {
        icon.set(i, 0, frame);
        icon.set(i, n - 1, frame);
        icon.set(0, i, frame);
        icon.set(n - 1, i, frame);
    }
    for (int y = 4; y < 8; ++y) {
        for (int x = 15; x < 19; ++x) icon.set(x, y, sun);
    }
    // Mountain: a triangle resting on the bottom edge.
    for (int y = 10; y < n - 1; ++y) {
        const int half = y - 10;
        for (int x = 9 - half; x <= 9 + half; ++x) {
            if (x > 0 && x < n - 1) icon.set(x, y, hill);
        }
    }
    // Tear: a jagged diagonal through the picture.
    for (int i = 1; i < n - 1; ++i) {
        const int x = i;
        const int y = n - 1 - i + ((i / 3) % 2 == 0 ? 0 : 2);
        if (y > 0 && y < n - 1) {
            icon.set(x, y, paper);
            if (y + 1 < n - 1) icon.set(x, y + 1, frame);
        }
    }
    return icon;
}

/// Covers the upper (rand >= 0) or lower (rand < 0) part of the view with a
/// block of the background color whose height is h * |rand|.
inline Injection occlude_component(const RasterImage& scr, const ViewNode& view, Color bg, UniformDraws& draws,
                                   double floor = 0.1) {
    const BBox& v = view.bounds;
    if (v.width() < 1 || v.height() < 1) fail(ErrorKind::InvalidArgument, "occlusion target has empty bounds");
    double rand = draws.uniform(-1.0, 1.0);
    while (std::abs(rand) < floor) rand = draws.uniform(-1.0, 1.0);

    const int w = v.width();
    const int h = v.height();
    const int block_h = std::clamp<int>(static_cast<int>(round_half_up(h * std::abs(rand))), 1, h);
    const RasterImage block(w, block_h, bg);
    const Point at = rand >= 0.0 ? Point{v.x1, v.y1} : Point{v.x1, v.y2 - block_h};
    RasterImage out = paste(scr, block, at);
    const auto region = BBox{at.x, at.y, at.x + w, at.y + block_h}.intersect(scr.bounds());
    if (!region) fail(ErrorKind::NoCandidate, "occlusion block falls outside the screenshot");
    return {std::move(out), *region};
}

/// Writes a copy of the view's text at (x2 - xrand, y1), xrand drawn from
/// (-0.5w, 0.5w). The region is the drawn text extent.
inline Injection overlap_text(const RasterImage& scr, const ViewNode& view, UniformDraws& draws,
                              const AugmentOptions& opts = {}) {
    if (!view.text || view.text->empty()) fail(ErrorKind::InvalidArgument, "text overlap needs a non-empty TextView");
    const BBox& v = view.bounds;
    const Color color = contrast_text_color(sample_background_color(scr, v));
    const double half = 0.5 * v.width();
    for (int attempt = 0; attempt < opts.max_overlap_attempts; ++attempt) {
        const double xrand = opts.force_overlap ? draws.uniform(0.0, half) : draws.uniform(-half, half);
        const Point origin{v.x2 - static_cast<int>(round_half_up(xrand)), v.y1};
        RasterImage out = scr;
        if (auto box = draw_text_inplace(out, origin, *view.text, color, v.height())) return {std::move(out), *box};
    }
    fail(ErrorKind::NoCandidate, "overlapping text fell outside the screenshot on every attempt");
}

/// Fills the view with the background color and pastes the icon, scaled to
/// a min(w,h)/2 square, with its top-left at the view center.
inline Injection missing_image(const RasterImage& scr, const ViewNode& view, Color bg, const RasterImage& icon,
                               bool center_icon = false) {
    const BBox& v = view.bounds;
    const int w = v.width();
    const int h = v.height();
    if (w < 1 || h < 1) fail(ErrorKind::InvalidArgument, "missing-image target has empty bounds");
    RasterImage out = scr;
    fill_rect_inplace(out, v, bg);
    const int side = std::max(1, std::min(w, h) / 2);
    const RasterImage scaled = resize_normalize(icon, side, side);
    const Point at = center_icon ? Point{v.x1 + (w - side) / 2, v.y1 + (h - side) / 2}
                                 : Point{v.x1 + static_cast<int>(round_half_up(0.5 * w)),
                                         v.y1 + static_cast<int>(round_half_up(0.5 * h))};
    paste_inplace(out, scaled, at);
    const auto region = v.intersect(scr.bounds());
    if (!region) fail(ErrorKind::NoCandidate, "missing-image view is outside the screenshot");
    return {std::move(out), *region};
}

/// Blanks the view with the background color and writes "null" at its
/// top-left corner at full view height. Text past the view edge is clipped.
inline Injection null_value(const RasterImage& scr, const ViewNode& view, Color bg) {
    const BBox& v = view.bounds;
    if (v.width() < 1 || v.height() < font::kGlyphHeight) {
        fail(ErrorKind::InvalidArgument, "null-value target must be at least 7 px tall");
    }
    RasterImage patch(v.width(), v.height(), bg);
    draw_text_inplace(patch, {0, 0}, "null", contrast_text_color(bg), v.height());
    RasterImage out = paste(scr, patch, {v.x1, v.y1});
    const auto region = v.intersect(scr.bounds());
    if (!region) fail(ErrorKind::NoCandidate, "null-value view is outside the screenshot");
    return {std::move(out), *region};
}

struct AugmentResult {
    RasterImage image;
    AugmentationRecord record;
};

/// Synthesizes one screenshot carrying `category`. The target view is drawn
/// uniformly from the ImageViews (missing image) or TextViews (otherwise).
/// Throws NoCandidate when the hierarchy has no eligible view.
inline AugmentResult augment(const RasterImage& scr, const ViewTree& tree, BugCategory category,
                             const std::optional<RasterImage>& icon, std::uint64_t seed,
                             const AugmentOptions& opts = {}, std::string source_id = {}) {
    if (category == BugCategory::BlurredScreen) {
        fail(ErrorKind::UnsupportedCategory, "blurred screens are not synthesized");
    }
    const ViewTree scaled = scale_hierarchy(tree, scr.width(), scr.height());
    const ViewKind kind = category == BugCategory::MissingImage ? ViewKind::ImageView : ViewKind::TextView;
    const auto candidates = collect_views(scaled, kind, opts.min_view_px);
    if (candidates.empty()) {
        fail(ErrorKind::NoCandidate, std::string("no eligible ") +
                                         (kind == ViewKind::ImageView ? "ImageView" : "TextView") + " for " +
                                         std::string(to_string(category)));
    }

    RecordingDraws draws(seed);
    const double pick = draws.uniform(0.0, 1.0);
    const auto index = std::min(candidates.size() - 1, static_cast<std::size_t>(pick * candidates.size()));
    const ViewNode& view = candidates[index];
    const Color bg = sample_background_color(scr, view.bounds);

    auto run = [&]() -> Injection {
        switch (category) {
            case BugCategory::ComponentOcclusion: return occlude_component(scr, view, bg, draws, opts.occlusion_floor);
            case BugCategory::TextOverlap: return overlap_text(scr, view, draws, opts);
            case BugCategory::MissingImage:
                return missing_image(scr, view, bg, icon ? *icon : default_icon(), opts.center_icon);
            case BugCategory::NullValue: return null_value(scr, view, bg);
            case BugCategory::BlurredScreen: break;
        }
        fail(ErrorKind::UnsupportedCategory, "unreachable category");
    };
    Injection inj = run();

    AugmentationRecord rec;
    rec.source_id = std::move(source_id);
    rec.category = category;
    rec.bug_region = inj.region;
    rec.seed = seed;
    rec.target_view = view.bounds;
    rec.rand_draws = draws.draws();
    return {std::move(inj.image), std::move(rec)};
}

}  // namespace owleye

#endif
