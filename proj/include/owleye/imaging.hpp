#ifndef OWLEYE_IMAGING_HPP
#define OWLEYE_IMAGING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/font.hpp"

namespace owleye {

struct Color {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    constexpr std::uint32_t packed() const { return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | b; }
    constexpr double luminance() const { return 0.299 * r + 0.587 * g + 0.114 * b; }

    friend constexpr bool operator==(const Color&, const Color&) = default;

    static constexpr Color black() { return {0, 0, 0}; }
    static constexpr Color white() { return {255, 255, 255}; }
    static constexpr Color from_packed(std::uint32_t v) {
        return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    }
};

/// Half-open pixel box: columns [x1, x2), rows [y1, y2), origin top-left.
struct BBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    constexpr int width() const { return x2 - x1; }
    constexpr int height() const { return y2 - y1; }
    constexpr long long area() const { return valid() ? static_cast<long long>(width()) * height() : 0; }
    constexpr bool valid() const { return x1 < x2 && y1 < y2; }
    constexpr bool contains(int x, int y) const { return x >= x1 && x < x2 && y >= y1 && y < y2; }
    constexpr bool contains(const BBox& o) const { return o.x1 >= x1 && o.y1 >= y1 && o.x2 <= x2 && o.y2 <= y2; }

    constexpr std::optional<BBox> intersect(const BBox& o) const {
        BBox r{std::max(x1, o.x1), std::max(y1, o.y1), std::min(x2, o.x2), std::min(y2, o.y2)};
        if (!r.valid()) return std::nullopt;
        return r;
    }

    friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

inline std::string to_string(const BBox& b) {
    return "(" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," + std::to_string(b.x2) + "," +
           std::to_string(b.y2) + ")";
}

struct Point {
    int x = 0;
    int y = 0;
    friend constexpr bool operator==(const Point&, const Point&) = default;
};

/// Round half-up, the single rounding rule for produced pixels and
/// fractional pixel coordinates.
inline long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

inline std::uint8_t to_channel(double v) {
    return static_cast<std::uint8_t>(std::clamp<long>(round_half_up(v), 0, 255));
}

/// Row-major grid of scalars; the pixel-aligned companion of RasterImage
/// used for saliency maps.
template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(int w, int h, T fill = T{}) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    T& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// RGB8 image, row-major, 3 bytes per pixel.
class RasterImage {
public:
    RasterImage(int width, int height, Color fill = Color::black()) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            fail(ErrorKind::InvalidArgument,
                 "image dimensions must be >= 1, got " + std::to_string(width) + "x" + std::to_string(height));
        }
        pixels_.resize(static_cast<std::size_t>(width) * height * 3);
        for (std::size_t i = 0; i < pixels_.size(); i += 3) {
            pixels_[i] = fill.r;
            pixels_[i + 1] = fill.g;
            pixels_[i + 2] = fill.b;
        }
    }

    RasterImage(int width, int height, std::vector<std::uint8_t> rgb) : width_(width), height_(height), pixels_(std::move(rgb)) {
        if (width < 1 || height < 1) fail(ErrorKind::InvalidArgument, "image dimensions must be >= 1");
        if (pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
            fail(ErrorKind::InvalidArgument, "pixel buffer size does not match dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    BBox bounds() const { return {0, 0, width_, height_}; }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    Color at(int x, int y) const {
        const std::size_t i = offset(x, y);
        return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
    }

    void set(int x, int y, Color c) {
        const std::size_t i = offset(x, y);
        pixels_[i] = c.r;
        pixels_[i + 1] = c.g;
        pixels_[i + 2] = c.b;
    }

    std::uint8_t channel(int x, int y, int c) const { return pixels_[offset(x, y) + static_cast<std::size_t>(c)]; }

    const std::vector<std::uint8_t>& data() const { return pixels_; }
    std::vector<std::uint8_t>& data() { return pixels_; }

    friend bool operator==(const RasterImage& a, const RasterImage& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
    }

private:
    std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

// ---------------------------------------------------------------------------
// Resampling and orientation

/// Bilinear direct stretch to (target_h, target_w) with half-pixel centers.
/// Aspect ratio is not preserved.
inline RasterImage resize_normalize(const RasterImage& img, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1) {
        fail(ErrorKind::InvalidArgument, "resize target must be >= 1 in both dimensions");
    }
    if (target_h == img.height() && target_w == img.width()) return img;

    RasterImage out(target_w, target_h);
    const double sx = static_cast<double>(img.width()) / target_w;
    const double sy = static_cast<double>(img.height()) / target_h;

    struct Tap {
        int i0, i1;
        double f;
    };
    auto taps = [](int n_out, int n_in, double scale) {
        std::vector<Tap> t(static_cast<std::size_t>(n_out));
        for (int o = 0; o < n_out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, n_in - 1);
            t[static_cast<std::size_t>(o)] = {i0, i1, src - i0};
        }
        return t;
    };
    const auto xt = taps(target_w, img.width(), sx);
    const auto yt = taps(target_h, img.height(), sy);

    for (int y = 0; y < target_h; ++y) {
        const Tap& ty = yt[static_cast<std::size_t>(y)];
        for (int x = 0; x < target_w; ++x) {
            const Tap& tx = xt[static_cast<std::size_t>(x)];
            Color c;
            std::uint8_t* dst = &c.r;
            for (int ch = 0; ch < 3; ++ch) {
                const double top = img.channel(tx.i0, ty.i0, ch) * (1.0 - tx.f) + img.channel(tx.i1, ty.i0, ch) * tx.f;
                const double bot = img.channel(tx.i0, ty.i1, ch) * (1.0 - tx.f) + img.channel(tx.i1, ty.i1, ch) * tx.f;
                dst[ch] = to_channel(top * (1.0 - ty.f) + bot * ty.f);
            }
            out.set(x, y, c);
        }
    }
    return out;
}

/// Landscape images (width > height) are rotated 90 degrees clockwise;
/// portrait and square images pass through.
inline RasterImage rotate_to_portrait(const RasterImage& img) {
    if (img.width() <= img.height()) return img;
    RasterImage out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) out.set(img.height() - 1 - y, x, img.at(x, y));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Drawing

enum class DrawStatus { Ok, OutsideImage };

/// In-place fill of box clipped to the image.
inline DrawStatus fill_rect_inplace(RasterImage& img, const BBox& box, Color color) {
    const auto clip = box.intersect(img.bounds());
    if (!clip) return DrawStatus::OutsideImage;
    for (int y = clip->y1; y < clip->y2; ++y) {
        for (int x = clip->x1; x < clip->x2; ++x) img.set(x, y, color);
    }
    return DrawStatus::Ok;
}

struct FillResult {
    RasterImage image;
    DrawStatus status;
};

inline FillResult fill_rect(const RasterImage& img, const BBox& box, Color color) {
    RasterImage out = img;
    const DrawStatus st = fill_rect_inplace(out, box, color);
    return {std::move(out), st};
}

inline void paste_inplace(RasterImage& img, const RasterImage& patch, Point origin) {
    const int x0 = std::max(0, origin.x);
    const int y0 = std::max(0, origin.y);
    const int x1 = std::min(img.width(), origin.x + patch.width());
    const int y1 = std::min(img.height(), origin.y + patch.height());
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) img.set(x, y, patch.at(x - origin.x, y - origin.y));
    }
}

/// Copies patch with its top-left at origin; overflow is silently dropped.
inline RasterImage paste(const RasterImage& img, const RasterImage& patch, Point origin) {
    RasterImage out = img;
    paste_inplace(out, patch, origin);
    return out;
}

/// Layout of a string in the embedded font at a given cell height. Glyph
/// rows stretch to exactly cell_h; columns scale by floor(cell_h / 7).
struct TextLayout {
    int glyph_count = 0;
    int x_scale = 1;
    int cell_h = 7;

    int advance() const { return font::kGlyphAdvance * x_scale; }
    /// Width of the glyph cells, without the spacing after the last glyph.
    int width() const { return glyph_count == 0 ? 0 : glyph_count * advance() - x_scale; }
};

namespace detail {

/// Code points of a UTF-8 string, collapsed so each non-ASCII code point
/// becomes one replacement glyph.
inline std::vector<char> glyph_sequence(std::string_view text) {
    std::vector<char> out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if ((c & 0xC0) == 0x80) continue;  // continuation byte
        out.push_back(c < 0x80 ? static_cast<char>(c) : '\x7F');
    }
    return out;
}

}  // namespace detail

inline TextLayout layout_text(std::string_view text, int cell_h) {
    if (cell_h < font::kGlyphHeight) {
        fail(ErrorKind::InvalidArgument, "text cell height must be >= 7, got " + std::to_string(cell_h));
    }
    return {static_cast<int>(detail::glyph_sequence(text).size()), cell_h / font::kGlyphHeight, cell_h};
}

struct TextResult {
    RasterImage image;
    std::optional<BBox> box;  // drawn extent clipped to the image; empty when fully clipped
};

inline std::optional<BBox> draw_text_inplace(RasterImage& img, Point origin, std::string_view text, Color color,
                                             int cell_h) {
    const TextLayout layout = layout_text(text, cell_h);
    if (layout.glyph_count == 0) fail(ErrorKind::DegenerateRegion, "cannot draw empty text");

    const auto glyphs = detail::glyph_sequence(text);
    const int s = layout.x_scale;
    for (int gi = 0; gi < layout.glyph_count; ++gi) {
        const auto& g = font::glyph(glyphs[static_cast<std::size_t>(gi)]);
        const int gx = origin.x + gi * layout.advance();
        for (int r = 0; r < cell_h; ++r) {
            const int y = origin.y + r;
            if (y < 0 || y >= img.height()) continue;
            const int row = r * font::kGlyphHeight / cell_h;
            for (int c = 0; c < font::kGlyphWidth * s; ++c) {
                const int x = gx + c;
                if (x < 0 || x >= img.width()) continue;
                if (font::ink(g, c / s, row)) img.set(x, y, color);
            }
        }
    }
    const BBox full{origin.x, origin.y, origin.x + layout.width(), origin.y + cell_h};
    return full.intersect(img.bounds());
}

/// Renders text left-to-right from origin. Throws DegenerateRegion on empty
/// text, InvalidArgument when cell_h < 7.
inline TextResult draw_text(const RasterImage& img, Point origin, std::string_view text, Color color, int cell_h) {
    RasterImage out = img;
    auto box = draw_text_inplace(out, origin, text, color, cell_h);
    return {std::move(out), box};
}

/// Linear blue -> red ramp.
inline Color heat_color(double m) {
    m = std::clamp(m, 0.0, 1.0);
    return {to_channel(255.0 * m), 0, to_channel(255.0 * (1.0 - m))};
}

/// Blends a [0,1] relevance grid over the image:
/// out = (1 - alpha*m) * pixel + alpha*m * heat_color(m).
inline RasterImage overlay_heatmap(const RasterImage& img, const Grid<double>& map, double alpha) {
    if (map.width != img.width() || map.height != img.height()) {
        fail(ErrorKind::InvalidArgument, "heatmap dimensions do not match image");
    }
    if (alpha < 0.0 || alpha > 1.0) fail(ErrorKind::InvalidArgument, "alpha must be in [0,1]");
    RasterImage out = img;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double m = std::clamp(map.at(x, y), 0.0, 1.0);
            const double w = alpha * m;
            if (w == 0.0) continue;
            const Color src = img.at(x, y);
            const Color hc = heat_color(m);
            out.set(x, y,
                    {to_channel((1.0 - w) * src.r + w * hc.r), to_channel((1.0 - w) * src.g + w * hc.g),
                     to_channel((1.0 - w) * src.b + w * hc.b)});
        }
    }
    return out;
}

/// 0.299/0.587/0.114 luma, unrounded.
inline Grid<float> to_gray(const RasterImage& img) {
    Grid<float> g(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) g.at(x, y) = static_cast<float>(img.at(x, y).luminance());
    }
    return g;
}

}  // namespace owleye

#endif
