#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "owleye/image_io.hpp"
#include "owleye/imaging.hpp"
#include "owleye/rng.hpp"

using namespace owleye;

namespace {

RasterImage random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : px) v = static_cast<std::uint8_t>(rng.below(256));
    return RasterImage(w, h, std::move(px));
}

// Independent bilinear sampler written directly from the half-pixel
// definition.
double naive_bilinear(const RasterImage& img, double sx, double sy, int ch) {
    auto clampd = [](double v, double hi) { return v < 0 ? 0.0 : (v > hi ? hi : v); };
    sx = clampd(sx, img.width() - 1);
    sy = clampd(sy, img.height() - 1);
    const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
    const int x1 = x0 + 1 < img.width() ? x0 + 1 : x0;
    const int y1 = y0 + 1 < img.height() ? y0 + 1 : y0;
    const double fx = sx - x0, fy = sy - y0;
    return (1 - fx) * (1 - fy) * img.channel(x0, y0, ch) + fx * (1 - fy) * img.channel(x1, y0, ch) +
           (1 - fx) * fy * img.channel(x0, y1, ch) + fx * fy * img.channel(x1, y1, ch);
}

std::size_t count_diff(const RasterImage& a, const RasterImage& b) {
    std::size_t n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) n += a.at(x, y) != b.at(x, y);
    return n;
}

bool outside_unchanged(const RasterImage& a, const RasterImage& b, const BBox& box) {
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (!box.contains(x, y) && a.at(x, y) != b.at(x, y)) return false;
    return true;
}

}  // namespace

TEST(Raster, RejectsEmptyDimensions) {
    EXPECT_THROW(RasterImage(0, 3), Error);
    EXPECT_THROW(RasterImage(3, 0), Error);
    EXPECT_THROW(RasterImage(2, 2, std::vector<std::uint8_t>(11)), Error);
}

TEST(Resize, IdentityAtTargetSize) {
    const auto img = random_image(448, 768, 1);
    EXPECT_EQ(resize_normalize(img, 768, 448), img);
}

TEST(Resize, CheckerToOnePixelRoundsHalfUp) {
    RasterImage img(2, 2);
    img.set(1, 0, Color::white());
    img.set(0, 1, Color::white());
    const auto out = resize_normalize(img, 1, 1);
    ASSERT_EQ(out.width(), 1);
    ASSERT_EQ(out.height(), 1);
    // (0 + 255 + 255 + 0) / 4 = 127.5 -> 128
    EXPECT_EQ(out.at(0, 0), (Color{128, 128, 128}));
}

TEST(Resize, DownscaleMatchesNaiveBilinear) {
    const auto img = random_image(96, 160, 2);
    const auto out = resize_normalize(img, 80, 48);
    for (int y = 0; y < 80; ++y) {
        for (int x = 0; x < 48; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = naive_bilinear(img, (x + 0.5) * 2 - 0.5, (y + 0.5) * 2 - 0.5, c);
                ASSERT_EQ(out.channel(x, y, c), static_cast<int>(std::floor(v + 0.5))) << x << "," << y;
            }
        }
    }
}

TEST(Resize, ArbitraryScaleMatchesNaiveBilinear) {
    const auto img = random_image(37, 23, 3);
    const auto out = resize_normalize(img, 50, 19);
    const double sx = 37.0 / 19, sy = 23.0 / 50;
    for (int y = 0; y < 50; ++y)
        for (int x = 0; x < 19; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = naive_bilinear(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5, c);
                ASSERT_EQ(out.channel(x, y, c), static_cast<int>(std::floor(v + 0.5)));
            }
}

TEST(Resize, Idempotent) {
    const auto img = random_image(30, 50, 4);
    const auto once = resize_normalize(img, 20, 12);
    EXPECT_EQ(resize_normalize(once, 20, 12), once);
}

TEST(Resize, ZeroTargetThrows) {
    const RasterImage img(4, 4);
    EXPECT_THROW(resize_normalize(img, 0, 4), Error);
    EXPECT_THROW(resize_normalize(img, 4, 0), Error);
}

TEST(Rotate, PortraitAndSquareUnchanged) {
    const auto p = random_image(448, 768, 5);
    EXPECT_EQ(rotate_to_portrait(p), p);
    const auto sq = random_image(5, 5, 6);
    EXPECT_EQ(rotate_to_portrait(sq), sq);
}

TEST(Rotate, NumberedGridClockwise) {
    // 3 wide, 2 tall:   0 1 2
    //                   3 4 5
    RasterImage img(3, 2);
    for (int i = 0; i < 6; ++i) img.set(i % 3, i / 3, {static_cast<std::uint8_t>(i), 0, 0});
    const auto r = rotate_to_portrait(img);
    ASSERT_EQ(r.width(), 2);
    ASSERT_EQ(r.height(), 3);
    // Clockwise:  3 0
    //             4 1
    //             5 2
    const int expect[3][2] = {{3, 0}, {4, 1}, {5, 2}};
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 2; ++x) EXPECT_EQ(r.at(x, y).r, expect[y][x]);
}

TEST(Rotate, Landscape768x448) {
    const auto img = random_image(768, 448, 7);
    const auto r = rotate_to_portrait(img);
    ASSERT_EQ(r.width(), 448);
    ASSERT_EQ(r.height(), 768);
    for (int y = 0; y < 448; y += 37)
        for (int x = 0; x < 768; x += 41) ASSERT_EQ(r.at(447 - y, x), img.at(x, y));
    EXPECT_EQ(rotate_to_portrait(r), r);
}

TEST(Fill, FullImageWhite) {
    const auto res = fill_rect(RasterImage(4, 3), {0, 0, 4, 3}, Color::white());
    EXPECT_EQ(res.status, DrawStatus::Ok);
    EXPECT_EQ(res.image, RasterImage(4, 3, Color::white()));
}

TEST(Fill, SinglePixel) {
    const auto res = fill_rect(RasterImage(2, 2), {0, 0, 1, 1}, Color::white());
    EXPECT_EQ(res.image.at(0, 0), Color::white());
    EXPECT_EQ(count_diff(res.image, RasterImage(2, 2)), 1u);
}

TEST(Fill, ClipsPastRightEdge) {
    const RasterImage img(20, 10);
    const BBox box{15, 2, 30, 6};
    const auto res = fill_rect(img, box, Color::white());
    EXPECT_EQ(res.status, DrawStatus::Ok);
    EXPECT_EQ(count_diff(res.image, img), 5u * 4u);
    EXPECT_TRUE(outside_unchanged(img, res.image, box));
}

TEST(Fill, OutsideIsNoOpWithStatus) {
    const auto img = random_image(8, 8, 8);
    const auto res = fill_rect(img, {20, 20, 30, 30}, Color::white());
    EXPECT_EQ(res.status, DrawStatus::OutsideImage);
    EXPECT_EQ(res.image, img);
}

TEST(Paste, SelfAtOriginIsIdentity) {
    const auto img = random_image(9, 7, 9);
    EXPECT_EQ(paste(img, img, {0, 0}), img);
}

TEST(Paste, OnePixel) {
    const auto out = paste(RasterImage(8, 8), RasterImage(1, 1, Color::white()), {3, 4});
    EXPECT_EQ(out.at(3, 4), Color::white());
    EXPECT_EQ(count_diff(out, RasterImage(8, 8)), 1u);
}

TEST(Paste, OverflowBottomDropped) {
    const RasterImage img(10, 10);
    const auto out = paste(img, RasterImage(4, 6, Color::white()), {2, 7});
    EXPECT_EQ(count_diff(out, img), 4u * 3u);
    EXPECT_TRUE(outside_unchanged(img, out, {2, 7, 6, 13}));
}

TEST(Text, LetterAMatchesHandMask) {
    const char* mask[7] = {".###.", "#...#", "#...#", "#...#", "#####", "#...#", "#...#"};
    const auto res = draw_text(RasterImage(10, 10), {0, 0}, "A", Color::white(), 7);
    ASSERT_TRUE(res.box);
    EXPECT_EQ(*res.box, (BBox{0, 0, 5, 7}));
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            const bool ink = x < 5 && y < 7 && mask[y][x] == '#';
            EXPECT_EQ(res.image.at(x, y) == Color::white(), ink) << x << "," << y;
        }
}

TEST(Text, NullAtCell14) {
    const auto layout = layout_text("null", 14);
    EXPECT_EQ(layout.x_scale, 2);
    EXPECT_EQ(layout.advance(), 12);
    // Four 12-px advances minus the spacing after the last glyph.
    EXPECT_EQ(layout.width(), 46);
    const auto res = draw_text(RasterImage(100, 30), {3, 5}, "null", Color::white(), 14);
    ASSERT_TRUE(res.box);
    EXPECT_EQ(*res.box, (BBox{3, 5, 49, 19}));
    EXPECT_TRUE(outside_unchanged(RasterImage(100, 30), res.image, *res.box));
}

TEST(Text, FullyClippedAtCorner) {
    const RasterImage img(20, 20);
    const auto res = draw_text(img, {20, 20}, "Hi", Color::white(), 7);
    EXPECT_FALSE(res.box);
    EXPECT_EQ(res.image, img);
}

TEST(Text, PartiallyClippedBoxIntersected) {
    const RasterImage img(20, 20);
    const auto res = draw_text(img, {15, 16}, "Hi", Color::white(), 7);
    ASSERT_TRUE(res.box);
    EXPECT_EQ(*res.box, (BBox{15, 16, 20, 20}));
    EXPECT_TRUE(outside_unchanged(img, res.image, *res.box));
}

TEST(Text, EmptyAndShortCellThrow) {
    const RasterImage img(20, 20);
    try {
        draw_text(img, {0, 0}, "", Color::white(), 7);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateRegion);
    }
    EXPECT_THROW(draw_text(img, {0, 0}, "x", Color::white(), 6), Error);
}

TEST(Text, NonAsciiIsOneReplacementGlyph) {
    EXPECT_EQ(layout_text("h\xC3\xA9", 7).glyph_count, 2);
    const auto a = draw_text(RasterImage(20, 10), {0, 0}, "\xE2\x82\xAC", Color::white(), 7);
    const auto b = draw_text(RasterImage(20, 10), {0, 0}, "\xC3\xA9", Color::white(), 7);
    EXPECT_EQ(a.image, b.image);
    EXPECT_GT(count_diff(a.image, RasterImage(20, 10)), 0u);
}

TEST(Text, Deterministic) {
    const auto img = random_image(60, 30, 10);
    EXPECT_EQ(draw_text(img, {2, 3}, "Save 42", Color::white(), 12).image,
              draw_text(img, {2, 3}, "Save 42", Color::white(), 12).image);
}

TEST(Heatmap, AlphaZeroAndZeroMapAreIdentity) {
    const auto img = random_image(12, 9, 11);
    EXPECT_EQ(overlay_heatmap(img, Grid<double>(12, 9, 0.7), 0.0), img);
    EXPECT_EQ(overlay_heatmap(img, Grid<double>(12, 9, 0.0), 1.0), img);
}

TEST(Heatmap, SaturatedIsRed) {
    const auto out = overlay_heatmap(random_image(5, 5, 12), Grid<double>(5, 5, 1.0), 1.0);
    EXPECT_EQ(out, RasterImage(5, 5, Color{255, 0, 0}));
}

TEST(Heatmap, RampEndsAndMidpoint) {
    EXPECT_EQ(heat_color(0.0), (Color{0, 0, 255}));
    EXPECT_EQ(heat_color(1.0), (Color{255, 0, 0}));
    EXPECT_EQ(heat_color(0.5), (Color{128, 0, 128}));
}

TEST(Heatmap, DimensionMismatchThrows) {
    EXPECT_THROW(overlay_heatmap(RasterImage(4, 4), Grid<double>(4, 5), 0.5), Error);
}

TEST(ImageIo, PngRoundTripIsExactAndStable) {
    const auto dir = std::filesystem::temp_directory_path() / "owleye_test_io";
    const auto img = random_image(33, 17, 13);
    write_png(dir / "a.png", img);
    write_png(dir / "b.png", img);
    EXPECT_EQ(read_image(dir / "a.png"), img);
    EXPECT_EQ(read_text_file(dir / "a.png"), read_text_file(dir / "b.png"));
    std::filesystem::remove_all(dir);
}

TEST(ImageIo, UnreadableFileThrowsIo) {
    const auto dir = std::filesystem::temp_directory_path() / "owleye_test_io_bad";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "x.png") << "not an image";
    try {
        read_image(dir / "x.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_TRUE(e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Parse);
    }
    EXPECT_THROW(read_image(dir / "missing.png"), Error);
    std::filesystem::remove_all(dir);
}
