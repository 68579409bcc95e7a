#include <gtest/gtest.h>

#include <map>

#include "owleye/augmentor.hpp"
#include "owleye/synth/synthetic_ui.hpp"

using namespace owleye;

namespace {

ViewNode text_view(BBox b, std::string text) {
    ViewNode n;
    n.class_name = "android.widget.TextView";
    n.bounds = b;
    n.text = std::move(text);
    return n;
}

ViewNode image_view(BBox b) {
    ViewNode n;
    n.class_name = "android.widget.ImageView";
    n.bounds = b;
    return n;
}

ViewTree tree_of(int w, int h, std::vector<ViewNode> children) {
    ViewTree t;
    t.root.class_name = "android.widget.FrameLayout";
    t.root.bounds = {0, 0, w, h};
    t.root.children = std::move(children);
    t.screen_w = w;
    t.screen_h = h;
    return t;
}

std::optional<BBox> diff_box(const RasterImage& a, const RasterImage& b) {
    BBox box{a.width(), a.height(), -1, -1};
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (a.at(x, y) != b.at(x, y)) {
                box.x1 = std::min(box.x1, x);
                box.y1 = std::min(box.y1, y);
                box.x2 = std::max(box.x2, x + 1);
                box.y2 = std::max(box.y2, y + 1);
            }
    if (!box.valid()) return std::nullopt;
    return box;
}

}  // namespace

TEST(Occlusion, UpperHalf) {
    const RasterImage scr(400, 300, Color{10, 20, 30});
    ScriptedDraws d({0.5});
    const auto r = occlude_component(scr, image_view({100, 200, 300, 240}), Color::white(), d);
    EXPECT_EQ(r.region, (BBox{100, 200, 300, 220}));
    EXPECT_EQ(diff_box(scr, r.image), r.region);
}

TEST(Occlusion, LowerHalf) {
    const RasterImage scr(400, 300, Color{10, 20, 30});
    ScriptedDraws d({-0.5});
    const auto r = occlude_component(scr, image_view({100, 200, 300, 240}), Color::white(), d);
    EXPECT_EQ(r.region, (BBox{100, 220, 300, 240}));
    EXPECT_EQ(diff_box(scr, r.image), r.region);
}

TEST(Occlusion, FloorRejectsTinyDraw) {
    const RasterImage scr(400, 300);
    ScriptedDraws d({0.02, 0.7});
    const auto r = occlude_component(scr, image_view({100, 200, 300, 240}), Color::white(), d);
    EXPECT_EQ(d.consumed(), 2u);
    EXPECT_EQ(r.region, (BBox{100, 200, 300, 228}));
}

TEST(Overlap, HandTracedOrigins) {
    const RasterImage scr(400, 300, Color::white());
    const ViewNode v = text_view({50, 100, 250, 130}, "Save");
    // cell 30: x scale 4, advance 24, width 4*24 - 4 = 92
    const std::map<double, int> expect = {{60.0, 190}, {0.0, 250}, {100.0, 150}};
    for (const auto& [xrand, x] : expect) {
        ScriptedDraws d({xrand});
        const auto r = overlap_text(scr, v, d);
        EXPECT_EQ(r.region, (BBox{x, 100, x + 92, 130})) << xrand;
        const auto ref = draw_text(scr, {x, 100}, "Save", Color::black(), 30);
        EXPECT_EQ(r.image, ref.image);
    }
}

TEST(Overlap, RetriesWhenOffScreen) {
    const RasterImage scr(200, 100, Color::white());
    const ViewNode v = text_view({100, 10, 200, 30}, "Save");
    // -50 puts the origin at x = 250, outside; 20 puts it at 180.
    ScriptedDraws d({-50.0, 20.0});
    const auto r = overlap_text(scr, v, d);
    EXPECT_EQ(d.consumed(), 2u);
    EXPECT_EQ(r.region.x1, 180);
    ScriptedDraws never(std::vector<double>(8, -50.0));
    try {
        overlap_text(scr, v, never);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoCandidate);
    }
}

TEST(Overlap, ColorFollowsBackgroundLuminance) {
    EXPECT_EQ(contrast_text_color(Color::white()), Color::black());
    EXPECT_EQ(contrast_text_color(Color{20, 20, 20}), Color::white());
    EXPECT_EQ(contrast_text_color(Color{128, 128, 128}), Color::black());
    EXPECT_EQ(contrast_text_color(Color{127, 128, 127}), Color::white());
}

TEST(MissingImage, LiteralPlacement) {
    RasterImage scr(120, 120, Color{200, 0, 0});
    fill_rect_inplace(scr, {0, 0, 100, 100}, Color{0, 200, 0});
    RasterImage icon(40, 40, Color{1, 2, 3});
    icon.set(0, 0, Color::white());
    const auto r = missing_image(scr, image_view({0, 0, 100, 100}), Color{9, 9, 9}, icon);
    EXPECT_EQ(r.region, (BBox{0, 0, 100, 100}));
    const RasterImage scaled = resize_normalize(icon, 50, 50);
    for (int y = 0; y < 120; ++y)
        for (int x = 0; x < 120; ++x) {
            Color want = scr.at(x, y);
            if (x < 100 && y < 100) want = Color{9, 9, 9};
            if (x >= 50 && x < 100 && y >= 50 && y < 100) want = scaled.at(x - 50, y - 50);
            ASSERT_EQ(r.image.at(x, y), want) << x << "," << y;
        }
}

TEST(MissingImage, CenteredVariant) {
    const RasterImage scr(100, 100);
    const auto r = missing_image(scr, image_view({0, 0, 100, 60}), Color::white(), RasterImage(10, 10, Color{1, 1, 1}), true);
    // side 30 centered: (35,15)-(65,45)
    EXPECT_EQ(r.image.at(35, 15), (Color{1, 1, 1}));
    EXPECT_EQ(r.image.at(64, 44), (Color{1, 1, 1}));
    EXPECT_EQ(r.image.at(34, 15), Color::white());
    EXPECT_EQ(r.image.at(65, 44), Color::white());
}

TEST(MissingImage, EdgeClipKeepsRegion) {
    const RasterImage scr(100, 100);
    const auto r = missing_image(scr, image_view({60, 60, 100, 100}), Color::white(), default_icon());
    EXPECT_EQ(r.region, (BBox{60, 60, 100, 100}));
    EXPECT_EQ(diff_box(scr, r.image).value(), r.region);
}

TEST(MissingImage, DefaultIconIsNotBlank) {
    const RasterImage icon = default_icon();
    EXPECT_EQ(icon.width(), 24);
    EXPECT_EQ(icon.height(), 24);
    EXPECT_TRUE(diff_box(icon, RasterImage(24, 24, icon.at(0, 0))).has_value());
}

TEST(NullValue, WhiteBackground) {
    RasterImage scr(200, 100, Color::white());
    draw_text_inplace(scr, {12, 14}, "Hello", Color{50, 50, 50}, 7);
    const auto r = null_value(scr, text_view({10, 10, 130, 38}, "Hello"), Color::white());
    EXPECT_EQ(r.region, (BBox{10, 10, 130, 38}));
    RasterImage expect(200, 100, Color::white());
    draw_text_inplace(expect, {10, 10}, "null", Color::black(), 28);
    EXPECT_EQ(r.image, expect);
}

TEST(NullValue, DarkBackgroundDrawsWhite) {
    const Color dark{20, 20, 20};
    const RasterImage scr(200, 100, dark);
    const auto r = null_value(scr, text_view({10, 10, 130, 38}, "x"), dark);
    EXPECT_EQ(r.image.at(10, 10), dark);
    bool any_white = false;
    for (int y = 10; y < 38; ++y)
        for (int x = 10; x < 130; ++x) any_white |= r.image.at(x, y) == Color::white();
    EXPECT_TRUE(any_white);
}

TEST(NullValue, TwelvePixelView) {
    const RasterImage scr(100, 40, Color::white());
    const auto r = null_value(scr, text_view({0, 0, 60, 12}, "x"), Color::white());
    EXPECT_EQ(layout_text("null", 12).x_scale, 1);
    const auto ink = diff_box(scr, r.image).value();
    EXPECT_EQ(ink.height(), 12);
    EXPECT_EQ(ink.y1, 0);
}

TEST(Augment, NoImageViewsMeansNoCandidate) {
    const ViewTree t = tree_of(200, 200, {text_view({0, 0, 100, 20}, "a")});
    try {
        augment(RasterImage(200, 200), t, BugCategory::MissingImage, std::nullopt, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoCandidate);
    }
}

TEST(Augment, BlurredUnsupported) {
    const ViewTree t = tree_of(200, 200, {text_view({0, 0, 100, 20}, "a")});
    try {
        augment(RasterImage(200, 200), t, BugCategory::BlurredScreen, std::nullopt, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedCategory);
    }
}

TEST(Augment, SingletonTarget) {
    const ViewTree t = tree_of(200, 200, {text_view({20, 30, 120, 50}, "only")});
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = augment(RasterImage(200, 200, Color::white()), t, BugCategory::NullValue, std::nullopt, seed);
        EXPECT_EQ(r.record.target_view, (BBox{20, 30, 120, 50}));
        EXPECT_EQ(r.record.bug_region, (BBox{20, 30, 120, 50}));
    }
}

TEST(Augment, HierarchyScaledToScreenshot) {
    // Hierarchy in 400x400 device pixels, screenshot at 200x200.
    const ViewTree t = tree_of(400, 400, {text_view({40, 60, 240, 100}, "only")});
    const auto r = augment(RasterImage(200, 200, Color::white()), t, BugCategory::NullValue, std::nullopt, 4);
    EXPECT_EQ(r.record.bug_region, (BBox{20, 30, 120, 50}));
}

TEST(Augment, DeterministicAndReplayable) {
    const auto scr = synth::make_screen(7, 2);
    for (BugCategory c : kSynthesizedCategories) {
        const auto a = augment(scr.image, scr.tree, c, std::nullopt, 99, {}, scr.source_id);
        const auto b = augment(scr.image, scr.tree, c, std::nullopt, 99, {}, scr.source_id);
        EXPECT_EQ(a.image, b.image);
        EXPECT_EQ(a.record, b.record);
        EXPECT_EQ(a.record.source_id, scr.source_id);
        ASSERT_FALSE(a.record.rand_draws.empty());
    }
    const auto a = augment(scr.image, scr.tree, BugCategory::ComponentOcclusion, std::nullopt, 5);
    ViewNode view;
    view.bounds = a.record.target_view;
    ScriptedDraws replay(std::vector<double>(a.record.rand_draws.begin() + 1, a.record.rand_draws.end()));
    const auto again = occlude_component(scr.image, view, sample_background_color(scr.image, view.bounds), replay);
    EXPECT_EQ(again.image, a.image);
}

TEST(Augment, RegionContainsEveryChangedPixel) {
    int checked = 0;
    for (int app = 0; app < 12; ++app) {
        const auto scr = synth::make_screen(app, app % 3, 128, 192, 11);
        for (BugCategory c : kSynthesizedCategories) {
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                AugmentResult r{RasterImage(1, 1), {}};
                try {
                    r = augment(scr.image, scr.tree, c, std::nullopt, seed);
                } catch (const Error& e) {
                    ASSERT_EQ(e.kind(), ErrorKind::NoCandidate);
                    continue;
                }
                const BBox& reg = r.record.bug_region;
                ASSERT_TRUE(reg.valid());
                ASSERT_TRUE(scr.image.bounds().contains(reg));
                if (const auto d = diff_box(scr.image, r.image)) {
                    EXPECT_TRUE(reg.contains(*d)) << to_string(c);
                }
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 100);
}

TEST(Augment, ForceOverlapStaysLeftOfRightEdge) {
    const ViewTree t = tree_of(300, 100, {text_view({20, 10, 220, 30}, "Hello")});
    AugmentOptions opts;
    opts.force_overlap = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = augment(RasterImage(300, 100, Color::white()), t, BugCategory::TextOverlap, std::nullopt, seed, opts);
        EXPECT_LE(r.record.bug_region.x1, 220);
        EXPECT_GE(r.record.bug_region.x1, 120);
    }
}

TEST(Categories, DefaultMixOnTenSources) {
    const auto cats = assign_categories(10, kDefaultMix, 3);
    std::map<BugCategory, int> n;
    for (const auto& c : cats) {
        ASSERT_TRUE(c);
        ++n[*c];
    }
    EXPECT_EQ(n[BugCategory::ComponentOcclusion], 1);
    EXPECT_EQ(n[BugCategory::TextOverlap], 3);
    EXPECT_EQ(n[BugCategory::MissingImage], 3);
    EXPECT_EQ(n[BugCategory::NullValue], 3);
    EXPECT_EQ(cats, assign_categories(10, kDefaultMix, 3));
}

TEST(Categories, QuotasWithinRounding) {
    for (std::size_t n : {1u, 7u, 13u, 40u, 101u}) {
        const auto cats = assign_categories(n, kDefaultMix, n);
        std::map<BugCategory, double> got;
        for (const auto& c : cats) got[*c] += 1;
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_LT(std::abs(got[kSynthesizedCategories[i]] - kDefaultMix[i] * static_cast<double>(n)), 1.0) << n;
        }
    }
}

TEST(Categories, PartialMixLeavesRestUnassigned) {
    const auto cats = assign_categories(10, {0.1, 0.1, 0.0, 0.0}, 1);
    EXPECT_EQ(std::count(cats.begin(), cats.end(), std::nullopt), 8);
    EXPECT_THROW(assign_categories(10, {0.5, 0.5, 0.5, 0.0}, 1), Error);
    EXPECT_THROW(assign_categories(10, {-0.1, 0.5, 0.0, 0.0}, 1), Error);
}

TEST(Categories, Names) {
    for (BugCategory c : kAllCategories) EXPECT_EQ(parse_category(to_string(c)), c);
    EXPECT_EQ(display_name(BugCategory::NullValue), "NULL value");
    EXPECT_THROW(parse_category("smudge"), Error);
}
