#include <gtest/gtest.h>

#include "owleye/hierarchy.hpp"
#include "owleye/synth/synthetic_ui.hpp"

using namespace owleye;

namespace {

const char* kOneText = R"({"activity": {"root": {
  "class": "com.android.internal.policy.PhoneWindow$DecorView",
  "bounds": [0, 0, 1440, 2560], "visibility": "visible", "visible-to-user": true,
  "children": [
    {"class": "android.widget.TextView", "bounds": [10, 20, 110, 60], "text": "Hi",
     "visibility": "visible", "visible-to-user": true}
  ]}}})";

std::vector<std::string> classes(const std::vector<ViewNode>& v) {
    std::vector<std::string> out;
    for (const auto& n : v) out.push_back(n.class_name + ":" + n.text.value_or(""));
    return out;
}

// Full pre-order, written independently of collect_views.
void preorder(const ViewNode& n, std::vector<const ViewNode*>& out) {
    out.push_back(&n);
    for (const auto& c : n.children) preorder(c, out);
}

}  // namespace

TEST(Parse, OneTextViewWidthHeight) {
    const ViewTree t = parse_hierarchy(kOneText);
    EXPECT_EQ(t.screen_w, 1440);
    EXPECT_EQ(t.screen_h, 2560);
    ASSERT_EQ(t.root.children.size(), 1u);
    const ViewNode& v = t.root.children[0];
    EXPECT_EQ(v.bounds.width(), 100);
    EXPECT_EQ(v.bounds.height(), 40);
    EXPECT_EQ(v.text, "Hi");
    EXPECT_TRUE(v.visible);
}

TEST(Parse, EmptyChildren) {
    const ViewTree t = parse_hierarchy(R"({"activity":{"root":{"class":"X","bounds":[0,0,10,20],"children":[]}}})");
    EXPECT_TRUE(t.root.children.empty());
    EXPECT_EQ(t.screen_w, 10);
    EXPECT_EQ(t.screen_h, 20);
}

TEST(Parse, BareRootAccepted) {
    const ViewTree t = parse_hierarchy(R"({"root":{"class":"X","bounds":[0,0,10,20]}})");
    EXPECT_EQ(t.screen_h, 20);
}

TEST(Parse, ZeroWidthFlaggedInvisible) {
    const ViewTree t = parse_hierarchy(R"({"activity":{"root":{"class":"X","bounds":[0,0,100,100],
        "children":[{"class":"android.widget.TextView","bounds":[50,50,50,90],"text":"a"}]}}})");
    ASSERT_EQ(t.root.children.size(), 1u);
    EXPECT_FALSE(t.root.children[0].visible);
    EXPECT_TRUE(collect_views(t, ViewKind::TextView).empty());
}

TEST(Parse, InvisibleMarkersRespected) {
    const ViewTree t = parse_hierarchy(R"({"activity":{"root":{"class":"X","bounds":[0,0,100,100],"children":[
        {"class":"android.widget.TextView","bounds":[0,0,50,50],"text":"a","visibility":"gone"},
        {"class":"android.widget.TextView","bounds":[0,0,50,50],"text":"b","visible-to-user":false},
        {"class":"android.widget.TextView","bounds":[0,0,50,50],"text":"c"}]}}})");
    const auto got = collect_views(t, ViewKind::TextView);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].text, "c");
}

TEST(Parse, SyntaxErrorCarriesOffset) {
    const std::string doc = R"({"activity": {"root": {"class": "X",, }}})";
    try {
        parse_hierarchy(doc);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_GT(e.offset(), 30u);
        EXPECT_LE(e.offset(), doc.size());
    }
}

TEST(Parse, MissingRootIsSchemaError) {
    try {
        parse_hierarchy(R"({"activity": {"name": "x"}})");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Schema);
    }
}

TEST(Parse, RoundTripThroughSerialize) {
    const auto scr = synth::make_screen(3, 1);
    const ViewTree again = parse_hierarchy(serialize_hierarchy(scr.tree));
    EXPECT_EQ(again, scr.tree);
    const ViewTree t = parse_hierarchy(kOneText);
    EXPECT_EQ(parse_hierarchy(serialize_hierarchy(t)), t);
}

TEST(Collect, SkipsEmptyTextAndOtherKinds) {
    const ViewTree t = parse_hierarchy(R"({"activity":{"root":{"class":"X","bounds":[0,0,100,100],"children":[
        {"class":"android.widget.TextView","bounds":[0,0,50,20],"text":""},
        {"class":"android.widget.TextView","bounds":[0,20,50,40],"text":"ok"},
        {"class":"android.widget.ImageView","bounds":[0,40,50,90]}]}}})");
    EXPECT_EQ(classes(collect_views(t, ViewKind::TextView)), std::vector<std::string>{"android.widget.TextView:ok"});
    EXPECT_EQ(collect_views(t, ViewKind::ImageView).size(), 1u);
}

TEST(Collect, TextOnlyTreeHasNoImages) {
    EXPECT_TRUE(collect_views(parse_hierarchy(kOneText), ViewKind::ImageView).empty());
}

TEST(Collect, NestedParentFirst) {
    const ViewTree t = parse_hierarchy(R"({"activity":{"root":{"class":"X","bounds":[0,0,100,100],"children":[
        {"class":"android.widget.TextView","bounds":[0,0,90,90],"text":"outer","children":[
          {"class":"android.support.v7.widget.AppCompatTextView","bounds":[10,10,50,50],"text":"inner"}]}]}}})");
    EXPECT_EQ(classes(collect_views(t, ViewKind::TextView)),
              (std::vector<std::string>{"android.widget.TextView:outer", "android.support.v7.widget.AppCompatTextView:inner"}));
}

TEST(Collect, SuffixMatchOnly) {
    EXPECT_TRUE(matches_kind("android.widget.TextView", ViewKind::TextView));
    EXPECT_TRUE(matches_kind("android.support.v7.widget.AppCompatImageView", ViewKind::ImageView));
    EXPECT_FALSE(matches_kind("android.widget.TextViewWrapper", ViewKind::TextView));
    EXPECT_FALSE(matches_kind("android.widget.ImageButton", ViewKind::ImageView));
}

TEST(Collect, OffScreenAndTinyExcluded) {
    const ViewTree t = parse_hierarchy(R"({"activity":{"root":{"class":"X","bounds":[0,0,100,100],"children":[
        {"class":"android.widget.TextView","bounds":[90,0,120,20],"text":"off"},
        {"class":"android.widget.TextView","bounds":[0,0,11,30],"text":"thin"},
        {"class":"android.widget.TextView","bounds":[0,0,12,12],"text":"ok"}]}}})");
    EXPECT_EQ(collect_views(t, ViewKind::TextView, 12).size(), 1u);
    EXPECT_EQ(collect_views(t, ViewKind::TextView, 1).size(), 2u);
}

TEST(Collect, SublistOfPreorder) {
    for (int app = 0; app < 6; ++app) {
        const auto scr = synth::make_screen(app, 0);
        std::vector<const ViewNode*> all;
        preorder(scr.tree.root, all);
        for (ViewKind k : {ViewKind::TextView, ViewKind::ImageView}) {
            const auto got = collect_views(scr.tree, k, 12);
            std::size_t j = 0;
            for (const auto* n : all) {
                if (j < got.size() && n->bounds == got[j].bounds && n->class_name == got[j].class_name && n->text == got[j].text) ++j;
            }
            EXPECT_EQ(j, got.size());
            for (const auto& v : got) {
                EXPECT_TRUE(v.bounds.valid());
                EXPECT_TRUE(scr.tree.screen().contains(v.bounds));
            }
        }
    }
}

TEST(Background, SolidAndBorderedRegions) {
    RasterImage img(10, 10, Color::white());
    EXPECT_EQ(sample_background_color(img, {2, 2, 8, 8}), Color::white());
    fill_rect_inplace(img, {3, 3, 7, 7}, Color::black());
    EXPECT_EQ(sample_background_color(img, {2, 2, 8, 8}), Color::white());
}

TEST(Background, TieGoesToLowestPacked) {
    // 4x4 box: 12 perimeter pixels, top half red and bottom half blue.
    RasterImage img(4, 4, Color{255, 0, 0});
    fill_rect_inplace(img, {0, 2, 4, 4}, Color{0, 0, 255});
    EXPECT_EQ(sample_background_color(img, {0, 0, 4, 4}), (Color{0, 0, 255}));
}

TEST(Background, SolidImageAnyBox) {
    const RasterImage img(20, 15, Color{12, 34, 56});
    for (const BBox b : {BBox{0, 0, 20, 15}, BBox{3, 4, 5, 6}, BBox{19, 14, 25, 30}, BBox{7, 7, 8, 8}}) {
        EXPECT_EQ(sample_background_color(img, b), (Color{12, 34, 56}));
    }
}

TEST(Background, OutsideThrows) {
    EXPECT_THROW(sample_background_color(RasterImage(5, 5), {6, 6, 9, 9}), Error);
}

TEST(Scale, BoundsFollowScreen) {
    const ViewTree t = parse_hierarchy(kOneText);
    const ViewTree s = scale_hierarchy(t, 720, 1280);
    EXPECT_EQ(s.screen_w, 720);
    EXPECT_EQ(s.root.children[0].bounds, (BBox{5, 10, 55, 30}));
}
