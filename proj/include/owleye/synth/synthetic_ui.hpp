#ifndef OWLEYE_SYNTH_SYNTHETIC_UI_HPP
#define OWLEYE_SYNTH_SYNTHETIC_UI_HPP

// Procedural app screens with matching Rico-style view hierarchies. Used by
// the test suites and the corpus tool in place of downloaded Rico data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "owleye/hierarchy.hpp"
#include "owleye/imaging.hpp"
#include "owleye/rng.hpp"

namespace owleye::synth {

struct SyntheticScreen {
    std::string source_id;  // "<app>_<screen>"
    RasterImage image;
    ViewTree tree;
};

namespace detail {

inline constexpr std::array<const char*, 48> kWords = {
    "home",    "search", "profile", "settings", "inbox",   "share",  "Save",    "Cancel", "Next",    "Back",
    "Account", "Music",  "Photos",  "Friends",  "Recent",  "Help",   "About",   "Login",  "Sign up", "Orders",
    "Cart",    "Total",  "Price",   "Today",    "Weather", "News",   "Sports",  "Map",    "Notes",   "Events",
    "Wallet",  "Send",   "Pay",     "Balance",  "Offers",  "Videos", "Library", "Store",  "Alarm",   "Timer",
    "Hello",   "Done",   "Edit",    "Delete",   "Upload",  "Games",  "Chat",    "Feed"};

inline Color random_color(Rng& rng, int lo, int hi) {
    auto ch = [&] { return static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)))); };
    return {ch(), ch(), ch()};
}

inline Color mix(Color a, Color b, double t) {
    return {to_channel(a.r * (1 - t) + b.r * t), to_channel(a.g * (1 - t) + b.g * t), to_channel(a.b * (1 - t) + b.b * t)};
}

inline std::string random_text(Rng& rng, int max_words) {
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_words)));
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += kWords[rng.below(kWords.size())];
    }
    return s;
}

inline ViewNode node(std::string cls, BBox b, std::optional<std::string> text = std::nullopt) {
    ViewNode n;
    n.class_name = std::move(cls);
    n.bounds = b;
    n.text = std::move(text);
    return n;
}

/// Picture-like content: a two-color gradient with a disc.
inline void paint_picture(RasterImage& img, const BBox& b, Rng& rng) {
    const Color c1 = random_color(rng, 40, 230);
    const Color c2 = random_color(rng, 40, 230);
    const Color disc = random_color(rng, 0, 255);
    const double cx = b.x1 + b.width() * rng.uniform(0.25, 0.75);
    const double cy = b.y1 + b.height() * rng.uniform(0.25, 0.75);
    const double r = std::min(b.width(), b.height()) * rng.uniform(0.15, 0.35);
    for (int y = b.y1; y < b.y2; ++y) {
        for (int x = b.x1; x < b.x2; ++x) {
            const double t = static_cast<double>((x - b.x1) + (y - b.y1)) / (b.width() + b.height());
            Color c = mix(c1, c2, t);
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) c = disc;
            img.set(x, y, c);
        }
    }
}

/// Text that fits in max_w pixels at cell 7.
inline std::string fit_text(std::string text, int max_w) {
    while (text.size() > 1 && layout_text(text, 7).width() > max_w) text.pop_back();
    while (!text.empty() && text.back() == ' ') text.pop_back();
    return text.empty() ? std::string("ok") : text;
}

}  // namespace detail

/// One screen of app `app`; screens of the same app share a theme.
inline SyntheticScreen make_screen(int app, int screen, int width = 128, int height = 192, std::uint64_t seed = 0) {
    using namespace detail;
    Rng theme(derive_seed(seed, "app" + std::to_string(app)));
    const bool dark = theme.uniform() < 0.25;
    const Color bg = dark ? random_color(theme, 18, 48) : random_color(theme, 225, 255);
    const Color fg = dark ? random_color(theme, 200, 240) : random_color(theme, 20, 70);
    const Color accent = random_color(theme, 30, 200);
    const Color on_accent = accent.luminance() >= 128 ? Color::black() : Color::white();
    const int pad = 3 + static_cast<int>(theme.below(2));

    Rng rng(derive_seed(seed, "app" + std::to_string(app) + "/" + std::to_string(screen)));
    RasterImage img(width, height, bg);
    ViewNode root = node("com.android.internal.policy.PhoneWindow$DecorView", {0, 0, width, height});
    ViewNode content = node("android.widget.LinearLayout", {0, 0, width, height});

    auto add_text = [&](ViewNode& parent, int x, int y, const std::string& text, Color color, int cell, int max_w,
                        const char* cls = "android.widget.TextView") {
        const std::string t = fit_text(text, max_w - 2 * pad);
        const int tw = layout_text(t, cell).width();
        const BBox b{x, y, std::min(width, x + tw + 2 * pad), std::min(height, y + cell + 2 * pad)};
        draw_text_inplace(img, {x + pad, y + pad}, t, color, cell);
        parent.children.push_back(node(cls, b, t));
        return b;
    };

    // Status and app bars.
    const int bar_h = 8 + 7 + 2 * pad + 4;
    fill_rect_inplace(img, {0, 0, width, 8}, mix(accent, Color::black(), 0.3));
    fill_rect_inplace(img, {0, 8, width, bar_h}, accent);
    ViewNode toolbar = node("android.support.v7.widget.Toolbar", {0, 8, width, bar_h});
    add_text(toolbar, 4, 10, random_text(rng, 2), on_accent, 7, width - 30, "android.support.v7.widget.AppCompatTextView");
    {
        const BBox icon{width - 18, 11, width - 4, 25};
        for (int y = icon.y1 + 3; y < icon.y2 - 3; y += 3) fill_rect_inplace(img, {icon.x1 + 2, y, icon.x2 - 2, y + 1}, on_accent);
        toolbar.children.push_back(node("android.widget.ImageButton", icon));
    }
    content.children.push_back(std::move(toolbar));

    // Body rows.
    const int nav_h = 22;
    int y = bar_h + 4;
    ViewNode list = node("android.widget.ListView", {0, y, width, height - nav_h});
    bool has_image = false;
    while (true) {
        const double kind = rng.uniform();
        if (kind < 0.4) {  // list item: thumbnail, title, subtitle
            const int side = 24 + static_cast<int>(rng.below(9));
            if (y + side + 4 > height - nav_h) break;
            ViewNode item = node("android.widget.RelativeLayout", {0, y, width, y + side + 4});
            const BBox thumb{4, y + 2, 4 + side, y + 2 + side};
            paint_picture(img, thumb, rng);
            item.children.push_back(node("android.widget.ImageView", thumb));
            has_image = true;
            add_text(item, thumb.x2 + 4, y + 1, random_text(rng, 2), fg, 7, width - thumb.x2 - 8);
            if (side >= 26) add_text(item, thumb.x2 + 4, y + 1 + 7 + 2 * pad - 2, random_text(rng, 3), mix(fg, bg, 0.4), 7, width - thumb.x2 - 8);
            list.children.push_back(std::move(item));
            y += side + 6;
        } else if (kind < 0.6) {  // banner picture
            const int h = 36 + static_cast<int>(rng.below(20));
            if (y + h + 2 > height - nav_h) break;
            const BBox b{4, y, width - 4, y + h};
            paint_picture(img, b, rng);
            list.children.push_back(node("android.widget.ImageView", b));
            has_image = true;
            y += h + 4;
        } else if (kind < 0.85) {  // paragraph line
            if (y + 7 + 2 * pad + 2 > height - nav_h) break;
            add_text(list, 4, y, random_text(rng, 4), fg, 7, width - 8);
            y += 7 + 2 * pad + 2;
        } else {  // button
            const int h = 7 + 2 * pad + 4;
            if (y + h + 2 > height - nav_h) break;
            const std::string label = fit_text(random_text(rng, 1), width - 40);
            const int bw = layout_text(label, 7).width() + 16;
            const BBox b{4, y, std::min(width - 4, 4 + bw), y + h};
            fill_rect_inplace(img, b, accent);
            draw_text_inplace(img, {b.x1 + 8, b.y1 + (h - 7) / 2}, label, on_accent, 7);
            list.children.push_back(node("android.widget.Button", b, label));
            y += h + 4;
        }
    }
    if (!has_image) {  // every screen gets at least one picture
        const int h = std::max(16, std::min(40, height - nav_h - y - 2));
        const BBox b{width - 4 - h, height - nav_h - h - 2, width - 4, height - nav_h - 2};
        paint_picture(img, b, rng);
        list.children.push_back(node("android.widget.ImageView", b));
    }
    content.children.push_back(std::move(list));

    // Bottom navigation icons.
    fill_rect_inplace(img, {0, height - nav_h, width, height}, mix(bg, fg, 0.08));
    ViewNode nav = node("android.support.design.widget.BottomNavigationView", {0, height - nav_h, width, height});
    const int slots = 4;
    for (int i = 0; i < slots; ++i) {
        const int cx = width * (2 * i + 1) / (2 * slots);
        const BBox b{cx - 7, height - nav_h + 4, cx + 7, height - nav_h + 18};
        const Color c = i == 0 ? accent : mix(fg, bg, 0.3);
        fill_rect_inplace(img, {b.x1 + 2, b.y1 + 2, b.x2 - 2, b.y2 - 2}, c);
        fill_rect_inplace(img, {b.x1 + 5, b.y1 + 5, b.x2 - 5, b.y2 - 5}, mix(bg, fg, 0.08));
        nav.children.push_back(node("android.widget.ImageButton", b));
    }
    content.children.push_back(std::move(nav));
    root.children.push_back(std::move(content));

    SyntheticScreen s{"app" + std::to_string(app) + "_" + std::to_string(screen), std::move(img), {}};
    s.tree.root = std::move(root);
    s.tree.screen_w = width;
    s.tree.screen_h = height;
    return s;
}

}  // namespace owleye::synth

#endif
