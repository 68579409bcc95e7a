#ifndef OWLEYE_HIERARCHY_HPP
#define OWLEYE_HIERARCHY_HPP

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "owleye/error.hpp"
#include "owleye/imaging.hpp"

namespace owleye {

struct ViewNode {
    std::string class_name;
    BBox bounds;
    std::optional<std::string> text;
    bool visible = true;
    std::vector<ViewNode> children;

    friend bool operator==(const ViewNode&, const ViewNode&) = default;
};

struct ViewTree {
    ViewNode root;
    int screen_w = 1;
    int screen_h = 1;

    BBox screen() const { return {0, 0, screen_w, screen_h}; }

    friend bool operator==(const ViewTree&, const ViewTree&) = default;
};

enum class ViewKind { TextView, ImageView };

namespace detail {

inline std::optional<BBox> parse_bounds(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) return std::nullopt;
    int v[4];
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_number_integer()) return std::nullopt;
        v[i] = j[i].get<int>();
    }
    return BBox{v[0], v[1], v[2], v[3]};
}

inline ViewNode parse_node(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::Schema, "view node must be a JSON object");
    ViewNode node;
    if (auto it = j.find("class"); it != j.end() && it->is_string()) node.class_name = it->get<std::string>();

    bool bounds_ok = false;
    if (auto it = j.find("bounds"); it != j.end()) {
        if (auto b = parse_bounds(*it)) {
            node.bounds = *b;
            bounds_ok = b->valid();
        }
    }
    if (auto it = j.find("text"); it != j.end() && it->is_string()) node.text = it->get<std::string>();

    bool shown = true;
    if (auto it = j.find("visibility"); it != j.end() && it->is_string()) shown = it->get<std::string>() == "visible";
    if (auto it = j.find("visible-to-user"); it != j.end() && it->is_boolean()) shown = shown && it->get<bool>();
    node.visible = shown && bounds_ok;

    if (auto it = j.find("children"); it != j.end() && it->is_array()) {
        node.children.reserve(it->size());
        for (const auto& child : *it) {
            if (child.is_null()) continue;  // Rico pads some child arrays with nulls
            node.children.push_back(parse_node(child));
        }
    }
    return node;
}

inline nlohmann::json node_to_json(const ViewNode& node) {
    nlohmann::json j;
    j["class"] = node.class_name;
    j["bounds"] = {node.bounds.x1, node.bounds.y1, node.bounds.x2, node.bounds.y2};
    j["text"] = node.text ? nlohmann::json(*node.text) : nlohmann::json(nullptr);
    j["visibility"] = node.visible ? "visible" : "invisible";
    j["visible-to-user"] = node.visible;
    nlohmann::json children = nlohmann::json::array();
    for (const auto& c : node.children) children.push_back(node_to_json(c));
    j["children"] = std::move(children);
    return j;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace detail

/// Parses the Rico view-hierarchy subset. The root node is looked up at
/// activity.root, then root; screen size comes from the root's bounds.
inline ViewTree parse_hierarchy(std::string_view document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.byte, e.what());
    }
    const nlohmann::json* root = nullptr;
    if (doc.is_object()) {
        if (auto a = doc.find("activity"); a != doc.end() && a->is_object()) {
            if (auto r = a->find("root"); r != a->end() && r->is_object()) root = &*r;
        }
        if (!root) {
            if (auto r = doc.find("root"); r != doc.end() && r->is_object()) root = &*r;
        }
    }
    if (!root) fail(ErrorKind::Schema, "document has no activity.root or root node");

    ViewTree tree;
    tree.root = detail::parse_node(*root);
    const BBox& rb = tree.root.bounds;
    if (rb.x2 < 1 || rb.y2 < 1) fail(ErrorKind::Schema, "root bounds do not define a screen");
    tree.screen_w = rb.x2;
    tree.screen_h = rb.y2;
    return tree;
}

inline std::string serialize_hierarchy(const ViewTree& tree) {
    nlohmann::json doc;
    doc["activity"]["root"] = detail::node_to_json(tree.root);
    return doc.dump();
}

inline bool matches_kind(std::string_view class_name, ViewKind kind) {
    return detail::ends_with(class_name, kind == ViewKind::TextView ? "TextView" : "ImageView");
}

/// Pre-order list of visible nodes of the wanted kind whose bounds lie
/// inside the screen and measure at least min_view_px on each side.
/// TextViews must also carry non-empty text.
inline std::vector<ViewNode> collect_views(const ViewTree& tree, ViewKind wanted, int min_view_px = 1) {
    std::vector<ViewNode> out;
    const BBox screen = tree.screen();
    auto visit = [&](const auto& self, const ViewNode& node) -> void {
        const bool eligible = node.visible && node.bounds.valid() && screen.contains(node.bounds) &&
                              node.bounds.width() >= min_view_px && node.bounds.height() >= min_view_px &&
                              matches_kind(node.class_name, wanted) &&
                              (wanted != ViewKind::TextView || (node.text && !node.text->empty()));
        if (eligible) {
            ViewNode copy = node;
            copy.children.clear();
            out.push_back(std::move(copy));
        }
        for (const auto& c : node.children) self(self, c);
    };
    visit(visit, tree.root);
    return out;
}

/// Rescales every node's bounds into a width x height screen.
inline ViewTree scale_hierarchy(const ViewTree& tree, int width, int height) {
    if (width == tree.screen_w && height == tree.screen_h) return tree;
    const double sx = static_cast<double>(width) / tree.screen_w;
    const double sy = static_cast<double>(height) / tree.screen_h;
    auto scale = [&](const auto& self, ViewNode& n) -> void {
        n.bounds = {static_cast<int>(round_half_up(n.bounds.x1 * sx)), static_cast<int>(round_half_up(n.bounds.y1 * sy)),
                    static_cast<int>(round_half_up(n.bounds.x2 * sx)), static_cast<int>(round_half_up(n.bounds.y2 * sy))};
        if (!n.bounds.valid()) n.visible = false;
        for (auto& c : n.children) self(self, c);
    };
    ViewTree out = tree;
    scale(scale, out.root);
    out.screen_w = width;
    out.screen_h = height;
    return out;
}

/// Modal color on the one-pixel perimeter of box clipped to the image; ties
/// go to the lowest packed RGB value.
inline Color sample_background_color(const RasterImage& img, const BBox& box) {
    const auto clip = box.intersect(img.bounds());
    if (!clip) fail(ErrorKind::InvalidArgument, "background sample box " + to_string(box) + " is outside the image");
    std::map<std::uint32_t, int> counts;
    auto add = [&](int x, int y) { ++counts[img.at(x, y).packed()]; };
    for (int x = clip->x1; x < clip->x2; ++x) {
        add(x, clip->y1);
        if (clip->y2 - 1 != clip->y1) add(x, clip->y2 - 1);
    }
    for (int y = clip->y1 + 1; y < clip->y2 - 1; ++y) {
        add(clip->x1, y);
        if (clip->x2 - 1 != clip->x1) add(clip->x2 - 1, y);
    }
    std::uint32_t best = 0;
    int best_count = -1;
    for (const auto& [packed, n] : counts) {  // ascending packed order, so strict > keeps the lowest on ties
        if (n > best_count) {
            best = packed;
            best_count = n;
        }
    }
    return Color::from_packed(best);
}

}  // namespace owleye

#endif
