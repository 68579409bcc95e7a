#ifndef OWLEYE_MANIFEST_HPP
#define OWLEYE_MANIFEST_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "owleye/augmentor.hpp"
#include "owleye/error.hpp"
#include "owleye/imaging.hpp"

namespace owleye {

/// One dataset row. Paths are stored relative to the manifest's directory
/// unless absolute.
struct ManifestRow {
    std::string path;
    std::string source_id;
    bool buggy = false;
    std::optional<BugCategory> category;
    std::optional<BBox> bug_region;
    std::optional<std::uint64_t> seed;

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

inline nlohmann::ordered_json to_json(const ManifestRow& row) {
    nlohmann::ordered_json j;
    j["path"] = row.path;
    j["source_id"] = row.source_id;
    j["label"] = row.buggy ? "buggy" : "clean";
    if (row.category) j["category"] = std::string(to_string(*row.category));
    if (row.bug_region) {
        const BBox& b = *row.bug_region;
        j["bug_region"] = {b.x1, b.y1, b.x2, b.y2};
    }
    if (row.seed) j["seed"] = *row.seed;
    return j;
}

inline ManifestRow manifest_row_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::Schema, "manifest row must be a JSON object");
    ManifestRow row;
    try {
        row.path = j.at("path").get<std::string>();
        const auto label = j.at("label").get<std::string>();
        if (label != "buggy" && label != "clean") fail(ErrorKind::Schema, "label must be 'buggy' or 'clean', got '" + label + "'");
        row.buggy = label == "buggy";
        row.source_id = j.value("source_id", std::string{});
        if (auto it = j.find("category"); it != j.end() && !it->is_null()) row.category = parse_category(it->get<std::string>());
        if (auto it = j.find("bug_region"); it != j.end() && !it->is_null()) {
            const auto v = it->get<std::vector<int>>();
            if (v.size() != 4) fail(ErrorKind::Schema, "bug_region must have 4 integers");
            row.bug_region = BBox{v[0], v[1], v[2], v[3]};
        }
        if (auto it = j.find("seed"); it != j.end() && !it->is_null()) row.seed = it->get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, std::string("bad manifest row: ") + e.what());
    }
    return row;
}

inline std::vector<ManifestRow> parse_manifest(std::istream& in) {
    std::vector<ManifestRow> rows;
    std::string line;
    std::size_t offset = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t start = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(start + e.byte, "manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        rows.push_back(manifest_row_from_json(j));
    }
    return rows;
}

inline std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
    return parse_manifest(in);
}

inline std::string format_manifest(const std::vector<ManifestRow>& rows) {
    std::string out;
    for (const auto& r : rows) out += to_json(r).dump() + "\n";
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

/// Absolute or manifest-relative row path resolved for opening.
inline std::filesystem::path resolve_row_path(const std::filesystem::path& manifest_path, const std::string& row_path) {
    const std::filesystem::path p(row_path);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

}  // namespace owleye

#endif
