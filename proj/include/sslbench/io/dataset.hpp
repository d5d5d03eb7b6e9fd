#pragma once

// Image-folder datasets described by a CSV manifest with header `path,label`.
// The label value `_unlabeled_` routes a row into the unlabeled pool, which
// pretraining may consume but classifiers never see.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/image/image.hpp"
#include "sslbench/io/image_codec.hpp"

namespace sslbench {

inline constexpr const char* kUnlabeledMarker = "_unlabeled_";

struct Sample {
    std::string id;  // manifest-relative path, unique
    Image image;
    int label = -1;  // -1 for unlabeled
};

struct Dataset {
    std::vector<Sample> labeled;
    std::vector<Sample> unlabeled;
    std::vector<std::string> class_names;  // index = dense label id

    int num_classes() const { return static_cast<int>(class_names.size()); }
};

namespace dsdetail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace dsdetail

struct ManifestRow {
    std::string path;
    std::string label;
    int line = 0;
};

inline std::vector<ManifestRow> parse_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError(manifest_path + ": cannot open manifest");
    std::string line;
    int lineno = 0;
    std::vector<ManifestRow> rows;
    std::map<std::string, int> seen;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = dsdetail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos) {
            throw DataError(manifest_path + ":" + std::to_string(lineno) +
                            ": expected `path,label`");
        }
        const std::string path = dsdetail::trim(t.substr(0, comma));
        const std::string label = dsdetail::trim(t.substr(comma + 1));
        if (!header_seen) {
            if (path != "path" || label != "label") {
                throw DataError(manifest_path + ":" + std::to_string(lineno) +
                                ": first row must be the header `path,label`");
            }
            header_seen = true;
            continue;
        }
        if (path.empty() || label.empty()) {
            throw DataError(manifest_path + ":" + std::to_string(lineno) + ": empty field");
        }
        auto [it, inserted] = seen.emplace(path, lineno);
        if (!inserted) {
            throw DataError(manifest_path + ":" + std::to_string(lineno) + ": duplicate path '" +
                            path + "' (first at line " + std::to_string(it->second) + ")");
        }
        rows.push_back({path, label, lineno});
    }
    if (!header_seen) throw DataError(manifest_path + ": empty manifest");
    return rows;
}

// Loads every image in the manifest. Paths resolve relative to the manifest's
// directory. When resize_to is set, images are bilinearly resized to that
// square resolution at load.
inline Dataset load_dataset(const std::string& manifest_path,
                            std::optional<int> resize_to = std::nullopt) {
    const auto rows = parse_manifest(manifest_path);
    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

    Dataset ds;
    std::map<std::string, int> class_index;
    for (const auto& row : rows) {
        const std::filesystem::path full = base / row.path;
        Image img;
        try {
            img = load_image(full.string());
        } catch (const DataError& e) {
            throw DataError(manifest_path + ":" + std::to_string(row.line) + ": " + e.what());
        }
        if (resize_to ) {
            if (*resize_to < 8) throw ConfigError("load resolution must be at least 8");
            if (img.height != *resize_to || img.width != *resize_to) {
                img = resize_bilinear(img, *resize_to, *resize_to);
            }
        }
        validate_source_image(img, row.path);
        Sample s;
        s.id = row.path;
        s.image = std::move(img);
        if (row.label == kUnlabeledMarker) {
            s.label = -1;
            ds.unlabeled.push_back(std::move(s));
        } else {
            auto it = class_index.find(row.label);
            if (it == class_index.end()) {
                it = class_index.emplace(row.label, static_cast<int>(ds.class_names.size())).first;
                ds.class_names.push_back(row.label);
            }
            s.label = it->second;
            ds.labeled.push_back(std::move(s));
        }
    }
    return ds;
}

inline void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << "path,label\n";
    for (const auto& r : rows) out << r.path << "," << r.label << "\n";
    if (!out) throw DataError(path + ": write failed");
}

}  // namespace sslbench
