#pragma once

// Extracted-feature persistence: header {magic, version, n, d}, row-major
// 32-bit floats, then a sample-id table aligned with the rows.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/io/binary.hpp"

namespace sslbench {

inline constexpr char kFeatureMagic[8] = {'S', 'S', 'B', 'F', 'E', 'A', 'T', '1'};
inline constexpr std::uint32_t kFeatureVersion = 1;

struct FeatureMatrix {
    std::int64_t n = 0;
    std::int64_t d = 0;
    std::vector<float> data;       // row-major n x d
    std::vector<std::string> ids;  // size n
    std::vector<int> labels;       // size n; -1 where unlabeled

    const float* row(std::int64_t i) const { return data.data() + i * d; }
};

inline void validate_feature_matrix(const FeatureMatrix& fm, const std::string& context) {
    if (fm.n < 0 || fm.d <= 0) throw DataError(context + ": bad feature matrix extents");
    if (static_cast<std::int64_t>(fm.data.size()) != fm.n * fm.d) {
        throw DataError(context + ": feature data size mismatch");
    }
    if (static_cast<std::int64_t>(fm.ids.size()) != fm.n ||
        static_cast<std::int64_t>(fm.labels.size()) != fm.n) {
        throw DataError(context + ": id/label table size mismatch");
    }
}

inline void save_features(const std::string& path, const FeatureMatrix& fm) {
    validate_feature_matrix(fm, path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    out.write(kFeatureMagic, 8);
    bin::write_pod<std::uint32_t>(out, kFeatureVersion);
    bin::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(fm.n));
    bin::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(fm.d));
    bin::write_f32s(out, fm.data);
    for (const auto& id : fm.ids) bin::write_string(out, id);
    for (int lab : fm.labels) bin::write_pod<std::int32_t>(out, lab);
    if (!out) throw DataError(path + ": write failed");
}

inline FeatureMatrix load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open");
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kFeatureMagic, 8) != 0) {
        throw DataError(path + ": not a feature file");
    }
    const auto version = bin::read_pod<std::uint32_t>(in, path);
    if (version != kFeatureVersion) {
        throw DataError(path + ": unsupported feature file version " + std::to_string(version));
    }
    FeatureMatrix fm;
    fm.n = static_cast<std::int64_t>(bin::read_pod<std::uint64_t>(in, path));
    fm.d = static_cast<std::int64_t>(bin::read_pod<std::uint64_t>(in, path));
    if (fm.n < 0 || fm.d <= 0 || fm.n > (1ll << 32) || fm.d > (1ll << 24)) {
        throw DataError(path + ": implausible feature extents");
    }
    bin::read_f32s(in, fm.data, static_cast<std::size_t>(fm.n * fm.d), path);
    fm.ids.reserve(static_cast<std::size_t>(fm.n));
    for (std::int64_t i = 0; i < fm.n; ++i) fm.ids.push_back(bin::read_string(in, path));
    fm.labels.reserve(static_cast<std::size_t>(fm.n));
    for (std::int64_t i = 0; i < fm.n; ++i) {
        fm.labels.push_back(bin::read_pod<std::int32_t>(in, path));
    }
    validate_feature_matrix(fm, path);
    return fm;
}

}  // namespace sslbench
