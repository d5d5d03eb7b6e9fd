#pragma once

// Training checkpoint: header, blob index, 32-bit float payload, CRC-32 of
// the payload. Save followed by load is bit-exact, and any truncation or
// payload corruption fails the CRC instead of loading quietly.
//
// Layout (all integers little-endian):
//   magic "SSBCKPT1" | u32 version | u64 seed | u64 step | str config_echo
//   u32 blob_count | per blob: str name, u32 ndim, i64 dims[], u64 offset
//   u64 payload_floats | f32 payload[] | u32 crc32(payload bytes)

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/params.hpp"
#include "sslbench/core/tensor.hpp"
#include "sslbench/io/binary.hpp"

namespace sslbench {

inline constexpr char kCheckpointMagic[8] = {'S', 'S', 'B', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointBlob {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

struct Checkpoint {
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::string config_echo;
    std::vector<CheckpointBlob> blobs;

    const CheckpointBlob* find(const std::string& name) const {
        for (const auto& b : blobs) {
            if (b.name == name) return &b;
        }
        return nullptr;
    }

    void add(const std::string& name, Shape shape, std::vector<float> data) {
        if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
            throw UsageError("checkpoint blob '" + name + "' size does not match its shape");
        }
        blobs.push_back({name, std::move(shape), std::move(data)});
    }
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    out.write(kCheckpointMagic, 8);
    bin::write_pod<std::uint32_t>(out, kCheckpointVersion);
    bin::write_pod<std::uint64_t>(out, ckpt.seed);
    bin::write_pod<std::uint64_t>(out, ckpt.step);
    bin::write_string(out, ckpt.config_echo);
    bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.blobs.size()));
    std::uint64_t offset = 0;
    for (const auto& b : ckpt.blobs) {
        bin::write_string(out, b.name);
        bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(b.shape.size()));
        for (auto d : b.shape) bin::write_pod<std::int64_t>(out, d);
        bin::write_pod<std::uint64_t>(out, offset);
        offset += b.data.size();
    }
    bin::write_pod<std::uint64_t>(out, offset);
    std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
    for (const auto& b : ckpt.blobs) {
        bin::write_f32s(out, b.data);
        crc = static_cast<std::uint32_t>(
            crc32(crc, reinterpret_cast<const Bytef*>(b.data.data()),
                  static_cast<uInt>(b.data.size() * sizeof(float))));
    }
    bin::write_pod<std::uint32_t>(out, crc);
    if (!out) throw DataError(path + ": write failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open");
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw DataError(path + ": not a checkpoint file");
    }
    const auto version = bin::read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.seed = bin::read_pod<std::uint64_t>(in, path);
    ckpt.step = bin::read_pod<std::uint64_t>(in, path);
    ckpt.config_echo = bin::read_string(in, path);
    const auto blob_count = bin::read_pod<std::uint32_t>(in, path);
    if (blob_count > (1u << 20)) throw DataError(path + ": implausible blob count");
    struct Entry {
        std::string name;
        Shape shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries;
    entries.reserve(blob_count);
    for (std::uint32_t i = 0; i < blob_count; ++i) {
        Entry e;
        e.name = bin::read_string(in, path);
        const auto ndim = bin::read_pod<std::uint32_t>(in, path);
        if (ndim > 16) throw DataError(path + ": implausible blob rank");
        for (std::uint32_t d = 0; d < ndim; ++d) {
            e.shape.push_back(bin::read_pod<std::int64_t>(in, path));
        }
        e.offset = bin::read_pod<std::uint64_t>(in, path);
        entries.push_back(std::move(e));
    }
    const auto payload_floats = bin::read_pod<std::uint64_t>(in, path);
    std::vector<float> payload;
    bin::read_f32s(in, payload, payload_floats, path);
    const auto want_crc = bin::read_pod<std::uint32_t>(in, path);
    const auto got_crc = static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size() * sizeof(float))));
    if (want_crc != got_crc) throw DataError(path + ": checkpoint CRC mismatch (corrupt file)");

    for (const auto& e : entries) {
        const auto count = static_cast<std::uint64_t>(shape_numel(e.shape));
        if (e.offset + count > payload.size()) {
            throw DataError(path + ": blob '" + e.name + "' exceeds payload bounds");
        }
        ckpt.blobs.push_back(
            {e.name, e.shape,
             std::vector<float>(payload.begin() + static_cast<std::ptrdiff_t>(e.offset),
                                payload.begin() + static_cast<std::ptrdiff_t>(e.offset + count))});
    }
    return ckpt;
}

// Copies blobs with the given prefix into a parameter set whose names and
// shapes must match exactly; names the first offending parameter otherwise.
template <typename T>
void load_params_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix,
                                 ParameterSet<T>& params) {
    for (auto& [name, tensor] : params) {
        const CheckpointBlob* blob = ckpt.find(prefix + name);
        if (!blob) {
            throw DataError("checkpoint is missing parameter '" + prefix + name + "'");
        }
        if (blob->shape != tensor.shape()) {
            throw DataError("checkpoint parameter '" + prefix + name + "' has shape " +
                            shape_str(blob->shape) + ", expected " + shape_str(tensor.shape()));
        }
        auto& dst = tensor.mutable_values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(blob->data[i]);
    }
}

template <typename T>
void store_params_in_checkpoint(Checkpoint& ckpt, const std::string& prefix,
                                const ParameterSet<T>& params) {
    for (const auto& [name, tensor] : params) {
        std::vector<float> data(tensor.values().size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            data[i] = static_cast<float>(tensor.values()[i]);
        }
        ckpt.add(prefix + name, tensor.shape(), std::move(data));
    }
}

}  // namespace sslbench
