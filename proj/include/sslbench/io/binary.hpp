#pragma once

// Little-endian binary stream helpers shared by the checkpoint and feature
// file formats. The build targets little-endian hosts; enforced at compile
// time so the raw-buffer writes below stay valid.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "persistence formats are little-endian; big-endian hosts unsupported");

namespace sslbench::bin {

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& context) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(T)) {
        throw DataError(context + ": truncated file");
    }
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const std::string& context,
                               std::uint32_t max_len = 1u << 24) {
    const auto len = read_pod<std::uint32_t>(in, context);
    if (len > max_len) throw DataError(context + ": implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (static_cast<std::size_t>(in.gcount()) != len) throw DataError(context + ": truncated file");
    return s;
}

inline void write_f32s(std::ostream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
}

inline void read_f32s(std::istream& in, std::vector<float>& v, std::size_t count,
                      const std::string& context) {
    v.resize(count);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
        throw DataError(context + ": truncated file");
    }
}

}  // namespace sslbench::bin
