#pragma once

// Image file codecs: binary PPM (P6) / PGM (P5) and PNG via libpng.
// Decoded pixels land in [0,1] as value/maxval; writers quantize with
// round(v*255) so an 8-bit file round-trips exactly.

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/image/image.hpp"

namespace sslbench {

namespace codec_detail {

inline int pnm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return 0;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok.empty() ? -1 : 0;
}

inline long pnm_int(std::istream& in, const std::string& path) {
    std::string tok;
    if (pnm_next_token(in, tok) != 0) throw DataError(path + ": truncated PNM header");
    try {
        return std::stol(tok);
    } catch (...) {
        throw DataError(path + ": bad PNM header token '" + tok + "'");
    }
}

}  // namespace codec_detail

inline Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open");
    char p, kind;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '5' && kind != '6')) {
        throw DataError(path + ": not a binary PGM/PPM file");
    }
    const int channels = kind == '6' ? 3 : 1;
    const long w = codec_detail::pnm_int(in, path);
    const long h = codec_detail::pnm_int(in, path);
    const long maxval = codec_detail::pnm_int(in, path);
    if (w < 1 || h < 1) throw DataError(path + ": bad PNM extents");
    if (maxval < 1 || maxval > 255) {
        throw DataError(path + ": unsupported PNM maxval " + std::to_string(maxval));
    }
    // header ends with exactly one whitespace byte (already consumed by tokenizer)
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw DataError(path + ": truncated PNM pixel data");
    }
    Image img(static_cast<int>(h), static_cast<int>(w), channels);
    const std::size_t plane = img.plane_size();
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                const unsigned char b = raw[(static_cast<std::size_t>(y) * w + x) * channels + c];
                img.pixels[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * w + x] =
                    static_cast<float>(b) / static_cast<float>(maxval);
            }
        }
    }
    return img;
}

inline void save_pnm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path + ": cannot open for writing");
    const bool color = img.channels == 3;
    out << (color ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.pixels.size());
    const std::size_t plane = img.plane_size();
    std::size_t at = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                const float v = img.pixels[static_cast<std::size_t>(c) * plane +
                                           static_cast<std::size_t>(y) * img.width + x];
                raw[at++] = static_cast<unsigned char>(std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f));
            }
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError(path + ": write failed");
}

inline Image load_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError(path + ": cannot open");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError(path + ": libpng init failed");
    }
    std::vector<unsigned char> data;
    int width = 0, height = 0, channels = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError(path + ": PNG decode failed");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError(path + ": unsupported PNG channel count after normalization");
    }
    width = static_cast<int>(w);
    height = static_cast<int>(h);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    data.resize(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    Image img(height, width, channels);
    const std::size_t plane = img.plane_size();
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                const unsigned char b =
                    data[static_cast<std::size_t>(y) * rowbytes +
                         (static_cast<std::size_t>(x) * channels + c)];
                img.pixels[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * width +
                           x] = static_cast<float>(b) / 255.0f;
            }
        }
    }
    return img;
}

inline void save_png(const std::string& path, const Image& img) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError(path + ": cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError(path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError(path + ": PNG encode failed");
    }
    png_init_io(png, fp);
    const int color_type = img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    const std::size_t plane = img.plane_size();
    for (int y = 0; y < img.height; ++y) {
        std::size_t at = 0;
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                const float v = img.pixels[static_cast<std::size_t>(c) * plane +
                                           static_cast<std::size_t>(y) * img.width + x];
                row[at++] = static_cast<unsigned char>(
                    std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// Dispatches on file magic, not extension.
inline Image load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError(path + ": cannot open");
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    probe.close();
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return load_pnm(path);
    if (magic[0] == 0x89 && magic[1] == 'P') return load_png(path);
    throw DataError(path + ": unrecognized image format (expect PNG, PPM, or PGM)");
}

}  // namespace sslbench
