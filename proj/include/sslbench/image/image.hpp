#pragma once

// Planar float images in [0,1] plus the pixel transforms the augmentation
// policy composes. Color math runs in double and clamps back to [0,1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"

namespace sslbench {

struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    // planar layout: pixels[c*h*w + y*w + x]
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c) {
        if (c != 1 && c != 3) throw DataError("image channels must be 1 or 3");
        if (h < 1 || w < 1) throw DataError("image extents must be positive");
        pixels.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
                          static_cast<std::size_t>(c),
                      0.0f);
    }

    float& at(int c, int y, int x) {
        return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t plane_size() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
};

// Source images fed to the pipeline must be at least 8x8 with pixels in [0,1].
inline void validate_source_image(const Image& img, const std::string& context) {
    if (img.channels != 1 && img.channels != 3) {
        throw DataError(context + ": channels must be 1 or 3");
    }
    if (img.height < 8 || img.width < 8) {
        throw DataError(context + ": image extents must be at least 8");
    }
    if (img.pixels.size() != img.plane_size() * static_cast<std::size_t>(img.channels)) {
        throw DataError(context + ": pixel buffer size mismatch");
    }
    for (float v : img.pixels) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw DataError(context + ": pixel values must lie in [0,1]");
        }
    }
}

namespace imgdetail {

inline float clamp01(double v) {
    return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

inline int clampi(int v, int lo, int hi) { return std::min(hi, std::max(lo, v)); }

// Half-sample symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
// This edge-inclusive variant conserves the image sum under normalized
// convolution, which the mean-preservation contract of the blur relies on.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace imgdetail

// Bilinear sample of a source rectangle into out_h x out_w (pixel-center
// convention). The rectangle is given in source pixel units.
inline Image crop_resize(const Image& src, int y0, int x0, int crop_h, int crop_w, int out_h,
                         int out_w) {
    if (y0 < 0 || x0 < 0 || crop_h < 1 || crop_w < 1 || y0 + crop_h > src.height ||
        x0 + crop_w > src.width) {
        throw UsageError("crop rectangle out of bounds");
    }
    Image out(out_h, out_w, src.channels);
    const double sy = static_cast<double>(crop_h) / out_h;
    const double sx = static_cast<double>(crop_w) / out_w;
    for (int c = 0; c < src.channels; ++c) {
        for (int oy = 0; oy < out_h; ++oy) {
            const double fy = (oy + 0.5) * sy - 0.5;
            const int y1 = imgdetail::clampi(static_cast<int>(std::floor(fy)), 0, crop_h - 1);
            const int y2 = imgdetail::clampi(y1 + 1, 0, crop_h - 1);
            const double wy = std::min(1.0, std::max(0.0, fy - y1));
            for (int ox = 0; ox < out_w; ++ox) {
                const double fx = (ox + 0.5) * sx - 0.5;
                const int x1 = imgdetail::clampi(static_cast<int>(std::floor(fx)), 0, crop_w - 1);
                const int x2 = imgdetail::clampi(x1 + 1, 0, crop_w - 1);
                const double wx = std::min(1.0, std::max(0.0, fx - x1));
                const double v00 = src.at(c, y0 + y1, x0 + x1);
                const double v01 = src.at(c, y0 + y1, x0 + x2);
                const double v10 = src.at(c, y0 + y2, x0 + x1);
                const double v11 = src.at(c, y0 + y2, x0 + x2);
                const double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                                 wy * ((1 - wx) * v10 + wx * v11);
                out.at(c, oy, ox) = imgdetail::clamp01(v);
            }
        }
    }
    return out;
}

inline Image resize_bilinear(const Image& src, int out_h, int out_w) {
    return crop_resize(src, 0, 0, src.height, src.width, out_h, out_w);
}

inline Image flip_horizontal(const Image& src) {
    Image out(src.height, src.width, src.channels);
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) out.at(c, y, x) = src.at(c, y, src.width - 1 - x);
    return out;
}

inline Image flip_vertical(const Image& src) {
    Image out(src.height, src.width, src.channels);
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) out.at(c, y, x) = src.at(c, src.height - 1 - y, x);
    return out;
}

// Counter-clockwise quarter turns; k in {0,1,2,3}.
inline Image rotate90(const Image& src, int k) {
    k = ((k % 4) + 4) % 4;
    if (k == 0) return src;
    Image in = src;
    for (int step = 0; step < k; ++step) {
        Image out(in.width, in.height, in.channels);
        for (int c = 0; c < in.channels; ++c)
            for (int y = 0; y < in.height; ++y)
                for (int x = 0; x < in.width; ++x) out.at(c, in.width - 1 - x, y) = in.at(c, y, x);
        in = std::move(out);
    }
    return in;
}

// Small-angle rotation about the image center, bilinear with edge clamping.
inline Image rotate_bilinear(const Image& src, double degrees) {
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cy = (src.height - 1) / 2.0, cx = (src.width - 1) / 2.0;
    Image out(src.height, src.width, src.channels);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            const double dy = y - cy, dx = x - cx;
            const double sy2 = cs * dy - sn * dx + cy;
            const double sx2 = sn * dy + cs * dx + cx;
            const int y1 = imgdetail::clampi(static_cast<int>(std::floor(sy2)), 0, src.height - 1);
            const int y2 = imgdetail::clampi(y1 + 1, 0, src.height - 1);
            const int x1 = imgdetail::clampi(static_cast<int>(std::floor(sx2)), 0, src.width - 1);
            const int x2 = imgdetail::clampi(x1 + 1, 0, src.width - 1);
            const double wy = std::min(1.0, std::max(0.0, sy2 - y1));
            const double wx = std::min(1.0, std::max(0.0, sx2 - x1));
            for (int c = 0; c < src.channels; ++c) {
                const double v = (1 - wy) * ((1 - wx) * src.at(c, y1, x1) + wx * src.at(c, y1, x2)) +
                                 wy * ((1 - wx) * src.at(c, y2, x1) + wx * src.at(c, y2, x2));
                out.at(c, y, x) = imgdetail::clamp01(v);
            }
        }
    }
    return out;
}

inline Image adjust_brightness(const Image& src, double factor) {
    Image out = src;
    for (auto& v : out.pixels) v = imgdetail::clamp01(static_cast<double>(v) * factor);
    return out;
}

inline double mean_luma(const Image& src) {
    double acc = 0.0;
    if (src.channels == 1) {
        for (float v : src.pixels) acc += v;
        return acc / static_cast<double>(src.pixels.size());
    }
    const std::size_t n = src.plane_size();
    for (std::size_t i = 0; i < n; ++i) {
        acc += 0.299 * src.pixels[i] + 0.587 * src.pixels[n + i] + 0.114 * src.pixels[2 * n + i];
    }
    return acc / static_cast<double>(n);
}

inline Image adjust_contrast(const Image& src, double factor) {
    const double mu = mean_luma(src);
    Image out = src;
    for (auto& v : out.pixels) v = imgdetail::clamp01(mu + factor * (static_cast<double>(v) - mu));
    return out;
}

inline Image to_grayscale(const Image& src) {
    if (src.channels == 1) return src;
    Image out(src.height, src.width, 3);
    const std::size_t n = src.plane_size();
    for (std::size_t i = 0; i < n; ++i) {
        const float g = imgdetail::clamp01(0.299 * src.pixels[i] + 0.587 * src.pixels[n + i] +
                                           0.114 * src.pixels[2 * n + i]);
        out.pixels[i] = g;
        out.pixels[n + i] = g;
        out.pixels[2 * n + i] = g;
    }
    return out;
}

inline Image adjust_saturation(const Image& src, double factor) {
    if (src.channels == 1) return src;
    Image out(src.height, src.width, 3);
    const std::size_t n = src.plane_size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g =
            0.299 * src.pixels[i] + 0.587 * src.pixels[n + i] + 0.114 * src.pixels[2 * n + i];
        for (int c = 0; c < 3; ++c) {
            out.pixels[c * n + i] =
                imgdetail::clamp01(g + factor * (src.pixels[c * n + i] - g));
        }
    }
    return out;
}

namespace imgdetail {

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    const double d = mx - mn;
    s = mx <= 0.0 ? 0.0 : d / mx;
    if (d <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r) h = std::fmod((g - b) / d, 6.0);
    else if (mx == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

}  // namespace imgdetail

// Shift in [-0.5, 0.5] of the hue circle; identity on single-channel images.
inline Image adjust_hue(const Image& src, double shift) {
    if (src.channels == 1) return src;
    Image out(src.height, src.width, 3);
    const std::size_t n = src.plane_size();
    for (std::size_t i = 0; i < n; ++i) {
        double h, s, v, r, g, b;
        imgdetail::rgb_to_hsv(src.pixels[i], src.pixels[n + i], src.pixels[2 * n + i], h, s, v);
        h = std::fmod(h + shift + 1.0, 1.0);
        imgdetail::hsv_to_rgb(h, s, v, r, g, b);
        out.pixels[i] = imgdetail::clamp01(r);
        out.pixels[n + i] = imgdetail::clamp01(g);
        out.pixels[2 * n + i] = imgdetail::clamp01(b);
    }
    return out;
}

// Separable Gaussian, kernel radius ceil(3*sigma), half-sample symmetric
// reflection at the borders.
inline Image gaussian_blur(const Image& src, double sigma) {
    if (!(sigma > 0.0)) throw UsageError("gaussian_blur sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        ksum += v;
    }
    for (auto& v : kernel) v /= ksum;

    Image tmp(src.height, src.width, src.channels);
    // horizontal pass
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           src.at(c, y, imgdetail::reflect_index(x + i, src.width));
                }
                tmp.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    Image out(src.height, src.width, src.channels);
    // vertical pass
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           tmp.at(c, imgdetail::reflect_index(y + i, src.height), x);
                }
                out.at(c, y, x) = imgdetail::clamp01(acc);
            }
        }
    }
    return out;
}

// Pixels strictly above the threshold are inverted.
inline Image solarize(const Image& src, double threshold) {
    Image out = src;
    for (auto& v : out.pixels) {
        if (v > threshold) v = imgdetail::clamp01(1.0 - static_cast<double>(v));
    }
    return out;
}

}  // namespace sslbench
