#pragma once

// Multi-crop view generation. Two global crops keep more than half of the
// source area, five local crops keep less than half; each view then passes
// through the sampled transform chain in a fixed order. All randomness comes
// from generators forked off the caller's, one per view, so outputs are a
// pure function of (image, policy, seed).

#include <cstdint>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/rng.hpp"
#include "sslbench/image/image.hpp"

namespace sslbench {

struct AugmentPolicy {
    int n_global = 2;
    int n_local = 5;
    int global_size = 32;
    int local_size = 16;

    // area fractions of the source image; the 0.5 split separates the scales
    double global_area_min = 0.5, global_area_max = 1.0;
    double local_area_min = 0.05, local_area_max = 0.5;
    double aspect_min = 3.0 / 4.0, aspect_max = 4.0 / 3.0;

    bool enable_flip = true;
    double p_hflip = 0.5, p_vflip = 0.5;

    bool enable_rotation = true;
    double p_rot90 = 0.5;
    double p_small_rot = 0.25;
    double small_rot_max_deg = 15.0;

    bool enable_jitter = true;
    double p_jitter = 0.8;
    double jitter_min = 0.6, jitter_max = 1.4;  // brightness/contrast/saturation factors
    double hue_max_shift = 0.1;

    bool enable_grayscale = true;
    double p_grayscale = 0.2;

    bool enable_blur = true;
    double p_blur_global_first = 1.0;
    double p_blur_global_rest = 0.1;
    double p_blur_local = 0.5;
    double blur_sigma_min = 0.1, blur_sigma_max = 2.0;

    bool enable_solarize = true;
    double p_solarize = 0.2;  // second global view only
    double solarize_threshold = 0.5;
};

inline void validate_policy(const AugmentPolicy& p) {
    auto prob_ok = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!prob_ok(p.p_hflip) || !prob_ok(p.p_vflip) || !prob_ok(p.p_rot90) ||
        !prob_ok(p.p_small_rot) || !prob_ok(p.p_jitter) || !prob_ok(p.p_grayscale) ||
        !prob_ok(p.p_blur_global_first) || !prob_ok(p.p_blur_global_rest) ||
        !prob_ok(p.p_blur_local) || !prob_ok(p.p_solarize)) {
        throw ConfigError("augmentation probabilities must lie in [0,1]");
    }
    if (!(p.global_area_min >= 0.5) || !(p.global_area_max <= 1.0) ||
        !(p.global_area_min <= p.global_area_max)) {
        throw ConfigError("global crop area range must sit within [0.5, 1.0]");
    }
    if (!(p.local_area_min > 0.0) || !(p.local_area_max <= 0.5) ||
        !(p.local_area_min <= p.local_area_max)) {
        throw ConfigError("local crop area range must sit within (0, 0.5]");
    }
    if (!(p.aspect_min > 0.0) || !(p.aspect_min <= p.aspect_max)) {
        throw ConfigError("invalid aspect ratio range");
    }
    if (p.n_global < 1 || p.n_local < 0) throw ConfigError("view counts invalid");
    if (p.global_size < 8 || p.local_size < 8) throw ConfigError("view resolutions must be >= 8");
}

struct ViewSet {
    std::vector<Image> global_views;
    std::vector<Image> local_views;
    // realized source-area fraction per view, for the crop-scale contract
    std::vector<double> global_area_fraction;
    std::vector<double> local_area_fraction;
};

// Which slot a view occupies; blur and solarization placement depend on it.
struct ViewRole {
    bool is_global = true;
    int index = 0;  // within its scale
};

namespace augdetail {

struct CropRect {
    int y0, x0, h, w;
    double fraction;
};

// Rejection-samples a crop whose realized pixel-area fraction falls in
// (lo, hi) for locals or (lo, hi] for globals; strict at the 0.5 boundary.
inline CropRect sample_crop(int H, int W, double lo, double hi, double aspect_min,
                            double aspect_max, bool is_global, Rng& rng) {
    const double total = static_cast<double>(H) * static_cast<double>(W);
    for (int attempt = 0; attempt < 32; ++attempt) {
        const double a = rng.uniform(lo, hi);
        const double r = rng.uniform(aspect_min, aspect_max);
        const double target = a * total;
        int w = static_cast<int>(std::lround(std::sqrt(target * r)));
        int h = static_cast<int>(std::lround(std::sqrt(target / r)));
        w = std::min(std::max(w, 1), W);
        h = std::min(std::max(h, 1), H);
        const double frac = static_cast<double>(w) * static_cast<double>(h) / total;
        const bool ok = is_global ? (frac > 0.5 && frac <= hi + 1e-12) : (frac < 0.5 && frac >= lo - 1e-12);
        if (!ok) continue;
        const int y0 = static_cast<int>(rng.uniform_int(0, H - h));
        const int x0 = static_cast<int>(rng.uniform_int(0, W - w));
        return {y0, x0, h, w, frac};
    }
    // deterministic fallback keeping the scale contract
    if (is_global) return {0, 0, H, W, 1.0};
    int h = std::max(1, static_cast<int>(std::floor(H * 0.55)));
    int w = std::max(1, static_cast<int>(std::floor(W * 0.55)));
    const double frac = static_cast<double>(w) * static_cast<double>(h) / total;
    if (!(frac < 0.5)) throw DataError("image too small to carve a local crop");
    const int y0 = static_cast<int>(rng.uniform_int(0, H - h));
    const int x0 = static_cast<int>(rng.uniform_int(0, W - w));
    return {y0, x0, h, w, frac};
}

}  // namespace augdetail

// Post-crop transform chain. Order is fixed: flips, rotations, color jitter
// (brightness, contrast, saturation, hue), grayscale, blur, solarization.
inline Image augment(const Image& view, const AugmentPolicy& p, Rng& rng, ViewRole role = {}) {
    Image img = view;
    if (p.enable_flip) {
        if (rng.bernoulli(p.p_hflip)) img = flip_horizontal(img);
        if (rng.bernoulli(p.p_vflip)) img = flip_vertical(img);
    }
    if (p.enable_rotation) {
        if (rng.bernoulli(p.p_rot90)) {
            img = rotate90(img, static_cast<int>(rng.uniform_int(1, 3)));
        }
        if (rng.bernoulli(p.p_small_rot)) {
            img = rotate_bilinear(img, rng.uniform(-p.small_rot_max_deg, p.small_rot_max_deg));
        }
    }
    if (p.enable_jitter && rng.bernoulli(p.p_jitter)) {
        img = adjust_brightness(img, rng.uniform(p.jitter_min, p.jitter_max));
        img = adjust_contrast(img, rng.uniform(p.jitter_min, p.jitter_max));
        img = adjust_saturation(img, rng.uniform(p.jitter_min, p.jitter_max));
        img = adjust_hue(img, rng.uniform(-p.hue_max_shift, p.hue_max_shift));
    }
    if (p.enable_grayscale && rng.bernoulli(p.p_grayscale)) img = to_grayscale(img);
    if (p.enable_blur) {
        const double pb = role.is_global
                              ? (role.index == 0 ? p.p_blur_global_first : p.p_blur_global_rest)
                              : p.p_blur_local;
        if (rng.bernoulli(pb)) {
            img = gaussian_blur(img, rng.uniform(p.blur_sigma_min, p.blur_sigma_max));
        }
    }
    if (p.enable_solarize && role.is_global && role.index == 1 && rng.bernoulli(p.p_solarize)) {
        img = solarize(img, p.solarize_threshold);
    }
    return img;
}

inline ViewSet multi_crop(const Image& image, const AugmentPolicy& policy, Rng& rng) {
    validate_policy(policy);
    validate_source_image(image, "multi_crop");
    const double total = static_cast<double>(image.height) * image.width;
    if (policy.local_area_min * total < 1.0) {
        throw DataError("image too small for the configured local crop area");
    }

    ViewSet out;
    for (int g = 0; g < policy.n_global; ++g) {
        Rng vr = rng.fork("global").fork(static_cast<std::uint64_t>(g));
        auto rect = augdetail::sample_crop(image.height, image.width, policy.global_area_min,
                                           policy.global_area_max, policy.aspect_min,
                                           policy.aspect_max, true, vr);
        Image view = crop_resize(image, rect.y0, rect.x0, rect.h, rect.w, policy.global_size,
                                 policy.global_size);
        out.global_views.push_back(augment(view, policy, vr, ViewRole{true, g}));
        out.global_area_fraction.push_back(rect.fraction);
    }
    for (int l = 0; l < policy.n_local; ++l) {
        Rng vr = rng.fork("local").fork(static_cast<std::uint64_t>(l));
        auto rect = augdetail::sample_crop(image.height, image.width, policy.local_area_min,
                                           policy.local_area_max, policy.aspect_min,
                                           policy.aspect_max, false, vr);
        Image view = crop_resize(image, rect.y0, rect.x0, rect.h, rect.w, policy.local_size,
                                 policy.local_size);
        out.local_views.push_back(augment(view, policy, vr, ViewRole{false, l}));
        out.local_area_fraction.push_back(rect.fraction);
    }
    return out;
}

}  // namespace sslbench
