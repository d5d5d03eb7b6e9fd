#pragma once

// Procedural texture dataset. Classes are separated by the spatial frequency
// band of an oriented sinusoid; orientation and phase are randomized per
// image so the class signal is rotation-invariant, and per-image channel
// gains, brightness shifts, and pixel noise act as nuisance factors that
// dominate raw-pixel distances. A small per-class DC offset keeps a raw-pixel
// nearest-centroid baseline above chance without making the task trivial.
//
// Frequencies are geometrically spaced (factor 2 between band endpoints)
// so crop-induced rescaling, which shifts apparent frequency by at most
// ~1.4x for global crops, cannot move one class's band onto another's.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/rng.hpp"
#include "sslbench/image/image.hpp"
#include "sslbench/io/dataset.hpp"
#include "sslbench/io/image_codec.hpp"

namespace sslbench {

struct SynthConfig {
    int classes = 4;
    int per_class = 100;
    int unlabeled_per_class = 0;
    int size = 64;

    // class c's base frequency in cycles per image width
    double freq_min = 2.5;
    double freq_max = 12.0;
    double freq_jitter = 0.10;       // relative, per image
    double amplitude = 0.30;
    double class_dc_step = 0.02;     // per-class mean offset
    double channel_gain_min = 0.6;   // nuisance: per-image per-channel gain
    double channel_gain_max = 1.4;
    double brightness_shift = 0.15;  // nuisance: per-image +- shift
    double pixel_noise = 0.03;       // nuisance: i.i.d. Gaussian, clipped
};

inline void validate_synth_config(const SynthConfig& cfg) {
    if (cfg.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
    if (cfg.per_class < 1) throw ConfigError("per-class count must be positive");
    if (cfg.unlabeled_per_class < 0) throw ConfigError("unlabeled per-class count must be >= 0");
    if (cfg.size < 16) throw ConfigError("synthetic image size must be at least 16");
    if (!(cfg.freq_min > 0) || !(cfg.freq_max > cfg.freq_min)) {
        throw ConfigError("synthetic frequency band invalid");
    }
    // keep the highest jittered frequency below Nyquist of a half-size resample
    if (cfg.freq_max * (1.0 + cfg.freq_jitter) > cfg.size / 4.0) {
        throw ConfigError("freq_max too high for the image size (aliasing under crops)");
    }
}

inline double synth_class_frequency(const SynthConfig& cfg, int cls) {
    if (cfg.classes == 1) return cfg.freq_min;
    const double t = static_cast<double>(cls) / (cfg.classes - 1);
    return cfg.freq_min * std::pow(cfg.freq_max / cfg.freq_min, t);
}

// One image of class `cls`; deterministic in (cfg, seed, cls, index).
inline Image synth_image(const SynthConfig& cfg, std::uint64_t seed, int cls, int index) {
    Rng rng(derive_seed(seed, "synth-image", static_cast<std::uint64_t>(cls),
                        static_cast<std::uint64_t>(index)));
    const double f = synth_class_frequency(cfg, cls) *
                     (1.0 + rng.uniform(-cfg.freq_jitter, cfg.freq_jitter));
    const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double dc = 0.5 + (cls - (cfg.classes - 1) / 2.0) * cfg.class_dc_step;
    const double brightness = rng.uniform(-cfg.brightness_shift, cfg.brightness_shift);
    double gain[3];
    for (auto& g : gain) g = rng.uniform(cfg.channel_gain_min, cfg.channel_gain_max);

    const int S = cfg.size;
    const double kx = std::cos(theta) * 2.0 * 3.14159265358979323846 * f / S;
    const double ky = std::sin(theta) * 2.0 * 3.14159265358979323846 * f / S;
    Image img(S, S, 3);
    const std::size_t plane = img.plane_size();
    for (int y = 0; y < S; ++y) {
        for (int x = 0; x < S; ++x) {
            const double wave = std::sin(kx * x + ky * y + phase);
            for (int c = 0; c < 3; ++c) {
                const double v = dc + cfg.amplitude * gain[c] * wave + brightness +
                                 cfg.pixel_noise * rng.normal();
                img.pixels[static_cast<std::size_t>(c) * plane +
                           static_cast<std::size_t>(y) * S + x] =
                    static_cast<float>(std::min(1.0, std::max(0.0, v)));
            }
        }
    }
    return img;
}

// Writes images as binary PPM plus a manifest.csv; returns the manifest path.
// Byte-identical output for identical (cfg, seed).
inline std::string generate_synthetic(const SynthConfig& cfg, std::uint64_t seed,
                                      const std::string& out_dir) {
    validate_synth_config(cfg);
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "images");

    std::vector<ManifestRow> rows;
    for (int cls = 0; cls < cfg.classes; ++cls) {
        const std::string cname = "class" + std::to_string(cls);
        for (int i = 0; i < cfg.per_class + cfg.unlabeled_per_class; ++i) {
            const bool unlabeled = i >= cfg.per_class;
            Image img = synth_image(cfg, seed, cls, i);
            const std::string rel = "images/" + cname + "_" + std::to_string(i) + ".ppm";
            save_pnm((fs::path(out_dir) / rel).string(), img);
            rows.push_back({rel, unlabeled ? std::string(kUnlabeledMarker) : cname, 0});
        }
    }
    const std::string manifest = (fs::path(out_dir) / "manifest.csv").string();
    write_manifest(manifest, rows);
    return manifest;
}

}  // namespace sslbench
