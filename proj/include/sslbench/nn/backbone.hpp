#pragma once

// Toy-scale cross-covariance image transformer (XCA blocks over patch tokens).
//
// Differences from the full published architecture, on purpose: no local patch
// interaction stage, no class-attention layers, and the patch embedding is a
// single linear projection instead of a convolutional stem. The class token
// is prepended before the first block and read out after a final layer norm.
//
// Parameter naming (one flat ParameterSet, sorted by name):
//   patch.w, patch.b        linear patch projection
//   cls, pos                class token and learned positional table
//   blk<i>.attn.{wq,bq,wk,bk,wv,bv,wo,bo,tau}
//   blk<i>.ln1.{g,b}, blk<i>.ln2.{g,b}
//   blk<i>.mlp.{w1,b1,w2,b2}
//   final.{g,b}             norm applied before class-token readout

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/params.hpp"
#include "sslbench/core/rng.hpp"
#include "sslbench/core/tensor.hpp"
#include "sslbench/image/image.hpp"

namespace sslbench {

struct BackboneConfig {
    std::int64_t patch = 8;
    std::int64_t dim = 64;
    std::int64_t blocks = 4;
    std::int64_t heads = 4;
    double mlp_ratio = 4.0;
    double tau_init = 1.0;
    std::int64_t in_channels = 3;
    // Side length of the positional-embedding grid. Inputs whose patch grid
    // differs are handled by bilinear interpolation of the table.
    std::int64_t pos_grid = 4;
};

inline void validate_backbone_config(const BackboneConfig& cfg) {
    if (cfg.patch < 1) throw ConfigError("backbone: patch size must be >= 1");
    if (cfg.dim < 1) throw ConfigError("backbone: embed dim must be >= 1");
    if (cfg.blocks < 1) throw ConfigError("backbone: need at least one block");
    if (cfg.heads < 1) throw ConfigError("backbone: need at least one head");
    if (cfg.dim % cfg.heads != 0) {
        throw ConfigError("backbone: embed dim " + std::to_string(cfg.dim) +
                          " not divisible by heads " + std::to_string(cfg.heads));
    }
    if (!(cfg.mlp_ratio > 0.0)) throw ConfigError("backbone: mlp_ratio must be positive");
    if (!(cfg.tau_init > 0.0)) throw ConfigError("backbone: tau_init must be positive");
    if (cfg.in_channels != 1 && cfg.in_channels != 3) {
        throw ConfigError("backbone: in_channels must be 1 or 3");
    }
    if (cfg.pos_grid < 1) throw ConfigError("backbone: pos_grid must be >= 1");
}

inline std::int64_t backbone_mlp_hidden(const BackboneConfig& cfg) {
    const auto h = static_cast<std::int64_t>(std::llround(cfg.mlp_ratio * static_cast<double>(cfg.dim)));
    return h < 1 ? 1 : h;
}

namespace nndetail {

// Every parameter is drawn from its own named stream so the initialization of
// one tensor never shifts another's, regardless of insertion order.
template <typename T>
void add_init(ParameterSet<T>& params, std::uint64_t seed, const std::string& name, Shape shape,
              double stddev) {
    Rng rng(derive_seed(seed, name.c_str()));
    if (stddev > 0.0) {
        params.add(name, Tensor<T>::truncated_normal(shape, rng, static_cast<T>(stddev)));
    } else {
        params.add(name, Tensor<T>::zeros(shape));
    }
}

template <typename T>
void add_const(ParameterSet<T>& params, const std::string& name, Shape shape, T value) {
    params.add(name, Tensor<T>::filled(shape, value));
}

}  // namespace nndetail

template <typename T>
void init_backbone_params(ParameterSet<T>& params, const BackboneConfig& cfg, std::uint64_t seed) {
    validate_backbone_config(cfg);
    const std::int64_t d = cfg.dim;
    const std::int64_t pf = cfg.in_channels * cfg.patch * cfg.patch;
    const std::int64_t hid = backbone_mlp_hidden(cfg);
    constexpr double kStd = 0.02;

    nndetail::add_init(params, seed, "patch.w", {pf, d}, kStd);
    nndetail::add_const(params, "patch.b", {d}, T(0));
    nndetail::add_init(params, seed, "cls", {d}, kStd);
    nndetail::add_init(params, seed, "pos", {1 + cfg.pos_grid * cfg.pos_grid, d}, kStd);

    for (std::int64_t i = 0; i < cfg.blocks; ++i) {
        const std::string p = "blk" + std::to_string(i) + ".";
        for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
            nndetail::add_init(params, seed, p + w, {d, d}, kStd);
        }
        for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
            nndetail::add_const(params, p + b, {d}, T(0));
        }
        nndetail::add_const(params, p + "attn.tau", {cfg.heads}, static_cast<T>(cfg.tau_init));
        nndetail::add_const(params, p + "ln1.g", {d}, T(1));
        nndetail::add_const(params, p + "ln1.b", {d}, T(0));
        nndetail::add_const(params, p + "ln2.g", {d}, T(1));
        nndetail::add_const(params, p + "ln2.b", {d}, T(0));
        nndetail::add_init(params, seed, p + "mlp.w1", {d, hid}, kStd);
        nndetail::add_const(params, p + "mlp.b1", {hid}, T(0));
        nndetail::add_init(params, seed, p + "mlp.w2", {hid, d}, kStd);
        nndetail::add_const(params, p + "mlp.b2", {d}, T(0));
    }
    nndetail::add_const(params, "final.g", {d}, T(1));
    nndetail::add_const(params, "final.b", {d}, T(0));
}

template <typename T>
ParameterSet<T> make_backbone_params(const BackboneConfig& cfg, std::uint64_t seed) {
    ParameterSet<T> params;
    init_backbone_params(params, cfg, seed);
    return params;
}

template <typename T>
void validate_backbone_params(const ParameterSet<T>& params, const BackboneConfig& cfg) {
    validate_backbone_config(cfg);
    const std::int64_t pf = cfg.in_channels * cfg.patch * cfg.patch;
    auto expect = [&](const std::string& name, const Shape& shape) {
        if (!params.contains(name)) {
            throw ConfigError("backbone parameters missing '" + name + "'");
        }
        if (params.at(name).shape() != shape) {
            throw ConfigError("backbone parameter '" + name + "' has shape " +
                              shape_str(params.at(name).shape()) + ", config implies " +
                              shape_str(shape));
        }
    };
    expect("patch.w", {pf, cfg.dim});
    expect("pos", {1 + cfg.pos_grid * cfg.pos_grid, cfg.dim});
    expect("cls", {cfg.dim});
    for (std::int64_t i = 0; i < cfg.blocks; ++i) {
        const std::string p = "blk" + std::to_string(i) + ".";
        expect(p + "attn.wq", {cfg.dim, cfg.dim});
        expect(p + "attn.tau", {cfg.heads});
        expect(p + "mlp.w1", {cfg.dim, backbone_mlp_hidden(cfg)});
    }
    expect("final.g", {cfg.dim});
}

namespace nndetail {

inline Image pad_to_multiple(const Image& img, std::int64_t patch) {
    const auto p = static_cast<int>(patch);
    const int ph = (img.height % p == 0) ? img.height : (img.height / p + 1) * p;
    const int pw = (img.width % p == 0) ? img.width : (img.width / p + 1) * p;
    if (ph == img.height && pw == img.width) return img;
    Image out(ph, pw, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < ph; ++y) {
            const int sy = imgdetail::reflect_index(y, img.height);
            for (int x = 0; x < pw; ++x) {
                out.at(c, y, x) = img.at(c, sy, imgdetail::reflect_index(x, img.width));
            }
        }
    }
    return out;
}

// Row r of the result carries the bilinear weights that resample a
// src x src positional grid at patch-grid cell r of a gh x gw input.
template <typename T>
Tensor<T> pos_interp_matrix(std::int64_t gh, std::int64_t gw, std::int64_t src) {
    auto m = Tensor<T>::zeros({gh * gw, src * src});
    auto& v = m.mutable_values();
    for (std::int64_t oy = 0; oy < gh; ++oy) {
        for (std::int64_t ox = 0; ox < gw; ++ox) {
            const double fy = (static_cast<double>(oy) + 0.5) * static_cast<double>(src) /
                                  static_cast<double>(gh) - 0.5;
            const double fx = (static_cast<double>(ox) + 0.5) * static_cast<double>(src) /
                                  static_cast<double>(gw) - 0.5;
            const double cy = std::clamp(fy, 0.0, static_cast<double>(src - 1));
            const double cx = std::clamp(fx, 0.0, static_cast<double>(src - 1));
            const auto y0 = static_cast<std::int64_t>(std::floor(cy));
            const auto x0 = static_cast<std::int64_t>(std::floor(cx));
            const std::int64_t y1 = std::min(y0 + 1, src - 1);
            const std::int64_t x1 = std::min(x0 + 1, src - 1);
            const double wy = cy - static_cast<double>(y0);
            const double wx = cx - static_cast<double>(x0);
            T* row = v.data() + (oy * gw + ox) * src * src;
            row[y0 * src + x0] += static_cast<T>((1.0 - wy) * (1.0 - wx));
            row[y0 * src + x1] += static_cast<T>((1.0 - wy) * wx);
            row[y1 * src + x0] += static_cast<T>(wy * (1.0 - wx));
            row[y1 * src + x1] += static_cast<T>(wy * wx);
        }
    }
    return m;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    return add(matmul(x, w), b);
}

}  // namespace nndetail

// Flattens non-overlapping patches (channel-major within each patch), projects
// them to d, adds the positional embedding, and prepends the class token.
template <typename T>
Tensor<T> patch_embed(const std::vector<Image>& images, const ParameterSet<T>& params,
                      const BackboneConfig& cfg) {
    if (images.empty()) throw UsageError("patch_embed: empty batch");
    for (const auto& img : images) {
        if (img.channels != cfg.in_channels) {
            throw ConfigError("patch_embed: image has " + std::to_string(img.channels) +
                              " channels, backbone expects " + std::to_string(cfg.in_channels));
        }
        if (img.height != images[0].height || img.width != images[0].width) {
            throw UsageError("patch_embed: images in a batch must share extents");
        }
    }
    const std::int64_t b = static_cast<std::int64_t>(images.size());
    const std::int64_t p = cfg.patch;
    const std::int64_t pf = cfg.in_channels * p * p;

    std::vector<Image> padded;
    padded.reserve(images.size());
    for (const auto& img : images) padded.push_back(nndetail::pad_to_multiple(img, p));
    const std::int64_t gh = padded[0].height / p;
    const std::int64_t gw = padded[0].width / p;
    const std::int64_t np = gh * gw;

    auto patches = Tensor<T>::zeros({b * np, pf});
    auto& pv = patches.mutable_values();
    for (std::int64_t i = 0; i < b; ++i) {
        const auto& img = padded[static_cast<std::size_t>(i)];
        for (std::int64_t gy = 0; gy < gh; ++gy) {
            for (std::int64_t gx = 0; gx < gw; ++gx) {
                T* row = pv.data() + ((i * np) + gy * gw + gx) * pf;
                for (int c = 0; c < img.channels; ++c) {
                    for (std::int64_t py = 0; py < p; ++py) {
                        for (std::int64_t px = 0; px < p; ++px) {
                            row[(c * p + py) * p + px] = static_cast<T>(
                                img.at(c, static_cast<int>(gy * p + py),
                                       static_cast<int>(gx * p + px)));
                        }
                    }
                }
            }
        }
    }

    auto tokens = reshape(nndetail::linear(patches, params.at("patch.w"), params.at("patch.b")),
                          {b, np, cfg.dim});
    auto cls_row = reshape(params.at("cls"), {1, 1, cfg.dim});
    auto x = concat<T>({broadcast_to(cls_row, {b, 1, cfg.dim}), tokens}, 1);

    const auto& pos = params.at("pos");
    Tensor<T> pos_full;
    if (gh == cfg.pos_grid && gw == cfg.pos_grid) {
        pos_full = pos;
    } else {
        auto cls_pos = slice(pos, 0, 0, 1);
        auto grid_pos = slice(pos, 0, 1, pos.extent(0));
        auto interp = matmul(nndetail::pos_interp_matrix<T>(gh, gw, cfg.pos_grid), grid_pos);
        pos_full = concat<T>({cls_pos, interp}, 0);
    }
    return add(x, pos_full);
}

// Cross-covariance attention. q and k are unit-normalized along the token
// axis, so the d_h x d_h head attention is a correlation between channels and
// the cost of forming it is linear in token count.
template <typename T>
Tensor<T> xca_attention(const Tensor<T>& x, const ParameterSet<T>& params, const std::string& prefix,
                        const BackboneConfig& cfg, Tensor<T>* attention_out = nullptr) {
    if (x.ndim() != 3) throw ShapeError("xca_attention expects batch x tokens x dim");
    const std::int64_t b = x.extent(0), n = x.extent(1), d = x.extent(2);
    if (d != cfg.dim) {
        throw ConfigError("xca_attention: token width " + std::to_string(d) +
                          " does not match configured dim " + std::to_string(cfg.dim));
    }
    const std::int64_t h = cfg.heads;
    const std::int64_t dh = d / h;

    auto flat = reshape(x, {b * n, d});
    auto split_heads = [&](const Tensor<T>& t) {
        return transpose(reshape(t, {b, n, h, dh}), 1, 2);
    };
    auto q = split_heads(nndetail::linear(flat, params.at(prefix + "attn.wq"), params.at(prefix + "attn.bq")));
    auto k = split_heads(nndetail::linear(flat, params.at(prefix + "attn.wk"), params.at(prefix + "attn.bk")));
    auto v = split_heads(nndetail::linear(flat, params.at(prefix + "attn.wv"), params.at(prefix + "attn.bv")));

    auto qn = l2_normalize(q, 2);
    auto kn = l2_normalize(k, 2);
    auto scores = bmm(transpose(qn, 2, 3), kn);
    auto inv_tau = reshape(reciprocal(params.at(prefix + "attn.tau")), {h, 1, 1});
    auto attention = softmax_t(mul(scores, inv_tau), T(1));
    if (attention_out != nullptr) *attention_out = attention;

    auto mixed = reshape(transpose(bmm(v, attention), 1, 2), {b * n, d});
    auto out = nndetail::linear(mixed, params.at(prefix + "attn.wo"), params.at(prefix + "attn.bo"));
    return reshape(out, {b, n, d});
}

template <typename T>
Tensor<T> xca_block(const Tensor<T>& x, const ParameterSet<T>& params, std::int64_t block_index,
                    const BackboneConfig& cfg) {
    const std::string p = "blk" + std::to_string(block_index) + ".";
    const std::int64_t b = x.extent(0), n = x.extent(1), d = x.extent(2);

    auto after_attn = layer_norm(add(x, xca_attention(x, params, p, cfg)),
                                 params.at(p + "ln1.g"), params.at(p + "ln1.b"));
    auto flat = reshape(after_attn, {b * n, d});
    auto hidden = gelu(nndetail::linear(flat, params.at(p + "mlp.w1"), params.at(p + "mlp.b1")));
    auto mlp_out = reshape(nndetail::linear(hidden, params.at(p + "mlp.w2"), params.at(p + "mlp.b2")),
                           {b, n, d});
    auto out = layer_norm(add(after_attn, mlp_out), params.at(p + "ln2.g"), params.at(p + "ln2.b"));
    check_finite(out, "xca_block " + std::to_string(block_index));
    return out;
}

// Class-token representation after the last block and the final norm.
template <typename T>
Tensor<T> forward_backbone(const std::vector<Image>& images, const ParameterSet<T>& params,
                           const BackboneConfig& cfg) {
    validate_backbone_params(params, cfg);
    auto x = patch_embed(images, params, cfg);
    for (std::int64_t i = 0; i < cfg.blocks; ++i) x = xca_block(x, params, i, cfg);
    x = layer_norm(x, params.at("final.g"), params.at("final.b"));
    const std::int64_t b = x.extent(0);
    return reshape(slice(x, 1, 0, 1), {b, cfg.dim});
}

}  // namespace sslbench
