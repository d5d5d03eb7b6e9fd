#pragma once

// Four-layer projection head: two GELU-separated hidden layers, a linear
// bottleneck, unit normalization, then a bias-free linear map onto K_out
// prototype logits.
//
// Parameter names: head.fc1.{w,b} head.fc2.{w,b} head.fc3.{w,b} head.fc4.w

#include <cstdint>
#include <string>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/params.hpp"
#include "sslbench/core/tensor.hpp"
#include "sslbench/nn/backbone.hpp"

namespace sslbench {

struct HeadConfig {
    std::int64_t in_dim = 64;
    std::int64_t hidden = 128;
    std::int64_t bottleneck = 64;
    std::int64_t k_out = 256;
};

inline void validate_head_config(const HeadConfig& cfg) {
    if (cfg.in_dim < 1 || cfg.hidden < 1 || cfg.bottleneck < 1 || cfg.k_out < 1) {
        throw ConfigError("head: all widths must be >= 1");
    }
}

template <typename T>
void init_head_params(ParameterSet<T>& params, const HeadConfig& cfg, std::uint64_t seed) {
    validate_head_config(cfg);
    constexpr double kStd = 0.02;
    nndetail::add_init(params, seed, "head.fc1.w", {cfg.in_dim, cfg.hidden}, kStd);
    nndetail::add_const(params, "head.fc1.b", {cfg.hidden}, T(0));
    nndetail::add_init(params, seed, "head.fc2.w", {cfg.hidden, cfg.hidden}, kStd);
    nndetail::add_const(params, "head.fc2.b", {cfg.hidden}, T(0));
    nndetail::add_init(params, seed, "head.fc3.w", {cfg.hidden, cfg.bottleneck}, kStd);
    nndetail::add_const(params, "head.fc3.b", {cfg.bottleneck}, T(0));
    nndetail::add_init(params, seed, "head.fc4.w", {cfg.bottleneck, cfg.k_out}, kStd);
}

template <typename T>
void validate_head_params(const ParameterSet<T>& params, const HeadConfig& cfg) {
    validate_head_config(cfg);
    auto expect = [&](const std::string& name, const Shape& shape) {
        if (!params.contains(name)) throw ConfigError("head parameters missing '" + name + "'");
        if (params.at(name).shape() != shape) {
            throw ConfigError("head parameter '" + name + "' has shape " +
                              shape_str(params.at(name).shape()) + ", config implies " +
                              shape_str(shape));
        }
    };
    expect("head.fc1.w", {cfg.in_dim, cfg.hidden});
    expect("head.fc2.w", {cfg.hidden, cfg.hidden});
    expect("head.fc3.w", {cfg.hidden, cfg.bottleneck});
    expect("head.fc4.w", {cfg.bottleneck, cfg.k_out});
}

template <typename T>
Tensor<T> projection_head(const Tensor<T>& features, const ParameterSet<T>& params,
                          const HeadConfig& cfg) {
    if (features.ndim() != 2) throw ShapeError("projection_head expects batch x dim features");
    if (features.extent(1) != cfg.in_dim) {
        throw ConfigError("projection_head: feature width " + std::to_string(features.extent(1)) +
                          " does not match configured in_dim " + std::to_string(cfg.in_dim));
    }
    validate_head_params(params, cfg);
    auto h1 = gelu(nndetail::linear(features, params.at("head.fc1.w"), params.at("head.fc1.b")));
    auto h2 = gelu(nndetail::linear(h1, params.at("head.fc2.w"), params.at("head.fc2.b")));
    auto h3 = nndetail::linear(h2, params.at("head.fc3.w"), params.at("head.fc3.b"));
    return matmul(l2_normalize(h3, 1), params.at("head.fc4.w"));
}

}  // namespace sslbench
