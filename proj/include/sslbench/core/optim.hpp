#pragma once

// SGD with momentum and Adam over a ParameterSet. Moment buffers are keyed
// by parameter name so optimizer state round-trips through checkpoints.
//
// SGD:  v <- mu*v + g;  p <- p - lr*v
// Adam: m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//       p <- p - lr * mhat / (sqrt(vhat) + eps)   with bias-corrected hats
// Weight decay, when set, is coupled L2: g is read as g + wd*p.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/params.hpp"
#include "sslbench/core/tensor.hpp"

namespace sslbench {

enum class OptimizerMode { SgdMomentum, Adam };

template <typename T>
struct OptimizerState {
    OptimizerMode mode = OptimizerMode::SgdMomentum;
    T learning_rate = T(0.1);
    T momentum = T(0.9);       // SGD
    T beta1 = T(0.9);          // Adam
    T beta2 = T(0.999);        // Adam
    T eps = T(1e-8);           // Adam
    T weight_decay = T(0);
    std::uint64_t step_count = 0;

    // first moments for Adam, velocity for SGD
    std::map<std::string, std::vector<T>> m;
    // second moments, Adam only
    std::map<std::string, std::vector<T>> v;

    static OptimizerState sgd(T lr, T mu, T wd = T(0)) {
        OptimizerState s;
        s.mode = OptimizerMode::SgdMomentum;
        s.learning_rate = lr;
        s.momentum = mu;
        s.weight_decay = wd;
        return s;
    }

    static OptimizerState adam(T lr, T b1 = T(0.9), T b2 = T(0.999), T eps_ = T(1e-8),
                               T wd = T(0)) {
        OptimizerState s;
        s.mode = OptimizerMode::Adam;
        s.learning_rate = lr;
        s.beta1 = b1;
        s.beta2 = b2;
        s.eps = eps_;
        s.weight_decay = wd;
        return s;
    }
};

template <typename T>
void optimizer_step(OptimizerState<T>& state, ParameterSet<T>& params) {
    for (auto& [name, p] : params) {
        if (!p.has_grad()) {
            throw UsageError("optimizer_step: parameter '" + name + "' has no gradient");
        }
    }
    state.step_count += 1;
    const T lr = state.learning_rate;

    if (state.mode == OptimizerMode::SgdMomentum) {
        for (auto& [name, p] : params) {
            auto& vel = state.m[name];
            if (vel.size() != p.values().size()) vel.assign(p.values().size(), T(0));
            const auto& g = p.grad();
            auto& w = p.mutable_values();
            for (std::size_t i = 0; i < w.size(); ++i) {
                const T gi = g[i] + state.weight_decay * w[i];
                vel[i] = state.momentum * vel[i] + gi;
                w[i] -= lr * vel[i];
            }
        }
        return;
    }

    const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.step_count));
    const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.step_count));
    for (auto& [name, p] : params) {
        auto& m1 = state.m[name];
        auto& m2 = state.v[name];
        if (m1.size() != p.values().size()) m1.assign(p.values().size(), T(0));
        if (m2.size() != p.values().size()) m2.assign(p.values().size(), T(0));
        const auto& g = p.grad();
        auto& w = p.mutable_values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const T gi = g[i] + state.weight_decay * w[i];
            m1[i] = state.beta1 * m1[i] + (T(1) - state.beta1) * gi;
            m2[i] = state.beta2 * m2[i] + (T(1) - state.beta2) * gi * gi;
            const T mhat = m1[i] / bc1;
            const T vhat = m2[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace sslbench
