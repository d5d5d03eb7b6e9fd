#pragma once

// Central finite-difference gradient checking. Only meaningful at 64-bit.

#include <cmath>
#include <functional>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/tensor.hpp"

namespace sslbench {

// fn maps a tensor to a scalar tensor. Returns the max over coordinates of
// |analytic - central difference| / max(1, |analytic|).
template <typename T>
T grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& fn, const Tensor<T>& point,
             T eps = T(1e-5)) {
    if (!(eps > T(0))) throw UsageError("grad_check eps must be positive");

    Tensor<T> x = Tensor<T>::from(point.shape(), point.values(), true);
    Tensor<T> loss = fn(x);
    if (loss.numel() != 1) throw UsageError("grad_check expects a scalar-valued function");
    check_finite(loss, "grad_check forward");
    backward(loss);
    std::vector<T> analytic =
        x.has_grad() ? x.grad() : std::vector<T>(x.values().size(), T(0));

    T worst = T(0);
    NoGradGuard ng;
    std::vector<T> probe = point.values();
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const T keep = probe[i];
        probe[i] = keep + eps;
        const T up = fn(Tensor<T>::from(point.shape(), probe)).item();
        probe[i] = keep - eps;
        const T dn = fn(Tensor<T>::from(point.shape(), probe)).item();
        probe[i] = keep;
        if (!std::isfinite(up) || !std::isfinite(dn)) {
            throw NumericError("grad_check: non-finite value during finite differencing");
        }
        const T fd = (up - dn) / (T(2) * eps);
        const T err = std::abs(analytic[i] - fd) / std::max(T(1), std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace sslbench
