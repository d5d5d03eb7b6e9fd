#pragma once

// Dense n-dimensional tensors with reverse-mode differentiation.
//
// Tensors are immutable after construction except for gradient accumulators
// and explicit parameter updates between steps. Ops record a DAG of parent
// links plus a backward closure; backward() walks the graph once in reverse
// topological order and accumulates additively across fan-out. All kernels
// use fixed reduction orders, so a given seed reproduces runs bit-exactly.
// Work is split across workers by output row only, which keeps results
// independent of the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/parallel.hpp"
#include "sslbench/core/rng.hpp"

namespace sslbench {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

inline void check_shape_valid(const Shape& s) {
    for (auto e : s) {
        if (e <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(s));
    }
}

// Counts scalar floating-point work per primitive application. Used by the
// complexity tests; cheap enough to leave always on.
struct OpCounter {
    static std::uint64_t& value() {
        thread_local std::uint64_t v = 0;
        return v;
    }
    static void reset() { value() = 0; }
    static std::uint64_t get() { return value(); }
    static void add(std::uint64_t n) { value() += n; }
};

namespace autograd {

inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

}  // namespace autograd

// Disables graph construction in a scope (teacher forward, inference).
struct NoGradGuard {
    NoGradGuard() : prev_(autograd::grad_mode()) { autograd::grad_mode() = false; }
    ~NoGradGuard() { autograd::grad_mode() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

template <typename T>
struct TensorNode {
    static_assert(std::is_floating_point_v<T>);

    Shape shape;
    std::vector<T> values;
    bool requires_grad = false;
    std::vector<T> grad;

    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), T(0));
    }

    void zero_grad() { grad.assign(values.size(), T(0)); }
};

template <typename T>
class Tensor {
public:
    using Node = TensorNode<T>;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), T(0), requires_grad);
    }

    static Tensor filled(Shape shape, T value, bool requires_grad = false) {
        check_shape_valid(shape);
        auto n = std::make_shared<Node>();
        n->values.assign(static_cast<std::size_t>(shape_numel(shape)), value);
        n->shape = std::move(shape);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
        check_shape_valid(shape);
        if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
            throw ShapeError("value count " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(shape));
        }
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->values = std::move(values);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor scalar(T v, bool requires_grad = false) {
        return from({1}, {v}, requires_grad);
    }

    static Tensor randn(Shape shape, Rng& rng, T stddev = T(1), bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        for (auto& v : t.node_->values) v = static_cast<T>(rng.normal()) * stddev;
        return t;
    }

    static Tensor truncated_normal(Shape shape, Rng& rng, T stddev, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        for (auto& v : t.node_->values) v = static_cast<T>(rng.truncated_normal(stddev));
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t ndim() const { return static_cast<std::int64_t>(node_->shape.size()); }
    std::int64_t numel() const { return node_->numel(); }
    std::int64_t extent(std::int64_t axis) const { return node_->shape[static_cast<std::size_t>(axis)]; }

    const std::vector<T>& values() const { return node_->values; }
    std::vector<T>& mutable_values() { return node_->values; }
    const std::vector<T>& grad() const { return node_->grad; }
    std::vector<T>& mutable_grad() { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }

    // Gradient storage stays unallocated until a backward pass or zero_grad
    // touches it; an empty grad therefore means "no gradient yet".
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    bool has_grad() const { return node_->grad.size() == node_->values.size(); }

    void zero_grad() { node_->zero_grad(); }

    T item() const {
        if (numel() != 1) throw UsageError("item() requires a single-element tensor");
        return node_->values[0];
    }

    // Leaf copy detached from any graph.
    Tensor detach() const { return from(node_->shape, node_->values, false); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// True when every element is finite.
template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (T v : t.values()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Check barrier: NaN/Inf never travels silently past a call to this.
template <typename T>
void check_finite(const Tensor<T>& t, const std::string& context) {
    if (!all_finite(t)) throw NumericError(context + ": non-finite values detected");
}

namespace detail {

template <typename T>
std::shared_ptr<TensorNode<T>> make_node(Shape shape, std::vector<std::shared_ptr<TensorNode<T>>> parents) {
    auto n = std::make_shared<TensorNode<T>>();
    n->values.assign(static_cast<std::size_t>(shape_numel(shape)), T(0));
    n->shape = std::move(shape);
    bool needs = false;
    if (autograd::grad_mode()) {
        for (const auto& p : parents) needs = needs || p->requires_grad;
    }
    n->requires_grad = needs;
    if (needs) n->parents = std::move(parents);
    return n;
}

// Numpy-style broadcast of two shapes, trailing-aligned.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t nd = std::max(a.size(), b.size());
    Shape out(nd, 1);
    for (std::size_t i = 0; i < nd; ++i) {
        const std::int64_t ea = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
        const std::int64_t eb = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
        if (ea != eb && ea != 1 && eb != 1) {
            throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) +
                             " are not broadcastable");
        }
        out[i] = std::max(ea, eb);
    }
    return out;
}

// Row-major strides with zeros on broadcast axes, aligned to `out` rank.
inline std::vector<std::int64_t> broadcast_strides(const Shape& in, const Shape& out) {
    std::vector<std::int64_t> strides(out.size(), 0);
    std::int64_t s = 1;
    for (std::int64_t i = static_cast<std::int64_t>(in.size()) - 1; i >= 0; --i) {
        const std::size_t oi = out.size() - in.size() + static_cast<std::size_t>(i);
        strides[oi] = (in[static_cast<std::size_t>(i)] == 1) ? 0 : s;
        s *= in[static_cast<std::size_t>(i)];
    }
    return strides;
}

// Folds `full` (shaped like `out_shape`) back onto the broadcast input shape.
template <typename T>
void reduce_to_shape(const std::vector<T>& full, const Shape& out_shape, const Shape& in_shape,
                     std::vector<T>& acc) {
    if (in_shape == out_shape) {
        for (std::size_t i = 0; i < full.size(); ++i) acc[i] += full[i];
        return;
    }
    const auto strides = broadcast_strides(in_shape, out_shape);
    const std::size_t nd = out_shape.size();
    std::vector<std::int64_t> idx(nd, 0);
    const std::int64_t n = shape_numel(out_shape);
    std::int64_t off = 0;
    for (std::int64_t lin = 0; lin < n; ++lin) {
        acc[static_cast<std::size_t>(off)] += full[static_cast<std::size_t>(lin)];
        for (std::int64_t d = static_cast<std::int64_t>(nd) - 1; d >= 0; --d) {
            idx[static_cast<std::size_t>(d)]++;
            off += strides[static_cast<std::size_t>(d)];
            if (idx[static_cast<std::size_t>(d)] < out_shape[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
            off -= strides[static_cast<std::size_t>(d)] * out_shape[static_cast<std::size_t>(d)];
        }
    }
}

template <typename T, typename FwdFn>
void broadcast_binary_values(const TensorNode<T>& a, const TensorNode<T>& b, TensorNode<T>& out,
                             FwdFn&& fn) {
    if (a.shape == b.shape) {
        const std::int64_t n = out.numel();
        const T* pa = a.values.data();
        const T* pb = b.values.data();
        T* po = out.values.data();
        parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t i = lo; i < hi; ++i) po[i] = fn(pa[i], pb[i]);
        }, 1 << 15);
        return;
    }
    // second fast path: [..., d] against [d]
    if (b.shape.size() == 1 && !a.shape.empty() && a.shape.back() == b.shape[0] &&
        out.shape == a.shape) {
        const std::int64_t d = b.shape[0];
        const std::int64_t rows = out.numel() / d;
        const T* pa = a.values.data();
        const T* pb = b.values.data();
        T* po = out.values.data();
        parallel_for(rows, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t r = lo; r < hi; ++r) {
                const T* ra = pa + r * d;
                T* ro = po + r * d;
                for (std::int64_t j = 0; j < d; ++j) ro[j] = fn(ra[j], pb[j]);
            }
        }, 256);
        return;
    }
    const auto sa = broadcast_strides(a.shape, out.shape);
    const auto sb = broadcast_strides(b.shape, out.shape);
    const std::size_t nd = out.shape.size();
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t offa = 0, offb = 0;
    const std::int64_t n = out.numel();
    for (std::int64_t lin = 0; lin < n; ++lin) {
        out.values[static_cast<std::size_t>(lin)] =
            fn(a.values[static_cast<std::size_t>(offa)], b.values[static_cast<std::size_t>(offb)]);
        for (std::int64_t d = static_cast<std::int64_t>(nd) - 1; d >= 0; --d) {
            idx[static_cast<std::size_t>(d)]++;
            offa += sa[static_cast<std::size_t>(d)];
            offb += sb[static_cast<std::size_t>(d)];
            if (idx[static_cast<std::size_t>(d)] < out.shape[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
            offa -= sa[static_cast<std::size_t>(d)] * out.shape[static_cast<std::size_t>(d)];
            offb -= sb[static_cast<std::size_t>(d)] * out.shape[static_cast<std::size_t>(d)];
        }
    }
}

// grad of a broadcast operand: weight each output-grad element and fold back.
template <typename T, typename WeightFn>
void accumulate_broadcast_grad(TensorNode<T>& self, TensorNode<T>& target, const TensorNode<T>& other,
                               WeightFn&& weight) {
    target.ensure_grad();
    if (target.shape == self.shape && other.shape == self.shape) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            target.grad[i] += weight(self.grad[i], other.values[i]);
        }
        return;
    }
    const auto so = broadcast_strides(other.shape, self.shape);
    const auto st = broadcast_strides(target.shape, self.shape);
    const std::size_t nd = self.shape.size();
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t offo = 0, offt = 0;
    const std::int64_t n = self.numel();
    for (std::int64_t lin = 0; lin < n; ++lin) {
        target.grad[static_cast<std::size_t>(offt)] +=
            weight(self.grad[static_cast<std::size_t>(lin)], other.values[static_cast<std::size_t>(offo)]);
        for (std::int64_t d = static_cast<std::int64_t>(nd) - 1; d >= 0; --d) {
            idx[static_cast<std::size_t>(d)]++;
            offo += so[static_cast<std::size_t>(d)];
            offt += st[static_cast<std::size_t>(d)];
            if (idx[static_cast<std::size_t>(d)] < self.shape[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
            offo -= so[static_cast<std::size_t>(d)] * self.shape[static_cast<std::size_t>(d)];
            offt -= st[static_cast<std::size_t>(d)] * self.shape[static_cast<std::size_t>(d)];
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise / broadcast primitives
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    auto out_shape = detail::broadcast_shape(a.shape(), b.shape());
    auto n = detail::make_node<T>(out_shape, {a.node(), b.node()});
    detail::broadcast_binary_values(*a.node(), *b.node(), *n, [](T x, T y) { return x + y; });
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        auto pb = b.node();
        n->backward_fn = [pa, pb](TensorNode<T>& self) {
            if (pa->requires_grad) {
                detail::accumulate_broadcast_grad(self, *pa, *pb, [](T g, T) { return g; });
            }
            if (pb->requires_grad) {
                detail::accumulate_broadcast_grad(self, *pb, *pa, [](T g, T) { return g; });
            }
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    auto out_shape = detail::broadcast_shape(a.shape(), b.shape());
    auto n = detail::make_node<T>(out_shape, {a.node(), b.node()});
    detail::broadcast_binary_values(*a.node(), *b.node(), *n, [](T x, T y) { return x * y; });
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        auto pb = b.node();
        n->backward_fn = [pa, pb](TensorNode<T>& self) {
            if (pa->requires_grad) {
                detail::accumulate_broadcast_grad(self, *pa, *pb, [](T g, T o) { return g * o; });
            }
            if (pb->requires_grad) {
                detail::accumulate_broadcast_grad(self, *pb, *pa, [](T g, T o) { return g * o; });
            }
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    for (std::size_t i = 0; i < n->values.size(); ++i) n->values[i] = a.values()[i] + c;
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    for (std::size_t i = 0; i < n->values.size(); ++i) n->values[i] = a.values()[i] * c;
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa, c](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * c;
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return add(a, mul_scalar(b, T(-1)));
}

template <typename T>
Tensor<T> reciprocal(const Tensor<T>& a) {
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    for (std::size_t i = 0; i < n->values.size(); ++i) n->values[i] = T(1) / a.values()[i];
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        std::vector<T> y = n->values;
        n->backward_fn = [pa, y = std::move(y)](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                pa->grad[i] -= self.grad[i] * y[i] * y[i];
            }
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    for (std::size_t i = 0; i < n->values.size(); ++i) n->values[i] = std::log(a.values()[i]);
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] / pa->values[i];
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    for (std::size_t i = 0; i < n->values.size(); ++i) n->values[i] = std::exp(a.values()[i]);
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        std::vector<T> y = n->values;
        n->backward_fn = [pa, y = std::move(y)](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * y[i];
        };
    }
    return Tensor<T>(std::move(n));
}

// Gradient is zero on the clamped side and at the threshold itself.
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    for (std::size_t i = 0; i < n->values.size(); ++i) n->values[i] = std::max(a.values()[i], lo);
    OpCounter::add(static_cast<std::uint64_t>(n->numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa, lo](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (pa->values[i] > lo) pa->grad[i] += self.grad[i];
            }
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    constexpr T kInvSqrt2 = T(0.70710678118654752440084436210485L);
    constexpr T kInvSqrt2Pi = T(0.39894228040143267793994605993438L);
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    const T* px = a.values().data();
    T* po = n->values.data();
    const std::int64_t cnt = n->numel();
    parallel_for(cnt, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            const T x = px[i];
            po[i] = T(0.5) * x * (T(1) + std::erf(x * kInvSqrt2));
        }
    }, 1 << 14);
    OpCounter::add(static_cast<std::uint64_t>(4 * cnt));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const T x = pa->values[i];
                const T cdf = T(0.5) * (T(1) + std::erf(x * kInvSqrt2));
                const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * x * x);
                pa->grad[i] += self.grad[i] * (cdf + x * pdf);
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// ---------------------------------------------------------------------------
// shape manipulation
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
    check_shape_valid(new_shape);
    if (shape_numel(new_shape) != a.numel()) {
        throw ShapeError("cannot reshape " + shape_str(a.shape()) + " to " + shape_str(new_shape));
    }
    auto n = detail::make_node<T>(new_shape, {a.node()});
    n->values = a.values();
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        };
    }
    return Tensor<T>(std::move(n));
}

namespace detail {

template <typename T>
void swap_axes_copy(const std::vector<T>& src, const Shape& in_shape, std::int64_t a0,
                    std::int64_t a1, std::vector<T>& dst) {
    const std::size_t nd = in_shape.size();
    Shape out_shape = in_shape;
    std::swap(out_shape[static_cast<std::size_t>(a0)], out_shape[static_cast<std::size_t>(a1)]);
    std::vector<std::int64_t> in_strides(nd, 1);
    for (std::int64_t i = static_cast<std::int64_t>(nd) - 2; i >= 0; --i) {
        in_strides[static_cast<std::size_t>(i)] =
            in_strides[static_cast<std::size_t>(i) + 1] * in_shape[static_cast<std::size_t>(i) + 1];
    }
    // strides of the source viewed in output index order
    std::vector<std::int64_t> view = in_strides;
    std::swap(view[static_cast<std::size_t>(a0)], view[static_cast<std::size_t>(a1)]);
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t off = 0;
    const std::int64_t n = shape_numel(out_shape);
    for (std::int64_t lin = 0; lin < n; ++lin) {
        dst[static_cast<std::size_t>(lin)] = src[static_cast<std::size_t>(off)];
        for (std::int64_t d = static_cast<std::int64_t>(nd) - 1; d >= 0; --d) {
            idx[static_cast<std::size_t>(d)]++;
            off += view[static_cast<std::size_t>(d)];
            if (idx[static_cast<std::size_t>(d)] < out_shape[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
            off -= view[static_cast<std::size_t>(d)] * out_shape[static_cast<std::size_t>(d)];
        }
    }
}

}  // namespace detail

// Swaps two axes (materialized copy, not a view).
template <typename T>
Tensor<T> transpose(const Tensor<T>& a, std::int64_t axis0, std::int64_t axis1) {
    const std::int64_t nd = a.ndim();
    if (axis0 < 0 || axis0 >= nd || axis1 < 0 || axis1 >= nd) {
        throw ShapeError("transpose axes out of range for " + shape_str(a.shape()));
    }
    Shape out_shape = a.shape();
    std::swap(out_shape[static_cast<std::size_t>(axis0)], out_shape[static_cast<std::size_t>(axis1)]);
    auto n = detail::make_node<T>(out_shape, {a.node()});
    detail::swap_axes_copy(a.values(), a.shape(), axis0, axis1, n->values);
    if (n->requires_grad) {
        auto pa = a.node();
        Shape self_shape = out_shape;
        n->backward_fn = [pa, axis0, axis1, self_shape](TensorNode<T>& self) {
            pa->ensure_grad();
            std::vector<T> tmp(pa->values.size());
            detail::swap_axes_copy(self.grad, self_shape, axis0, axis1, tmp);
            for (std::size_t i = 0; i < tmp.size(); ++i) pa->grad[i] += tmp[i];
        };
    }
    return Tensor<T>(std::move(n));
}

// 2-D convenience transpose.
template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.ndim() != 2) throw ShapeError("transpose() without axes expects a matrix");
    return transpose(a, 0, 1);
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::int64_t axis) {
    if (parts.empty()) throw UsageError("concat of zero tensors");
    const std::int64_t nd = parts[0].ndim();
    if (axis < 0 || axis >= nd) throw ShapeError("concat axis out of range");
    Shape out_shape = parts[0].shape();
    std::int64_t total = 0;
    for (const auto& p : parts) {
        if (p.ndim() != nd) throw ShapeError("concat rank mismatch");
        for (std::int64_t d = 0; d < nd; ++d) {
            if (d != axis && p.extent(d) != out_shape[static_cast<std::size_t>(d)]) {
                throw ShapeError("concat extent mismatch at axis " + std::to_string(d));
            }
        }
        total += p.extent(axis);
    }
    out_shape[static_cast<std::size_t>(axis)] = total;

    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) parents.push_back(p.node());
    auto n = detail::make_node<T>(out_shape, parents);

    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < axis; ++d) outer *= out_shape[static_cast<std::size_t>(d)];
    for (std::int64_t d = axis + 1; d < nd; ++d) inner *= out_shape[static_cast<std::size_t>(d)];

    std::int64_t offset = 0;
    std::vector<std::int64_t> part_offsets(parts.size());
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        part_offsets[pi] = offset;
        const std::int64_t ext = parts[pi].extent(axis);
        const T* src = parts[pi].values().data();
        T* dst = n->values.data();
        for (std::int64_t o = 0; o < outer; ++o) {
            std::copy(src + o * ext * inner, src + (o + 1) * ext * inner,
                      dst + (o * total + offset) * inner);
        }
        offset += ext;
    }
    if (n->requires_grad) {
        std::vector<std::int64_t> extents(parts.size());
        for (std::size_t pi = 0; pi < parts.size(); ++pi) extents[pi] = parts[pi].extent(axis);
        n->backward_fn = [parents, part_offsets, extents, outer, inner, total](TensorNode<T>& self) {
            for (std::size_t pi = 0; pi < parents.size(); ++pi) {
                if (!parents[pi]->requires_grad) continue;
                parents[pi]->ensure_grad();
                const std::int64_t ext = extents[pi];
                for (std::int64_t o = 0; o < outer; ++o) {
                    const T* g = self.grad.data() + (o * total + part_offsets[pi]) * inner;
                    T* dst = parents[pi]->grad.data() + o * ext * inner;
                    for (std::int64_t i = 0; i < ext * inner; ++i) dst[i] += g[i];
                }
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// Contiguous range [begin, end) along one axis.
template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::int64_t axis, std::int64_t begin, std::int64_t end) {
    const std::int64_t nd = a.ndim();
    if (axis < 0 || axis >= nd) throw ShapeError("slice axis out of range");
    const std::int64_t ext = a.extent(axis);
    if (begin < 0 || end > ext || begin >= end) {
        throw ShapeError("slice range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for extent " + std::to_string(ext));
    }
    Shape out_shape = a.shape();
    out_shape[static_cast<std::size_t>(axis)] = end - begin;
    auto n = detail::make_node<T>(out_shape, {a.node()});

    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < axis; ++d) outer *= a.extent(d);
    for (std::int64_t d = axis + 1; d < nd; ++d) inner *= a.extent(d);
    const std::int64_t span = end - begin;
    for (std::int64_t o = 0; o < outer; ++o) {
        const T* src = a.values().data() + (o * ext + begin) * inner;
        std::copy(src, src + span * inner, n->values.data() + o * span * inner);
    }
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa, outer, inner, ext, begin, span](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::int64_t o = 0; o < outer; ++o) {
                const T* g = self.grad.data() + o * span * inner;
                T* dst = pa->grad.data() + (o * ext + begin) * inner;
                for (std::int64_t i = 0; i < span * inner; ++i) dst[i] += g[i];
            }
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> broadcast_to(const Tensor<T>& a, Shape target) {
    auto bshape = detail::broadcast_shape(a.shape(), target);
    if (bshape != target) {
        throw ShapeError("cannot broadcast " + shape_str(a.shape()) + " to " + shape_str(target));
    }
    auto n = detail::make_node<T>(target, {a.node()});
    const auto strides = detail::broadcast_strides(a.shape(), target);
    const std::size_t nd = target.size();
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t off = 0;
    const std::int64_t cnt = n->numel();
    for (std::int64_t lin = 0; lin < cnt; ++lin) {
        n->values[static_cast<std::size_t>(lin)] = a.values()[static_cast<std::size_t>(off)];
        for (std::int64_t d = static_cast<std::int64_t>(nd) - 1; d >= 0; --d) {
            idx[static_cast<std::size_t>(d)]++;
            off += strides[static_cast<std::size_t>(d)];
            if (idx[static_cast<std::size_t>(d)] < target[static_cast<std::size_t>(d)]) break;
            idx[static_cast<std::size_t>(d)] = 0;
            off -= strides[static_cast<std::size_t>(d)] * target[static_cast<std::size_t>(d)];
        }
    }
    if (n->requires_grad) {
        auto pa = a.node();
        Shape in_shape = a.shape();
        Shape out_shape = target;
        n->backward_fn = [pa, in_shape, out_shape](TensorNode<T>& self) {
            pa->ensure_grad();
            detail::reduce_to_shape(self.grad, out_shape, in_shape, pa->grad);
        };
    }
    return Tensor<T>(std::move(n));
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    auto n = detail::make_node<T>(Shape{1}, {a.node()});
    T acc = T(0);
    for (T v : a.values()) acc += v;
    n->values[0] = acc;
    OpCounter::add(static_cast<std::uint64_t>(a.numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa](TensorNode<T>& self) {
            pa->ensure_grad();
            const T g = self.grad[0];
            for (auto& v : pa->grad) v += g;
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    const T scale = T(1) / static_cast<T>(a.numel());
    return mul_scalar(sum(a), scale);
}

// Reduction along a single axis; the axis is removed unless keepdim.
template <typename T>
Tensor<T> sum_axis(const Tensor<T>& a, std::int64_t axis, bool keepdim = false) {
    const std::int64_t nd = a.ndim();
    if (axis < 0 || axis >= nd) throw ShapeError("sum axis out of range");
    const std::int64_t ext = a.extent(axis);
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < axis; ++d) outer *= a.extent(d);
    for (std::int64_t d = axis + 1; d < nd; ++d) inner *= a.extent(d);

    Shape out_shape;
    for (std::int64_t d = 0; d < nd; ++d) {
        if (d == axis) {
            if (keepdim) out_shape.push_back(1);
        } else {
            out_shape.push_back(a.extent(d));
        }
    }
    if (out_shape.empty()) out_shape = {1};
    auto n = detail::make_node<T>(out_shape, {a.node()});
    const T* src = a.values().data();
    T* dst = n->values.data();
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = 0; i < inner; ++i) {
            T acc = T(0);
            for (std::int64_t e = 0; e < ext; ++e) acc += src[(o * ext + e) * inner + i];
            dst[o * inner + i] = acc;
        }
    }
    OpCounter::add(static_cast<std::uint64_t>(a.numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa, outer, inner, ext](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::int64_t e = 0; e < ext; ++e) {
                    const T* g = self.grad.data() + o * inner;
                    T* dst2 = pa->grad.data() + (o * ext + e) * inner;
                    for (std::int64_t i = 0; i < inner; ++i) dst2[i] += g[i];
                }
            }
        };
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, std::int64_t axis, bool keepdim = false) {
    const T scale = T(1) / static_cast<T>(a.extent(axis));
    return mul_scalar(sum_axis(a, axis, keepdim), scale);
}

// ---------------------------------------------------------------------------
// matrix products
// ---------------------------------------------------------------------------

namespace detail {

// C[m,n] += A[m,k] * B[k,n]; row-parallel ikj kernel.
template <typename T>
void gemm_accumulate(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
    parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            T* crow = c + i * n;
            const T* arow = a + i * k;
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const T av = arow[kk];
                const T* brow = b + kk * n;
                for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }, std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, k * n)));
}

// C[m,n] += A[m,k] * B[n,k]^T
template <typename T>
void gemm_bt_accumulate(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
    parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            const T* arow = a + i * k;
            T* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) {
                const T* brow = b + j * k;
                T acc = T(0);
                for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
                crow[j] += acc;
            }
        }
    }, std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, k * n)));
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void gemm_at_accumulate(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
    parallel_for(k, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t kk = lo; kk < hi; ++kk) {
            T* crow = c + kk * n;
            for (std::int64_t i = 0; i < m; ++i) {
                const T av = a[i * k + kk];
                const T* brow = b + i * n;
                for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }, std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, m * n)));
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2) {
        throw ShapeError("matmul expects matrices, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    const std::int64_t m = a.extent(0), k = a.extent(1), k2 = b.extent(0), nn = b.extent(1);
    if (k != k2) {
        throw ShapeError("matmul inner extents disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    auto n = detail::make_node<T>(Shape{m, nn}, {a.node(), b.node()});
    detail::gemm_accumulate(a.values().data(), b.values().data(), n->values.data(), m, k, nn);
    OpCounter::add(static_cast<std::uint64_t>(2 * m * k * nn));
    if (n->requires_grad) {
        auto pa = a.node();
        auto pb = b.node();
        n->backward_fn = [pa, pb, m, k, nn](TensorNode<T>& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                detail::gemm_bt_accumulate(self.grad.data(), pb->values.data(), pa->grad.data(), m,
                                           nn, k);
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                detail::gemm_at_accumulate(pa->values.data(), self.grad.data(), pb->grad.data(), m,
                                           k, nn);
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// Batched matmul over identical leading dims: [..., m, k] x [..., k, n].
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() < 3 || b.ndim() != a.ndim()) {
        throw ShapeError("bmm expects equal-rank tensors of rank >= 3");
    }
    const std::int64_t nd = a.ndim();
    std::int64_t groups = 1;
    for (std::int64_t d = 0; d < nd - 2; ++d) {
        if (a.extent(d) != b.extent(d)) throw ShapeError("bmm leading extents disagree");
        groups *= a.extent(d);
    }
    const std::int64_t m = a.extent(nd - 2), k = a.extent(nd - 1);
    const std::int64_t k2 = b.extent(nd - 2), nn = b.extent(nd - 1);
    if (k != k2) {
        throw ShapeError("bmm inner extents disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    Shape out_shape(a.shape().begin(), a.shape().end() - 2);
    out_shape.push_back(m);
    out_shape.push_back(nn);
    auto n = detail::make_node<T>(out_shape, {a.node(), b.node()});
    for (std::int64_t g = 0; g < groups; ++g) {
        detail::gemm_accumulate(a.values().data() + g * m * k, b.values().data() + g * k * nn,
                                n->values.data() + g * m * nn, m, k, nn);
    }
    OpCounter::add(static_cast<std::uint64_t>(2 * groups * m * k * nn));
    if (n->requires_grad) {
        auto pa = a.node();
        auto pb = b.node();
        n->backward_fn = [pa, pb, groups, m, k, nn](TensorNode<T>& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::int64_t g = 0; g < groups; ++g) {
                    detail::gemm_bt_accumulate(self.grad.data() + g * m * nn,
                                               pb->values.data() + g * k * nn,
                                               pa->grad.data() + g * m * k, m, nn, k);
                }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::int64_t g = 0; g < groups; ++g) {
                    detail::gemm_at_accumulate(pa->values.data() + g * m * k,
                                               self.grad.data() + g * m * nn,
                                               pb->grad.data() + g * k * nn, m, k, nn);
                }
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// ---------------------------------------------------------------------------
// normalization and activation over rows
// ---------------------------------------------------------------------------

// Temperature-sharpened softmax along the last axis, max-subtracted.
template <typename T>
Tensor<T> softmax_t(const Tensor<T>& a, T temperature) {
    if (!(temperature > T(0))) throw UsageError("softmax temperature must be positive");
    const std::int64_t d = a.extent(a.ndim() - 1);
    const std::int64_t rows = a.numel() / d;
    auto n = detail::make_node<T>(a.shape(), {a.node()});
    const T* src = a.values().data();
    T* dst = n->values.data();
    const T inv_t = T(1) / temperature;
    parallel_for(rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
            const T* x = src + r * d;
            T* y = dst + r * d;
            T mx = x[0];
            for (std::int64_t j = 1; j < d; ++j) mx = std::max(mx, x[j]);
            T denom = T(0);
            for (std::int64_t j = 0; j < d; ++j) {
                y[j] = std::exp((x[j] - mx) * inv_t);
                denom += y[j];
            }
            const T inv = T(1) / denom;
            for (std::int64_t j = 0; j < d; ++j) y[j] *= inv;
        }
    }, 64);
    OpCounter::add(static_cast<std::uint64_t>(5 * a.numel()));
    if (n->requires_grad) {
        auto pa = a.node();
        n->backward_fn = [pa, rows, d, inv_t](TensorNode<T>& self) {
            pa->ensure_grad();
            for (std::int64_t r = 0; r < rows; ++r) {
                const T* p = self.values.data() + r * d;
                const T* g = self.grad.data() + r * d;
                T* out = pa->grad.data() + r * d;
                T dot = T(0);
                for (std::int64_t j = 0; j < d; ++j) dot += g[j] * p[j];
                for (std::int64_t j = 0; j < d; ++j) out[j] += p[j] * (g[j] - dot) * inv_t;
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// Layer normalization along the last axis with affine parameters.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5)) {
    const std::int64_t d = x.extent(x.ndim() - 1);
    if (gamma.numel() != d || beta.numel() != d) {
        throw ShapeError("layer_norm affine parameters must have extent " + std::to_string(d));
    }
    const std::int64_t rows = x.numel() / d;
    auto n = detail::make_node<T>(x.shape(), {x.node(), gamma.node(), beta.node()});
    std::vector<T> inv_std(static_cast<std::size_t>(rows));
    std::vector<T> means(static_cast<std::size_t>(rows));
    const T* src = x.values().data();
    const T* g = gamma.values().data();
    const T* b = beta.values().data();
    T* dst = n->values.data();
    parallel_for(rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
            const T* xr = src + r * d;
            T mu = T(0);
            for (std::int64_t j = 0; j < d; ++j) mu += xr[j];
            mu /= static_cast<T>(d);
            T var = T(0);
            for (std::int64_t j = 0; j < d; ++j) {
                const T c = xr[j] - mu;
                var += c * c;
            }
            var /= static_cast<T>(d);
            const T is = T(1) / std::sqrt(var + eps);
            means[static_cast<std::size_t>(r)] = mu;
            inv_std[static_cast<std::size_t>(r)] = is;
            T* yr = dst + r * d;
            for (std::int64_t j = 0; j < d; ++j) yr[j] = (xr[j] - mu) * is * g[j] + b[j];
        }
    }, 64);
    OpCounter::add(static_cast<std::uint64_t>(8 * x.numel()));
    if (n->requires_grad) {
        auto px = x.node();
        auto pg = gamma.node();
        auto pb = beta.node();
        n->backward_fn = [px, pg, pb, rows, d, means = std::move(means),
                          inv_std = std::move(inv_std)](TensorNode<T>& self) {
            if (pg->requires_grad) pg->ensure_grad();
            if (pb->requires_grad) pb->ensure_grad();
            if (px->requires_grad) px->ensure_grad();
            for (std::int64_t r = 0; r < rows; ++r) {
                const T* xr = px->values.data() + r * d;
                const T* gr = self.grad.data() + r * d;
                const T mu = means[static_cast<std::size_t>(r)];
                const T is = inv_std[static_cast<std::size_t>(r)];
                if (pg->requires_grad || pb->requires_grad) {
                    for (std::int64_t j = 0; j < d; ++j) {
                        const T xhat = (xr[j] - mu) * is;
                        if (pg->requires_grad) pg->grad[static_cast<std::size_t>(j)] += gr[j] * xhat;
                        if (pb->requires_grad) pb->grad[static_cast<std::size_t>(j)] += gr[j];
                    }
                }
                if (px->requires_grad) {
                    // dxhat = g * gamma; dx = is * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
                    T s1 = T(0), s2 = T(0);
                    for (std::int64_t j = 0; j < d; ++j) {
                        const T dxh = gr[j] * pg->values[static_cast<std::size_t>(j)];
                        const T xhat = (xr[j] - mu) * is;
                        s1 += dxh;
                        s2 += dxh * xhat;
                    }
                    s1 /= static_cast<T>(d);
                    s2 /= static_cast<T>(d);
                    T* out = px->grad.data() + r * d;
                    for (std::int64_t j = 0; j < d; ++j) {
                        const T dxh = gr[j] * pg->values[static_cast<std::size_t>(j)];
                        const T xhat = (xr[j] - mu) * is;
                        out[j] += is * (dxh - s1 - xhat * s2);
                    }
                }
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// L2 normalization along one axis; vectors shorter than eps keep a fixed
// denominator so the op stays differentiable at the origin.
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x, std::int64_t axis, T eps = T(1e-12)) {
    const std::int64_t nd = x.ndim();
    if (axis < 0 || axis >= nd) throw ShapeError("l2_normalize axis out of range");
    const std::int64_t ext = x.extent(axis);
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < axis; ++d) outer *= x.extent(d);
    for (std::int64_t d = axis + 1; d < nd; ++d) inner *= x.extent(d);

    auto n = detail::make_node<T>(x.shape(), {x.node()});
    std::vector<T> norms(static_cast<std::size_t>(outer * inner));
    const T* src = x.values().data();
    T* dst = n->values.data();
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t i = 0; i < inner; ++i) {
            T ss = T(0);
            for (std::int64_t e = 0; e < ext; ++e) {
                const T v = src[(o * ext + e) * inner + i];
                ss += v * v;
            }
            const T nrm = std::max(std::sqrt(ss), eps);
            norms[static_cast<std::size_t>(o * inner + i)] = nrm;
            const T inv = T(1) / nrm;
            for (std::int64_t e = 0; e < ext; ++e) {
                dst[(o * ext + e) * inner + i] = src[(o * ext + e) * inner + i] * inv;
            }
        }
    }
    OpCounter::add(static_cast<std::uint64_t>(4 * x.numel()));
    if (n->requires_grad) {
        auto px = x.node();
        n->backward_fn = [px, outer, inner, ext, eps, norms = std::move(norms)](TensorNode<T>& self) {
            px->ensure_grad();
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::int64_t i = 0; i < inner; ++i) {
                    const T nrm = norms[static_cast<std::size_t>(o * inner + i)];
                    const T inv = T(1) / nrm;
                    T ss = T(0);
                    for (std::int64_t e = 0; e < ext; ++e) {
                        const std::int64_t at = (o * ext + e) * inner + i;
                        ss += px->values[static_cast<std::size_t>(at)] * px->values[static_cast<std::size_t>(at)];
                    }
                    const bool clamped = std::sqrt(ss) < eps;
                    T dot = T(0);
                    for (std::int64_t e = 0; e < ext; ++e) {
                        const std::int64_t at = (o * ext + e) * inner + i;
                        dot += self.grad[static_cast<std::size_t>(at)] * self.values[static_cast<std::size_t>(at)];
                    }
                    for (std::int64_t e = 0; e < ext; ++e) {
                        const std::int64_t at = (o * ext + e) * inner + i;
                        const T g = self.grad[static_cast<std::size_t>(at)];
                        const T y = self.values[static_cast<std::size_t>(at)];
                        px->grad[static_cast<std::size_t>(at)] += clamped ? g * inv : (g - y * dot) * inv;
                    }
                }
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// Row picker: x is [rows, cols], index[i] selects one column per row.
template <typename T>
Tensor<T> gather(const Tensor<T>& x, const std::vector<std::int64_t>& index) {
    if (x.ndim() != 2) throw ShapeError("gather expects a matrix");
    const std::int64_t rows = x.extent(0), cols = x.extent(1);
    if (static_cast<std::int64_t>(index.size()) != rows) {
        throw ShapeError("gather index length must equal row count");
    }
    for (auto ix : index) {
        if (ix < 0 || ix >= cols) throw UsageError("gather index out of range");
    }
    auto n = detail::make_node<T>(Shape{rows}, {x.node()});
    for (std::int64_t r = 0; r < rows; ++r) {
        n->values[static_cast<std::size_t>(r)] =
            x.values()[static_cast<std::size_t>(r * cols + index[static_cast<std::size_t>(r)])];
    }
    if (n->requires_grad) {
        auto px = x.node();
        auto idx = index;
        n->backward_fn = [px, cols, idx = std::move(idx)](TensorNode<T>& self) {
            px->ensure_grad();
            for (std::size_t r = 0; r < idx.size(); ++r) {
                px->grad[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(idx[r])] +=
                    self.grad[r];
            }
        };
    }
    return Tensor<T>(std::move(n));
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

// Seeds d(loss)/d(loss) = 1 and propagates through the recorded graph.
// Gradients accumulate into every reachable tensor with requires_grad.
template <typename T>
void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) throw UsageError("backward requires a scalar seed");
    auto root = loss.node();
    if (!root->requires_grad) return;

    // iterative post-order DFS; reversed it yields consumers before producers
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> visited;
    struct Frame {
        TensorNode<T>* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            TensorNode<T>* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode<T>* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

}  // namespace sslbench
