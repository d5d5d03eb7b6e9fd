#pragma once

// Named parameter collection. Iteration order is the sorted name order,
// which pins checkpoint layout and optimizer update order.

#include <map>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/tensor.hpp"

namespace sslbench {

template <typename T>
class ParameterSet {
public:
    Tensor<T>& add(const std::string& name, Tensor<T> t) {
        auto [it, inserted] = params_.emplace(name, std::move(t));
        if (!inserted) throw UsageError("duplicate parameter name: " + name);
        it->second.set_requires_grad(true);
        return it->second;
    }

    Tensor<T>& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }

    const Tensor<T>& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    std::size_t size() const { return params_.size(); }

    void zero_grad() {
        for (auto& [name, t] : params_) t.zero_grad();
    }

    std::int64_t total_count() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : params_) n += t.numel();
        return n;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(params_.size());
        for (const auto& [name, t] : params_) out.push_back(name);
        return out;
    }

private:
    std::map<std::string, Tensor<T>> params_;
};

}  // namespace sslbench
