#pragma once

// Shared classifier plumbing: labeled feature sets and inverse-frequency
// class weights.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/linalg.hpp"

namespace sslbench {

struct LabeledSet {
    Mat x;
    std::vector<int> y;  // labels in [0, num_classes)
};

inline int num_classes_of(const std::vector<int>& y) {
    int c = 0;
    for (int v : y) c = std::max(c, v + 1);
    return c;
}

// Every class in [0, C) must be present; labels align with rows.
inline int validate_labeled_set(const LabeledSet& set, const char* what) {
    if (set.x.rows < 1) throw UsageError(std::string(what) + ": empty training set");
    if (set.x.cols < 1) throw UsageError(std::string(what) + ": features must have width >= 1");
    if (static_cast<std::int64_t>(set.y.size()) != set.x.rows) {
        throw UsageError(std::string(what) + ": labels must align with feature rows");
    }
    const int c = num_classes_of(set.y);
    if (c < 1) throw UsageError(std::string(what) + ": no classes");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(c), 0);
    for (int v : set.y) {
        if (v < 0) throw UsageError(std::string(what) + ": negative label");
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int k = 0; k < c; ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0) {
            throw UsageError(std::string(what) + ": class " + std::to_string(k) +
                             " has no samples");
        }
    }
    return c;
}

// weight_c = n_total / (C * n_c), so rare classes count for more.
inline std::vector<double> class_weights(const std::vector<int>& y, int num_classes) {
    if (num_classes < 1) throw UsageError("class_weights: need at least one class");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (int v : y) {
        if (v < 0 || v >= num_classes) throw UsageError("class_weights: label out of range");
        ++counts[static_cast<std::size_t>(v)];
    }
    std::vector<double> w(static_cast<std::size_t>(num_classes), 0.0);
    for (int c = 0; c < num_classes; ++c) {
        const auto n_c = counts[static_cast<std::size_t>(c)];
        if (n_c == 0) throw UsageError("class_weights: class " + std::to_string(c) + " is empty");
        w[static_cast<std::size_t>(c)] = static_cast<double>(y.size()) /
                                         (static_cast<double>(num_classes) * static_cast<double>(n_c));
    }
    return w;
}

inline std::vector<double> uniform_class_weights(int num_classes) {
    return std::vector<double>(static_cast<std::size_t>(num_classes), 1.0);
}

}  // namespace sslbench
