#pragma once

// K-nearest-neighbor voting with inverse-distance weights. Votes come from
// every training point whose distance does not exceed the K-th smallest, so
// boundary ties never depend on storage order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sslbench/classify/common.hpp"
#include "sslbench/core/errors.hpp"
#include "sslbench/core/linalg.hpp"

namespace sslbench {

struct KNNModel {
    Mat x;
    std::vector<int> y;
    int k = 10;
    int num_classes = 0;
};

inline KNNModel fit_knn(const LabeledSet& train, int k = 10) {
    if (k < 1) throw ConfigError("fit_knn: K must be positive");
    KNNModel model;
    model.num_classes = validate_labeled_set(train, "fit_knn");
    model.x = train.x;
    model.y = train.y;
    model.k = k;
    return model;
}

inline int knn_predict(const KNNModel& model, const double* q, std::int64_t d) {
    if (model.x.rows < 1) throw UsageError("knn_predict: empty model");
    if (d != model.x.cols) throw UsageError("knn_predict: query width mismatch");
    const std::int64_t n = model.x.rows;
    const auto k = static_cast<std::int64_t>(std::min<std::int64_t>(model.k, n));

    std::vector<double> dist(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = &model.x.a[static_cast<std::size_t>(i * d)];
        for (std::int64_t j = 0; j < d; ++j) {
            const double diff = row[j] - q[j];
            acc += diff * diff;
        }
        dist[static_cast<std::size_t>(i)] = std::sqrt(acc);
    }

    std::vector<double> sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const double radius = sorted[static_cast<std::size_t>(k - 1)];

    std::vector<double> votes(static_cast<std::size_t>(model.num_classes), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        const double di = dist[static_cast<std::size_t>(i)];
        if (di <= radius) {
            votes[static_cast<std::size_t>(model.y[static_cast<std::size_t>(i)])] +=
                1.0 / (di + 1e-12);
        }
    }
    int best = 0;
    for (int c = 1; c < model.num_classes; ++c) {
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

inline std::vector<int> knn_predict(const KNNModel& model, const Mat& x) {
    std::vector<int> out(static_cast<std::size_t>(x.rows));
    for (std::int64_t i = 0; i < x.rows; ++i) {
        out[static_cast<std::size_t>(i)] =
            knn_predict(model, &x.a[static_cast<std::size_t>(i * x.cols)], x.cols);
    }
    return out;
}

}  // namespace sslbench
