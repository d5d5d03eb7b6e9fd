#pragma once

// One-vs-rest RBF-kernel SVMs solved by SMO on the dual with per-sample box
// constraints C * class_weight(y_i). Pair selection follows the maximal-KKT-
// violation rule; convergence is declared when the violation drops below tol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sslbench/classify/common.hpp"
#include "sslbench/core/errors.hpp"
#include "sslbench/core/linalg.hpp"

namespace sslbench {

struct SvmConfig {
    double c = 1.0;
    double gamma = 0.0;  // <= 0 selects "scale": 1 / (d * var(X))
    double tol = 1e-3;   // maximal KKT violation at convergence
    std::int64_t max_pair_steps = 200000;  // per binary problem
};

struct SvmBinary {
    std::vector<double> alpha_y;  // alpha_i * y_i for retained support vectors
    std::vector<std::int64_t> support;  // row indices into the shared matrix
    double bias = 0.0;
    bool converged = true;
    double final_violation = 0.0;
};

struct SVMModel {
    Mat support_x;  // deduplicated support vectors across binary problems
    std::vector<SvmBinary> binaries;  // one per class, indices into support_x
    double gamma = 1.0;
    double c = 1.0;
    int num_classes = 0;
};

namespace svmdetail {

inline double rbf(const double* a, const double* b, std::int64_t d, double gamma) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < d; ++k) {
        const double diff = a[k] - b[k];
        acc += diff * diff;
    }
    return std::exp(-gamma * acc);
}

inline double scale_gamma(const Mat& x) {
    double mean = 0.0;
    for (double v : x.a) mean += v;
    mean /= static_cast<double>(x.a.size());
    double var = 0.0;
    for (double v : x.a) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.a.size());
    if (!(var > 0.0)) var = 1.0;
    return 1.0 / (static_cast<double>(x.cols) * var);
}

// Binary SMO over the precomputed kernel matrix. y in {-1, +1}, per-sample
// upper bounds box[i]. Maintains F_i = sum_j alpha_j y_j K_ij - y_i.
inline SvmBinary smo_binary(const Mat& kernel, const std::vector<double>& y,
                            const std::vector<double>& box, double tol,
                            std::int64_t max_pair_steps) {
    const std::int64_t n = kernel.rows;
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<double> f(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = -y[static_cast<std::size_t>(i)];

    auto bound_eps = [&](std::size_t s) { return 1e-12 * std::max(1.0, box[s]); };
    auto in_up = [&](std::int64_t i) {
        const auto s = static_cast<std::size_t>(i);
        return (y[s] > 0.0 && alpha[s] < box[s] - bound_eps(s)) ||
               (y[s] < 0.0 && alpha[s] > bound_eps(s));
    };
    auto in_low = [&](std::int64_t i) {
        const auto s = static_cast<std::size_t>(i);
        return (y[s] > 0.0 && alpha[s] > bound_eps(s)) ||
               (y[s] < 0.0 && alpha[s] < box[s] - bound_eps(s));
    };

    SvmBinary out;
    double violation = std::numeric_limits<double>::infinity();
    std::int64_t step = 0;
    for (; step < max_pair_steps; ++step) {
        // i: smallest F among the raisable set, j: largest F among lowerable
        std::int64_t i = -1, j = -1;
        double f_up = std::numeric_limits<double>::infinity();
        double f_low = -std::numeric_limits<double>::infinity();
        for (std::int64_t t = 0; t < n; ++t) {
            const double ft = f[static_cast<std::size_t>(t)];
            if (in_up(t) && ft < f_up) {
                f_up = ft;
                i = t;
            }
            if (in_low(t) && ft > f_low) {
                f_low = ft;
                j = t;
            }
        }
        violation = f_low - f_up;
        if (i < 0 || j < 0 || violation < tol) break;

        const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
        const double yi = y[si], yj = y[sj];
        double eta = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
        if (eta < 1e-12) eta = 1e-12;

        // clip window for alpha_j keeping the equality constraint
        double lo, hi;
        if (yi != yj) {
            lo = std::max(0.0, alpha[sj] - alpha[si]);
            hi = std::min(box[sj], box[si] + alpha[sj] - alpha[si]);
        } else {
            lo = std::max(0.0, alpha[si] + alpha[sj] - box[si]);
            hi = std::min(box[sj], alpha[si] + alpha[sj]);
        }
        double aj = alpha[sj] + yj * (f[si] - f[sj]) / eta;
        aj = std::min(hi, std::max(lo, aj));
        const double ai = alpha[si] + yi * yj * (alpha[sj] - aj);

        const double di = yi * (ai - alpha[si]);
        const double dj = yj * (aj - alpha[sj]);
        if (std::abs(di) < 1e-18 && std::abs(dj) < 1e-18) break;  // numerically stuck
        for (std::int64_t t = 0; t < n; ++t) {
            f[static_cast<std::size_t>(t)] += di * kernel(i, t) + dj * kernel(j, t);
        }
        alpha[si] = ai;
        alpha[sj] = aj;
    }
    out.converged = violation < tol;
    out.final_violation = std::max(violation, 0.0);

    // bias from free support vectors, else the violation midpoint
    double bias_acc = 0.0;
    std::int64_t free_count = 0;
    for (std::int64_t t = 0; t < n; ++t) {
        const auto s = static_cast<std::size_t>(t);
        if (alpha[s] > 1e-12 && alpha[s] < box[s] - 1e-12) {
            bias_acc += -f[s];
            ++free_count;
        }
    }
    if (free_count > 0) {
        out.bias = bias_acc / static_cast<double>(free_count);
    } else {
        double f_up = std::numeric_limits<double>::infinity();
        double f_low = -std::numeric_limits<double>::infinity();
        for (std::int64_t t = 0; t < n; ++t) {
            if (in_up(t)) f_up = std::min(f_up, f[static_cast<std::size_t>(t)]);
            if (in_low(t)) f_low = std::max(f_low, f[static_cast<std::size_t>(t)]);
        }
        if (std::isfinite(f_up) && std::isfinite(f_low)) {
            out.bias = -(f_up + f_low) / 2.0;
        }
    }

    for (std::int64_t t = 0; t < n; ++t) {
        const auto s = static_cast<std::size_t>(t);
        if (alpha[s] > 1e-12) {
            out.support.push_back(t);
            out.alpha_y.push_back(alpha[s] * y[s]);
        }
    }
    return out;
}

}  // namespace svmdetail

inline SVMModel fit_svm_rbf(const LabeledSet& train, const SvmConfig& cfg,
                            const std::vector<double>& weights) {
    const int classes = validate_labeled_set(train, "fit_svm_rbf");
    if (classes < 2) throw UsageError("fit_svm_rbf: need at least 2 classes");
    if (static_cast<int>(weights.size()) != classes) {
        throw UsageError("fit_svm_rbf: class weight vector must have one entry per class");
    }
    if (!(cfg.c > 0.0) || !(cfg.tol > 0.0)) throw ConfigError("fit_svm_rbf: C and tol must be positive");
    for (double w : weights) {
        if (!(w > 0.0)) throw ConfigError("fit_svm_rbf: class weights must be positive");
    }

    const std::int64_t n = train.x.rows;
    SVMModel model;
    model.num_classes = classes;
    model.c = cfg.c;
    model.gamma = cfg.gamma > 0.0 ? cfg.gamma : svmdetail::scale_gamma(train.x);

    Mat kernel(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        kernel(i, i) = 1.0;
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double k = svmdetail::rbf(&train.x.a[static_cast<std::size_t>(i * train.x.cols)],
                                            &train.x.a[static_cast<std::size_t>(j * train.x.cols)],
                                            train.x.cols, model.gamma);
            kernel(i, j) = k;
            kernel(j, i) = k;
        }
    }

    std::vector<double> box(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        box[static_cast<std::size_t>(i)] =
            cfg.c * weights[static_cast<std::size_t>(train.y[static_cast<std::size_t>(i)])];
    }

    std::vector<bool> used(static_cast<std::size_t>(n), false);
    std::vector<double> ylab(static_cast<std::size_t>(n));
    for (int c = 0; c < classes; ++c) {
        for (std::int64_t i = 0; i < n; ++i) {
            ylab[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
        }
        SvmBinary bin = svmdetail::smo_binary(kernel, ylab, box, cfg.tol, cfg.max_pair_steps);
        for (std::int64_t idx : bin.support) used[static_cast<std::size_t>(idx)] = true;
        model.binaries.push_back(std::move(bin));
    }

    // compact the shared support matrix and remap indices
    std::vector<std::int64_t> remap(static_cast<std::size_t>(n), -1);
    std::int64_t kept = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (used[static_cast<std::size_t>(i)]) remap[static_cast<std::size_t>(i)] = kept++;
    }
    model.support_x = Mat(kept, train.x.cols);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t r = remap[static_cast<std::size_t>(i)];
        if (r < 0) continue;
        for (std::int64_t k = 0; k < train.x.cols; ++k) model.support_x(r, k) = train.x(i, k);
    }
    for (auto& bin : model.binaries) {
        for (auto& idx : bin.support) idx = remap[static_cast<std::size_t>(idx)];
    }
    return model;
}

inline SVMModel fit_svm_rbf(const LabeledSet& train, const SvmConfig& cfg = {}) {
    return fit_svm_rbf(train, cfg, class_weights(train.y, num_classes_of(train.y)));
}

// One-vs-rest margin of class c at a query row.
inline double svm_margin(const SVMModel& model, int c, const double* q, std::int64_t d) {
    if (d != model.support_x.cols) throw UsageError("svm_margin: query width mismatch");
    const auto& bin = model.binaries[static_cast<std::size_t>(c)];
    double acc = bin.bias;
    for (std::size_t s = 0; s < bin.support.size(); ++s) {
        const auto row = static_cast<std::size_t>(bin.support[s]);
        acc += bin.alpha_y[s] *
               svmdetail::rbf(&model.support_x.a[row * static_cast<std::size_t>(d)], q, d,
                              model.gamma);
    }
    return acc;
}

inline int svm_predict(const SVMModel& model, const double* q, std::int64_t d) {
    int best = 0;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.num_classes; ++c) {
        const double m = svm_margin(model, c, q, d);
        if (m > best_margin) {
            best_margin = m;
            best = c;
        }
    }
    return best;
}

inline std::vector<int> svm_predict(const SVMModel& model, const Mat& x) {
    std::vector<int> out(static_cast<std::size_t>(x.rows));
    for (std::int64_t i = 0; i < x.rows; ++i) {
        out[static_cast<std::size_t>(i)] =
            svm_predict(model, &x.a[static_cast<std::size_t>(i * x.cols)], x.cols);
    }
    return out;
}

}  // namespace sslbench
