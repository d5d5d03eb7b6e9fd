#pragma once

// Multinomial logistic regression: class-weighted cross-entropy plus an L2
// penalty on the weight matrix, minimized with L-BFGS and Armijo backtracking
// until the gradient norm falls below tolerance. Bias stays unregularized.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "sslbench/classify/common.hpp"
#include "sslbench/core/errors.hpp"
#include "sslbench/core/linalg.hpp"

namespace sslbench {

struct LogRegConfig {
    double l2 = 1.0;
    double grad_tol = 1e-6;
    std::int64_t max_iters = 500;
    int lbfgs_memory = 10;
};

struct LRModel {
    Mat w;                  // d x C
    std::vector<double> b;  // C
    int num_classes = 0;
    bool converged = true;
    double final_grad_norm = 0.0;
    double final_loss = 0.0;
};

namespace lrdetail {

// joint parameter vector: W row-major then b
struct Objective {
    const Mat& x;
    const std::vector<int>& y;
    const std::vector<double>& sample_w;  // per-sample class weight
    double l2;
    int classes;

    std::int64_t dim() const { return x.cols * classes + classes; }

    // mean weighted CE + (l2 / (2n)) ||W||^2, gradient written to grad
    double eval(const std::vector<double>& theta, std::vector<double>& grad) const {
        const std::int64_t n = x.rows, d = x.cols, c = classes;
        const double* w = theta.data();
        const double* b = theta.data() + d * c;
        grad.assign(theta.size(), 0.0);
        double* gw = grad.data();
        double* gb = grad.data() + d * c;

        double loss = 0.0;
        std::vector<double> logits(static_cast<std::size_t>(c));
        for (std::int64_t i = 0; i < n; ++i) {
            const double* xi = &x.a[static_cast<std::size_t>(i * d)];
            for (std::int64_t k = 0; k < c; ++k) {
                double acc = b[k];
                for (std::int64_t j = 0; j < d; ++j) acc += xi[j] * w[j * c + k];
                logits[static_cast<std::size_t>(k)] = acc;
            }
            const double peak = *std::max_element(logits.begin(), logits.end());
            double z = 0.0;
            for (auto& v : logits) {
                v = std::exp(v - peak);
                z += v;
            }
            const double wi = sample_w[static_cast<std::size_t>(i)] / static_cast<double>(n);
            const auto yi = static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
            loss -= wi * std::log(std::max(logits[yi] / z, 1e-300));
            for (std::int64_t k = 0; k < c; ++k) {
                const double p = logits[static_cast<std::size_t>(k)] / z;
                const double delta = wi * (p - (static_cast<std::size_t>(k) == yi ? 1.0 : 0.0));
                gb[k] += delta;
                for (std::int64_t j = 0; j < d; ++j) gw[j * c + k] += delta * xi[j];
            }
        }
        const double reg = l2 / static_cast<double>(n);
        for (std::int64_t t = 0; t < d * c; ++t) {
            loss += 0.5 * reg * w[t] * w[t];
            gw[t] += reg * w[t];
        }
        return loss;
    }
};

inline double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace lrdetail

inline LRModel fit_logreg(const LabeledSet& train, const LogRegConfig& cfg,
                          const std::vector<double>& weights) {
    const int classes = validate_labeled_set(train, "fit_logreg");
    if (classes < 2) throw UsageError("fit_logreg: need at least 2 classes");
    if (static_cast<int>(weights.size()) != classes) {
        throw UsageError("fit_logreg: class weight vector must have one entry per class");
    }
    if (cfg.l2 < 0.0 || !(cfg.grad_tol > 0.0)) {
        throw ConfigError("fit_logreg: l2 must be >= 0 and grad_tol > 0");
    }

    std::vector<double> sample_w(train.y.size());
    for (std::size_t i = 0; i < train.y.size(); ++i) {
        sample_w[i] = weights[static_cast<std::size_t>(train.y[i])];
    }
    const lrdetail::Objective obj{train.x, train.y, sample_w, cfg.l2, classes};

    std::vector<double> theta(static_cast<std::size_t>(obj.dim()), 0.0);
    std::vector<double> grad, grad_new, direction, theta_new;
    double loss = obj.eval(theta, grad);

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    LRModel model;
    model.converged = false;
    std::int64_t iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
        const double gnorm = lrdetail::norm2(grad);
        if (gnorm < cfg.grad_tol) {
            model.converged = true;
            break;
        }

        // two-loop recursion
        direction = grad;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t h = s_hist.size(); h-- > 0;) {
            alpha[h] = rho_hist[h] * lrdetail::dot(s_hist[h], direction);
            for (std::size_t t = 0; t < direction.size(); ++t) {
                direction[t] -= alpha[h] * y_hist[h][t];
            }
        }
        if (!s_hist.empty()) {
            const double yy = lrdetail::dot(y_hist.back(), y_hist.back());
            const double sy = lrdetail::dot(s_hist.back(), y_hist.back());
            const double scale = sy > 0.0 && yy > 0.0 ? sy / yy : 1.0;
            for (auto& v : direction) v *= scale;
        }
        for (std::size_t h = 0; h < s_hist.size(); ++h) {
            const double beta = rho_hist[h] * lrdetail::dot(y_hist[h], direction);
            for (std::size_t t = 0; t < direction.size(); ++t) {
                direction[t] += (alpha[h] - beta) * s_hist[h][t];
            }
        }
        for (auto& v : direction) v = -v;
        double descent = lrdetail::dot(direction, grad);
        if (!(descent < 0.0)) {  // fall back to steepest descent
            for (std::size_t t = 0; t < direction.size(); ++t) direction[t] = -grad[t];
            descent = -gnorm * gnorm;
        }

        // Armijo backtracking
        double step = 1.0;
        double loss_new = loss;
        bool accepted = false;
        theta_new.resize(theta.size());
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t t = 0; t < theta.size(); ++t) {
                theta_new[t] = theta[t] + step * direction[t];
            }
            loss_new = obj.eval(theta_new, grad_new);
            if (loss_new <= loss + 1e-4 * step * descent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search exhausted; keep best iterate

        std::vector<double> s(theta.size()), yv(theta.size());
        for (std::size_t t = 0; t < theta.size(); ++t) {
            s[t] = theta_new[t] - theta[t];
            yv[t] = grad_new[t] - grad[t];
        }
        const double sy = lrdetail::dot(s, yv);
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > cfg.lbfgs_memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        theta.swap(theta_new);
        grad.swap(grad_new);
        loss = loss_new;
    }

    model.final_grad_norm = lrdetail::norm2(grad);
    model.final_loss = loss;
    model.num_classes = classes;
    model.w = Mat(train.x.cols, classes);
    for (std::int64_t t = 0; t < train.x.cols * classes; ++t) {
        model.w.a[static_cast<std::size_t>(t)] = theta[static_cast<std::size_t>(t)];
    }
    model.b.assign(theta.begin() + train.x.cols * classes, theta.end());
    return model;
}

inline LRModel fit_logreg(const LabeledSet& train, const LogRegConfig& cfg = {}) {
    return fit_logreg(train, cfg, class_weights(train.y, num_classes_of(train.y)));
}

inline std::vector<double> logreg_proba(const LRModel& model, const double* q, std::int64_t d) {
    if (d != model.w.rows) throw UsageError("logreg_proba: query width mismatch");
    std::vector<double> p(static_cast<std::size_t>(model.num_classes));
    for (int k = 0; k < model.num_classes; ++k) {
        double acc = model.b[static_cast<std::size_t>(k)];
        for (std::int64_t j = 0; j < d; ++j) acc += q[j] * model.w(j, k);
        p[static_cast<std::size_t>(k)] = acc;
    }
    const double peak = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (auto& v : p) {
        v = std::exp(v - peak);
        z += v;
    }
    for (auto& v : p) v /= z;
    return p;
}

inline int logreg_predict(const LRModel& model, const double* q, std::int64_t d) {
    const auto p = logreg_proba(model, q, d);
    int best = 0;
    for (int c = 1; c < model.num_classes; ++c) {
        if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

inline std::vector<int> logreg_predict(const LRModel& model, const Mat& x) {
    std::vector<int> out(static_cast<std::size_t>(x.rows));
    for (std::int64_t i = 0; i < x.rows; ++i) {
        out[static_cast<std::size_t>(i)] =
            logreg_predict(model, &x.a[static_cast<std::size_t>(i * x.cols)], x.cols);
    }
    return out;
}

}  // namespace sslbench
