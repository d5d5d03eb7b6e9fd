#pragma once

// Frozen-feature pipeline: extract backbone representations with teacher
// weights, re-align them with a full-rank PCA, then normalize per dimension
// with a Yeo-Johnson power transform followed by standardization. Fitting
// happens on the labeled training rows of one experiment cell only; transform
// never touches model state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/linalg.hpp"
#include "sslbench/core/tensor.hpp"
#include "sslbench/image/image.hpp"
#include "sslbench/io/checkpoint.hpp"
#include "sslbench/io/feature_file.hpp"
#include "sslbench/nn/backbone.hpp"

namespace sslbench {

// ---------------------------------------------------------------------------
// PCA

struct PCAModel {
    std::vector<double> mean;               // d
    Mat components;                         // d x d, row i is the i-th axis
    std::vector<double> eigenvalues;        // descending
    std::vector<std::int64_t> zero_variance;  // indices of flagged directions
};

namespace featdetail {

inline void check_width(std::int64_t got, std::int64_t want, const char* what) {
    if (got != want) {
        throw ConfigError(std::string(what) + ": input width " + std::to_string(got) +
                          " does not match fitted width " + std::to_string(want));
    }
}

inline std::vector<double> column_means(const Mat& x) {
    std::vector<double> mean(static_cast<std::size_t>(x.cols), 0.0);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        for (std::int64_t j = 0; j < x.cols; ++j) mean[static_cast<std::size_t>(j)] += x(i, j);
    }
    for (auto& m : mean) m /= static_cast<double>(x.rows);
    return mean;
}

}  // namespace featdetail

inline PCAModel fit_pca(const Mat& x) {
    if (x.rows < 2) throw UsageError("fit_pca: need at least 2 samples");
    if (x.cols < 1) throw UsageError("fit_pca: need at least 1 dimension");
    const std::int64_t n = x.rows, d = x.cols;

    PCAModel model;
    model.mean = featdetail::column_means(x);

    Mat cov(d, d);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t p = 0; p < d; ++p) {
            const double cp = x(i, p) - model.mean[static_cast<std::size_t>(p)];
            for (std::int64_t q = p; q < d; ++q) {
                cov(p, q) += cp * (x(i, q) - model.mean[static_cast<std::size_t>(q)]);
            }
        }
    }
    for (std::int64_t p = 0; p < d; ++p) {
        for (std::int64_t q = p; q < d; ++q) {
            cov(p, q) /= static_cast<double>(n - 1);
            cov(q, p) = cov(p, q);
        }
    }

    SymmetricEigen eig = jacobi_eigen(cov);
    model.eigenvalues = eig.values;
    model.components = Mat(d, d);
    for (std::int64_t i = 0; i < d; ++i) {
        // column i of the eigenbasis becomes row i; sign fixed so the
        // largest-magnitude loading is positive
        std::int64_t arg = 0;
        double best = 0.0;
        for (std::int64_t k = 0; k < d; ++k) {
            const double mag = std::abs(eig.vectors(k, i));
            if (mag > best) {
                best = mag;
                arg = k;
            }
        }
        const double sign = eig.vectors(arg, i) < 0.0 ? -1.0 : 1.0;
        for (std::int64_t k = 0; k < d; ++k) model.components(i, k) = sign * eig.vectors(k, i);
    }

    const double top = model.eigenvalues.empty() ? 0.0 : std::max(model.eigenvalues.front(), 0.0);
    const double floor = 1e-12 * std::max(1.0, top);
    for (std::int64_t i = 0; i < d; ++i) {
        if (model.eigenvalues[static_cast<std::size_t>(i)] <= floor) model.zero_variance.push_back(i);
    }
    return model;
}

inline Mat pca_rotate(const PCAModel& model, const Mat& x) {
    const std::int64_t d = model.components.rows;
    featdetail::check_width(x.cols, d, "pca_rotate");
    Mat out(x.rows, d);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        for (std::int64_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < d; ++k) {
                acc += (x(i, k) - model.mean[static_cast<std::size_t>(k)]) * model.components(j, k);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

inline Mat pca_inverse_rotate(const PCAModel& model, const Mat& y) {
    const std::int64_t d = model.components.rows;
    featdetail::check_width(y.cols, d, "pca_inverse_rotate");
    Mat out(y.rows, d);
    for (std::int64_t i = 0; i < y.rows; ++i) {
        for (std::int64_t k = 0; k < d; ++k) {
            double acc = model.mean[static_cast<std::size_t>(k)];
            for (std::int64_t j = 0; j < d; ++j) acc += y(i, j) * model.components(j, k);
            out(i, k) = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Yeo-Johnson power transform + standardization

inline double yeo_johnson(double x, double lambda) {
    if (x >= 0.0) {
        if (std::abs(lambda) < 1e-12) return std::log1p(x);
        return std::expm1(lambda * std::log1p(x)) / lambda;
    }
    const double two_minus = 2.0 - lambda;
    if (std::abs(two_minus) < 1e-12) return -std::log1p(-x);
    return -std::expm1(two_minus * std::log1p(-x)) / two_minus;
}

// Profile Gaussian log-likelihood of a Yeo-Johnson-transformed column, with
// the location/scale parameters maximized out analytically.
inline double yeo_johnson_log_likelihood(const std::vector<double>& col, double lambda) {
    const double n = static_cast<double>(col.size());
    double sum = 0.0, sumsq = 0.0, jac = 0.0;
    for (double x : col) {
        const double t = yeo_johnson(x, lambda);
        if (!std::isfinite(t)) return -std::numeric_limits<double>::infinity();
        sum += t;
        sumsq += t * t;
        jac += x >= 0.0 ? std::log1p(x) : -std::log1p(-x);
    }
    const double mean = sum / n;
    double var = sumsq / n - mean * mean;
    if (!(var > 0.0)) var = std::numeric_limits<double>::min();
    const double ll = -0.5 * n * std::log(var) + (lambda - 1.0) * jac;
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

// Golden-section maximization on [lo, hi] to the given interval tolerance.
template <typename F>
double golden_section_max(F&& f, double lo, double hi, double tol) {
    if (!(hi > lo) || !(tol > 0.0)) throw UsageError("golden_section_max: bad interval");
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct PowerTransformModel {
    std::vector<double> lambda;              // d
    std::vector<double> mean;                // post-transform, d
    std::vector<double> stddev;              // post-transform, d, always > 0
    std::vector<std::int64_t> constant_dims;  // flagged at fit time
};

inline PowerTransformModel fit_power_transform(const Mat& x) {
    if (x.rows < 2) throw UsageError("fit_power_transform: need at least 2 samples");
    const std::int64_t n = x.rows, d = x.cols;
    PowerTransformModel model;
    model.lambda.assign(static_cast<std::size_t>(d), 1.0);
    model.mean.assign(static_cast<std::size_t>(d), 0.0);
    model.stddev.assign(static_cast<std::size_t>(d), 1.0);

    std::vector<double> col(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < d; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::int64_t i = 0; i < n; ++i) {
            col[static_cast<std::size_t>(i)] = x(i, j);
            lo = std::min(lo, x(i, j));
            hi = std::max(hi, x(i, j));
        }
        if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) {
            model.lambda[static_cast<std::size_t>(j)] = 1.0;
            model.mean[static_cast<std::size_t>(j)] =
                std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
            model.stddev[static_cast<std::size_t>(j)] = 1.0;
            model.constant_dims.push_back(j);
            continue;
        }

        const double lam = golden_section_max(
            [&](double l) { return yeo_johnson_log_likelihood(col, l); }, -5.0, 5.0, 1e-4);
        double sum = 0.0, sumsq = 0.0;
        for (double v : col) {
            const double t = yeo_johnson(v, lam);
            sum += t;
            sumsq += t * t;
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(sumsq / static_cast<double>(n) - mean * mean, 0.0);
        const double sd = std::sqrt(var);
        if (!(sd > 1e-150)) {
            model.lambda[static_cast<std::size_t>(j)] = 1.0;
            model.mean[static_cast<std::size_t>(j)] =
                std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
            model.stddev[static_cast<std::size_t>(j)] = 1.0;
            model.constant_dims.push_back(j);
            continue;
        }
        model.lambda[static_cast<std::size_t>(j)] = lam;
        model.mean[static_cast<std::size_t>(j)] = mean;
        model.stddev[static_cast<std::size_t>(j)] = sd;
    }
    return model;
}

inline Mat power_transform(const PowerTransformModel& model, const Mat& x) {
    const auto d = static_cast<std::int64_t>(model.lambda.size());
    featdetail::check_width(x.cols, d, "power_transform");
    std::vector<bool> constant(static_cast<std::size_t>(d), false);
    for (std::int64_t j : model.constant_dims) constant[static_cast<std::size_t>(j)] = true;

    Mat out(x.rows, d);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        for (std::int64_t j = 0; j < d; ++j) {
            const auto js = static_cast<std::size_t>(j);
            const double t = yeo_johnson(x(i, j), model.lambda[js]);
            out(i, j) = constant[js] ? 0.0 : (t - model.mean[js]) / model.stddev[js];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Combined pipeline

struct FeaturePipeline {
    PCAModel pca;
    PowerTransformModel power;
};

inline FeaturePipeline fit_feature_pipeline(const Mat& x) {
    FeaturePipeline p;
    p.pca = fit_pca(x);
    p.power = fit_power_transform(pca_rotate(p.pca, x));
    return p;
}

inline Mat apply_feature_pipeline(const FeaturePipeline& p, const Mat& x) {
    return power_transform(p.power, pca_rotate(p.pca, x));
}

inline Mat to_matrix(const FeatureMatrix& fm) {
    validate_feature_matrix(fm, "to_matrix");
    Mat out(fm.n, fm.d);
    for (std::size_t i = 0; i < fm.data.size(); ++i) out.a[i] = static_cast<double>(fm.data[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Feature extraction with frozen teacher weights

// Recovers the backbone architecture from the shapes of a checkpoint's
// parameter blobs. The patch/channel split of patch.w's first extent
// (channels * patch^2) is unambiguous: k^2 = 3 m^2 has no integer solutions.
inline BackboneConfig backbone_config_from_checkpoint(const Checkpoint& ckpt,
                                                      const std::string& prefix) {
    auto need = [&](const std::string& name) -> const CheckpointBlob& {
        const CheckpointBlob* blob = ckpt.find(prefix + name);
        if (!blob) throw DataError("checkpoint is missing parameter '" + prefix + name + "'");
        return *blob;
    };
    auto is_square = [](std::int64_t v, std::int64_t& root) {
        if (v < 1) return false;
        root = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
        return root * root == v;
    };

    const CheckpointBlob& patch_w = need("patch.w");
    if (patch_w.shape.size() != 2) throw DataError("checkpoint patch.w has unexpected rank");
    BackboneConfig cfg;
    cfg.dim = patch_w.shape[1];
    std::int64_t root = 0;
    if (patch_w.shape[0] % 3 == 0 && is_square(patch_w.shape[0] / 3, root)) {
        cfg.in_channels = 3;
        cfg.patch = root;
    } else if (is_square(patch_w.shape[0], root)) {
        cfg.in_channels = 1;
        cfg.patch = root;
    } else {
        throw DataError("checkpoint patch.w extent " + std::to_string(patch_w.shape[0]) +
                        " does not factor as channels * patch^2");
    }

    const CheckpointBlob& pos = need("pos");
    if (pos.shape.size() != 2 || pos.shape[0] < 2 || !is_square(pos.shape[0] - 1, root)) {
        throw DataError("checkpoint pos table has unexpected shape");
    }
    cfg.pos_grid = root;

    const CheckpointBlob& tau = need("blk0.attn.tau");
    if (tau.shape.size() != 1) throw DataError("checkpoint tau has unexpected rank");
    cfg.heads = tau.shape[0];

    const CheckpointBlob& w1 = need("blk0.mlp.w1");
    if (w1.shape.size() != 2 || w1.shape[0] != cfg.dim) {
        throw DataError("checkpoint mlp.w1 has unexpected shape");
    }
    cfg.mlp_ratio = static_cast<double>(w1.shape[1]) / static_cast<double>(cfg.dim);

    std::int64_t blocks = 0;
    while (ckpt.find(prefix + "blk" + std::to_string(blocks) + ".ln1.g")) ++blocks;
    if (blocks < 1) throw DataError("checkpoint contains no transformer blocks");
    cfg.blocks = blocks;

    validate_backbone_config(cfg);
    return cfg;
}

// Deterministic inference-time view: center-crop to the largest square, then
// bilinear resize to the backbone's native resolution (pos_grid * patch).
inline Image center_crop_resize(const Image& src, int out_size) {
    validate_source_image(src, "center_crop_resize");
    const int side = std::min(src.height, src.width);
    const int y0 = (src.height - side) / 2;
    const int x0 = (src.width - side) / 2;
    return crop_resize(src, y0, x0, side, side, out_size, out_size);
}

template <typename T = float>
FeatureMatrix extract_features(const Checkpoint& ckpt, const std::vector<Image>& images,
                               const std::vector<std::string>& ids,
                               const std::vector<int>& labels, std::int64_t batch_size = 32) {
    if (images.size() != ids.size() || images.size() != labels.size()) {
        throw UsageError("extract_features: images, ids, and labels must align");
    }
    if (images.empty()) throw DataError("extract_features: empty image set");
    if (batch_size < 1) throw UsageError("extract_features: batch size must be positive");
    {
        std::unordered_set<std::string> seen;
        for (const auto& id : ids) {
            if (!seen.insert(id).second) {
                throw DataError("extract_features: duplicate sample id '" + id + "'");
            }
        }
    }

    const BackboneConfig cfg = backbone_config_from_checkpoint(ckpt, "teacher.");
    ParameterSet<T> params = make_backbone_params<T>(cfg, 0);
    load_params_from_checkpoint(ckpt, "teacher.", params);
    const int resolution = static_cast<int>(cfg.pos_grid * cfg.patch);

    FeatureMatrix fm;
    fm.n = static_cast<std::int64_t>(images.size());
    fm.d = cfg.dim;
    fm.data.resize(static_cast<std::size_t>(fm.n * fm.d));
    fm.ids = ids;
    fm.labels = labels;

    NoGradGuard guard;
    std::vector<Image> batch;
    for (std::int64_t start = 0; start < fm.n; start += batch_size) {
        const std::int64_t stop = std::min(fm.n, start + batch_size);
        batch.clear();
        for (std::int64_t i = start; i < stop; ++i) {
            const Image& img = images[static_cast<std::size_t>(i)];
            if (img.channels != cfg.in_channels) {
                throw ConfigError("extract_features: image '" + ids[static_cast<std::size_t>(i)] +
                                  "' has " + std::to_string(img.channels) +
                                  " channels, backbone expects " + std::to_string(cfg.in_channels));
            }
            batch.push_back(center_crop_resize(img, resolution));
        }
        Tensor<T> out = forward_backbone(batch, params, cfg);
        const auto& vals = out.values();
        for (std::int64_t i = start; i < stop; ++i) {
            for (std::int64_t j = 0; j < fm.d; ++j) {
                const double v = static_cast<double>(vals[static_cast<std::size_t>(
                    (i - start) * fm.d + j)]);
                if (!std::isfinite(v)) {
                    throw NumericError("extract_features: non-finite feature for sample '" +
                                       ids[static_cast<std::size_t>(i)] + "'");
                }
                fm.data[static_cast<std::size_t>(i * fm.d + j)] = static_cast<float>(v);
            }
        }
    }
    return fm;
}

}  // namespace sslbench
