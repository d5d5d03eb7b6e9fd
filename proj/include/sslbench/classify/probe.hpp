#pragma once

// Linear probe on a frozen backbone and the unfrozen supervised baseline.
// Both train a single FC layer with class-weighted cross-entropy and Adam on
// augmented global crops; the baseline additionally backpropagates into every
// backbone parameter. Early stopping compares validation accuracy against the
// best epoch so far.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sslbench/classify/common.hpp"
#include "sslbench/core/errors.hpp"
#include "sslbench/core/optim.hpp"
#include "sslbench/core/rng.hpp"
#include "sslbench/core/tensor.hpp"
#include "sslbench/features/pipeline.hpp"
#include "sslbench/image/augment.hpp"
#include "sslbench/io/checkpoint.hpp"
#include "sslbench/nn/backbone.hpp"

namespace sslbench {

struct ProbeConfig {
    AugmentPolicy augment;
    double lr = 1e-3;
    std::int64_t batch_size = 32;
    std::int64_t max_epochs = 200;
    double val_fraction = 0.30;
    double min_rel_improvement = 0.005;
    std::uint64_t seed = 1;
};

struct ProbeModel {
    BackboneConfig arch;
    ParameterSet<float> backbone;
    std::vector<float> fc_w;  // d x C row-major
    std::vector<float> fc_b;  // C
    int num_classes = 0;
    int input_size = 0;       // evaluation resolution (the training crop size)
    bool backbone_trained = false;
    std::int64_t epochs = 0;
    double best_val_accuracy = 0.0;
    std::vector<std::string> warnings;
};

namespace probedetail {

struct Split {
    std::vector<std::int64_t> train_idx;
    std::vector<std::int64_t> val_idx;
    std::vector<std::string> warnings;
};

// Per-class shuffle, then roughly val_fraction of each class goes to the
// validation side; a class always keeps at least one training sample, and a
// singleton class contributes no validation sample at all.
inline Split stratified_split(const std::vector<int>& labels, int classes, double val_fraction,
                              std::uint64_t seed) {
    Split out;
    for (int c = 0; c < classes; ++c) {
        std::vector<std::int64_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) idx.push_back(static_cast<std::int64_t>(i));
        }
        if (idx.empty()) continue;
        if (idx.size() == 1) {
            out.train_idx.push_back(idx[0]);
            out.warnings.push_back("class " + std::to_string(c) +
                                   " has a single sample; kept on the training side");
            continue;
        }
        Rng rng(derive_seed(seed, "probe-split", static_cast<std::uint64_t>(c)));
        rng.shuffle(idx);
        auto n_val = static_cast<std::int64_t>(
            std::llround(val_fraction * static_cast<double>(idx.size())));
        n_val = std::max<std::int64_t>(1, std::min<std::int64_t>(
                                              n_val, static_cast<std::int64_t>(idx.size()) - 1));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (static_cast<std::int64_t>(i) < n_val) {
                out.val_idx.push_back(idx[i]);
            } else {
                out.train_idx.push_back(idx[i]);
            }
        }
    }
    std::sort(out.train_idx.begin(), out.train_idx.end());
    std::sort(out.val_idx.begin(), out.val_idx.end());
    return out;
}

inline Image probe_train_view(const Image& img, const AugmentPolicy& p, Rng& rng) {
    const auto rect = augdetail::sample_crop(img.height, img.width, p.global_area_min,
                                             p.global_area_max, p.aspect_min, p.aspect_max,
                                             true, rng);
    Image view = crop_resize(img, rect.y0, rect.x0, rect.h, rect.w, p.global_size, p.global_size);
    return augment(view, p, rng, ViewRole{true, 0});
}

// Deterministic evaluation views plus FC readout; returns plain accuracy.
inline double fc_accuracy(const ParameterSet<float>& backbone, const BackboneConfig& arch,
                          const Tensor<float>& w, const Tensor<float>& b,
                          const std::vector<Image>& images, const std::vector<int>& labels,
                          const std::vector<std::int64_t>& idx, int input_size) {
    if (idx.empty()) return 0.0;
    NoGradGuard guard;
    std::int64_t hits = 0;
    const std::int64_t eval_batch = 64;
    std::vector<Image> views;
    for (std::int64_t start = 0; start < static_cast<std::int64_t>(idx.size());
         start += eval_batch) {
        const auto stop =
            std::min<std::int64_t>(static_cast<std::int64_t>(idx.size()), start + eval_batch);
        views.clear();
        for (std::int64_t i = start; i < stop; ++i) {
            views.push_back(
                center_crop_resize(images[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])],
                                   input_size));
        }
        const auto feats = forward_backbone(views, backbone, arch);
        const auto logits = add(matmul(feats, w), b);
        const auto& v = logits.values();
        const std::int64_t c = logits.shape()[1];
        for (std::int64_t i = start; i < stop; ++i) {
            const std::int64_t row = i - start;
            int best = 0;
            for (std::int64_t k = 1; k < c; ++k) {
                if (v[static_cast<std::size_t>(row * c + k)] >
                    v[static_cast<std::size_t>(row * c + best)]) {
                    best = static_cast<int>(k);
                }
            }
            if (best == labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

inline ProbeModel fit_fc(const BackboneConfig& arch, ParameterSet<float>&& backbone_params,
                         bool freeze_backbone, const std::vector<Image>& images,
                         const std::vector<int>& labels, const ProbeConfig& cfg) {
    validate_policy(cfg.augment);
    if (images.empty()) throw DataError("probe: empty training set");
    if (images.size() != labels.size()) throw UsageError("probe: labels must align with images");
    const int classes = num_classes_of(labels);
    if (classes < 2) throw UsageError("probe: need at least 2 classes");
    {
        std::vector<std::int64_t> counts(static_cast<std::size_t>(classes), 0);
        for (int v : labels) {
            if (v < 0) throw UsageError("probe: negative label");
            ++counts[static_cast<std::size_t>(v)];
        }
        for (int c = 0; c < classes; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                throw UsageError("probe: class " + std::to_string(c) + " has no samples");
            }
        }
    }
    if (cfg.lr < 0.0 || cfg.batch_size < 1 || cfg.max_epochs < 1) {
        throw ConfigError("probe: lr must be >= 0, batch size and epoch budget positive");
    }
    if (!(cfg.val_fraction > 0.0) || !(cfg.val_fraction < 1.0)) {
        throw ConfigError("probe: validation fraction must lie in (0, 1)");
    }

    ProbeModel model;
    model.arch = arch;
    model.backbone = std::move(backbone_params);
    model.num_classes = classes;
    model.input_size = cfg.augment.global_size;
    model.backbone_trained = !freeze_backbone;

    auto split = stratified_split(labels, classes, cfg.val_fraction, cfg.seed);
    model.warnings = split.warnings;
    const bool val_on_train = split.val_idx.empty();
    if (val_on_train) {
        split.val_idx = split.train_idx;
        model.warnings.push_back("validation split is empty; early stopping uses training views");
    }

    std::vector<int> train_labels;
    for (auto i : split.train_idx) train_labels.push_back(labels[static_cast<std::size_t>(i)]);
    const std::vector<double> weights = class_weights(train_labels, classes);

    Rng init_rng(derive_seed(cfg.seed, "probe-fc-init"));
    ParameterSet<float> trainable;
    Tensor<float>& fc_w = trainable.add(
        "fc.w", Tensor<float>::truncated_normal({arch.dim, classes}, init_rng, 0.02f));
    Tensor<float>& fc_b = trainable.add("fc.b", Tensor<float>::zeros({classes}));
    if (!freeze_backbone) {
        for (auto& [name, t] : model.backbone) trainable.add(name, t);
    }
    auto opt = OptimizerState<float>::adam(static_cast<float>(cfg.lr));

    const auto n_train = static_cast<std::int64_t>(split.train_idx.size());
    double best_acc = -1.0;
    for (std::int64_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::vector<std::int64_t> order = split.train_idx;
        Rng shuffle_rng(derive_seed(cfg.seed, "probe-shuffle", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        for (std::int64_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::int64_t stop = std::min(n_train, start + cfg.batch_size);
            const std::int64_t rows = stop - start;
            std::vector<Image> views;
            std::vector<float> pick(static_cast<std::size_t>(rows * classes), 0.0f);
            for (std::int64_t p = 0; p < rows; ++p) {
                const auto idx = order[static_cast<std::size_t>(start + p)];
                Rng aug_rng(derive_seed(cfg.seed, "probe-aug", static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(p),
                                        static_cast<std::uint64_t>(idx)));
                views.push_back(
                    probe_train_view(images[static_cast<std::size_t>(idx)], cfg.augment, aug_rng));
                const int y = labels[static_cast<std::size_t>(idx)];
                pick[static_cast<std::size_t>(p * classes + y)] =
                    static_cast<float>(weights[static_cast<std::size_t>(y)] /
                                       static_cast<double>(rows));
            }

            Tensor<float> feats;
            if (freeze_backbone) {
                NoGradGuard guard;
                feats = forward_backbone(views, model.backbone, arch);
            } else {
                feats = forward_backbone(views, model.backbone, arch);
            }
            const auto logits = add(matmul(feats, fc_w), fc_b);
            const auto probs = softmax_t(logits, 1.0f);
            const auto pick_t =
                Tensor<float>::from({rows, classes}, std::move(pick));
            const auto loss =
                mul_scalar(sum(mul(log(clamp_min(probs, 1e-12f)), pick_t)), -1.0f);
            if (!all_finite(loss)) throw NumericError("probe: non-finite loss");
            trainable.zero_grad();
            backward(loss);
            optimizer_step(opt, trainable);
        }

        const double acc = fc_accuracy(model.backbone, arch, fc_w, fc_b, images, labels,
                                       split.val_idx, model.input_size);
        model.epochs = epoch + 1;
        if (best_acc < 0.0) {
            best_acc = acc;
            continue;
        }
        const double rel = (acc - best_acc) / std::max(best_acc, 1e-12);
        best_acc = std::max(best_acc, acc);
        if (rel < cfg.min_rel_improvement) break;
    }
    model.best_val_accuracy = std::max(best_acc, 0.0);
    model.fc_w = fc_w.values();
    model.fc_b = fc_b.values();
    return model;
}

}  // namespace probedetail

inline ProbeModel fit_linear_probe(const Checkpoint& ckpt, const std::vector<Image>& images,
                                   const std::vector<int>& labels, const ProbeConfig& cfg) {
    const BackboneConfig arch = backbone_config_from_checkpoint(ckpt, "teacher.");
    ParameterSet<float> params = make_backbone_params<float>(arch, 0);
    load_params_from_checkpoint(ckpt, "teacher.", params);
    return probedetail::fit_fc(arch, std::move(params), true, images, labels, cfg);
}

// Warm-started unfrozen baseline: every backbone parameter receives gradients.
inline ProbeModel fit_dl_baseline(const Checkpoint& init, const std::vector<Image>& images,
                                  const std::vector<int>& labels, const ProbeConfig& cfg) {
    const BackboneConfig arch = backbone_config_from_checkpoint(init, "teacher.");
    ParameterSet<float> params = make_backbone_params<float>(arch, 0);
    load_params_from_checkpoint(init, "teacher.", params);
    return probedetail::fit_fc(arch, std::move(params), false, images, labels, cfg);
}

// Randomly initialized unfrozen baseline, the supervised-from-scratch reference.
inline ProbeModel fit_dl_baseline(const BackboneConfig& arch, const std::vector<Image>& images,
                                  const std::vector<int>& labels, const ProbeConfig& cfg) {
    validate_backbone_config(arch);
    ParameterSet<float> params =
        make_backbone_params<float>(arch, derive_seed(cfg.seed, "baseline-init"));
    return probedetail::fit_fc(arch, std::move(params), false, images, labels, cfg);
}

inline std::vector<int> probe_predict(const ProbeModel& model, const std::vector<Image>& images) {
    if (images.empty()) return {};
    NoGradGuard guard;
    const auto w = Tensor<float>::from({model.arch.dim, model.num_classes},
                                       std::vector<float>(model.fc_w));
    const auto b = Tensor<float>::from({model.num_classes}, std::vector<float>(model.fc_b));
    std::vector<int> out;
    const std::int64_t eval_batch = 64;
    std::vector<Image> views;
    for (std::size_t start = 0; start < images.size(); start += eval_batch) {
        const std::size_t stop = std::min(images.size(), start + static_cast<std::size_t>(eval_batch));
        views.clear();
        for (std::size_t i = start; i < stop; ++i) {
            views.push_back(center_crop_resize(images[i], model.input_size));
        }
        const auto logits = add(matmul(forward_backbone(views, model.backbone, model.arch), w), b);
        const auto& v = logits.values();
        for (std::size_t row = 0; row < stop - start; ++row) {
            int best = 0;
            for (int k = 1; k < model.num_classes; ++k) {
                if (v[row * static_cast<std::size_t>(model.num_classes) + static_cast<std::size_t>(k)] >
                    v[row * static_cast<std::size_t>(model.num_classes) +
                      static_cast<std::size_t>(best)]) {
                    best = k;
                }
            }
            out.push_back(best);
        }
    }
    return out;
}

}  // namespace sslbench
