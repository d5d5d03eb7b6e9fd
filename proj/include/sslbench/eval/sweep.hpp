#ifndef SSLBENCH_EVAL_SWEEP_HPP
#define SSLBENCH_EVAL_SWEEP_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sslbench/classify/knn.hpp"
#include "sslbench/classify/logreg.hpp"
#include "sslbench/classify/probe.hpp"
#include "sslbench/classify/svm.hpp"
#include "sslbench/core/errors.hpp"
#include "sslbench/core/rng.hpp"
#include "sslbench/eval/metrics.hpp"
#include "sslbench/eval/protocol.hpp"
#include "sslbench/features/pipeline.hpp"
#include "sslbench/io/checkpoint.hpp"
#include "sslbench/io/feature_file.hpp"

namespace sslbench {

struct SweepConfig {
    std::vector<std::int64_t> grid{1, 5, 10, 25, 50, 100, 250, 500, 1000};
    std::int64_t repeats = 100;
    std::int64_t baseline_repeats = 5;
    std::vector<std::string> classifiers{"svm", "lr", "knn", "probe", "baseline"};
    bool filter_enabled = false;  // restrict to classes with many training samples
    std::int64_t min_train_per_class = 250;
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
    std::int64_t knn_k = 10;
    SvmConfig svm{};
    LogRegConfig logreg{};
    ProbeConfig probe{};  // shared by probe and baseline cells
};

struct SweepCell {
    std::string classifier;
    std::int64_t n = 0;
    bool skipped = false;
    std::string skip_reason;
    std::vector<std::uint64_t> seeds;       // one per repeat, failures included
    std::vector<std::int64_t> repeat_ids;   // repeats that succeeded
    std::vector<double> accuracies;         // aligned with repeat_ids
    std::vector<std::string> failures;
    Mat confusion;  // summed over successful repeats
    double mean = 0.0;
    double stddev = 0.0;
};

struct SweepReport {
    SweepConfig config;
    std::uint64_t split_seed = 0;
    int num_classes = 0;
    std::vector<int> kept_classes;  // original class ids
    std::int64_t train_size = 0;
    std::int64_t test_size = 0;
    std::vector<std::int64_t> train_per_class;  // dense class order
    std::vector<std::int64_t> test_per_class;
    std::vector<std::string> warnings;
    std::vector<SweepCell> cells;
};

namespace evaldetail {

inline std::string normalize_classifier(const std::string& raw) {
    std::string s;
    for (char c : raw) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "svm") return "svm";
    if (s == "lr" || s == "logreg") return "lr";
    if (s == "knn") return "knn";
    if (s == "probe" || s == "ll") return "probe";
    if (s == "baseline" || s == "dl") return "baseline";
    throw ConfigError("unknown classifier '" + raw +
                      "' (expected svm, lr, knn, probe, or baseline)");
}

// Sweep-level fields are checked here; per-classifier settings are validated
// where they are used, so a bad sub-config surfaces as a recorded cell
// failure rather than aborting the whole sweep.
inline std::vector<std::string> validate_sweep_config(const SweepConfig& cfg) {
    if (cfg.grid.empty()) throw ConfigError("sweep: empty n-per-class grid");
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        if (cfg.grid[i] < 1) throw ConfigError("sweep: grid entries must be positive");
        if (i > 0 && cfg.grid[i] <= cfg.grid[i - 1]) {
            throw ConfigError("sweep: grid must be strictly increasing");
        }
    }
    if (cfg.repeats < 1) throw ConfigError("sweep: repeats must be >= 1");
    if (cfg.baseline_repeats < 1) throw ConfigError("sweep: baseline repeats must be >= 1");
    if (cfg.classifiers.empty()) throw ConfigError("sweep: no classifiers selected");
    std::vector<std::string> names;
    for (const auto& raw : cfg.classifiers) {
        const std::string name = normalize_classifier(raw);
        if (std::find(names.begin(), names.end(), name) != names.end()) {
            throw ConfigError("sweep: classifier '" + name + "' listed twice");
        }
        names.push_back(name);
    }
    if (!(cfg.test_fraction > 0.0) || !(cfg.test_fraction < 1.0)) {
        throw ConfigError("sweep: test fraction must lie in (0, 1)");
    }
    if (cfg.knn_k < 1) throw ConfigError("sweep: knn k must be >= 1");
    if (cfg.filter_enabled && cfg.min_train_per_class < 1) {
        throw ConfigError("sweep: min train per class must be >= 1");
    }
    return names;
}

inline Mat gather_rows(const FeatureMatrix& fm, const std::vector<std::int64_t>& idx) {
    Mat out(static_cast<std::int64_t>(idx.size()), fm.d);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const float* src = fm.row(idx[r]);
        for (std::int64_t j = 0; j < fm.d; ++j) {
            out(static_cast<std::int64_t>(r), j) = static_cast<double>(src[j]);
        }
    }
    return out;
}

inline void append_unique(std::vector<std::string>& sink, std::set<std::string>& seen,
                          const std::vector<std::string>& add) {
    for (const auto& w : add) {
        if (seen.insert(w).second) sink.push_back(w);
    }
}

}  // namespace evaldetail

namespace evaldetail {

// Shared cell loop. `ckpt` and `images` are null in feature-only mode, which
// cannot serve probe or baseline cells.
inline SweepReport run_sweep_core(const FeatureMatrix& fm, const std::vector<int>& labels,
                                  const Checkpoint* ckpt, const std::vector<Image>* images,
                                  const SweepConfig& cfg) {
    const std::vector<std::string> names = evaldetail::validate_sweep_config(cfg);

    SweepReport report;
    report.config = cfg;
    report.config.classifiers = names;
    std::set<std::string> seen_warnings;

    report.split_seed = derive_seed(cfg.seed, "split");
    const DataSplit split = stratified_split(labels, SplitSpec{cfg.test_fraction, report.split_seed});
    evaldetail::append_unique(report.warnings, seen_warnings, split.warnings);

    // classes surviving the optional min-train filter, re-indexed densely
    std::vector<std::int64_t> train_idx;
    std::vector<std::int64_t> test_idx;
    std::vector<int> relabel;
    if (cfg.filter_enabled) {
        FilterResult f = filter_min_train(labels, split, cfg.min_train_per_class);
        train_idx = std::move(f.train);
        test_idx = std::move(f.test);
        relabel = std::move(f.relabel);
        report.kept_classes = std::move(f.kept);
    } else {
        train_idx = split.train;
        test_idx = split.test;
        int hi = -1;
        for (int v : labels) hi = v > hi ? v : hi;
        relabel.assign(static_cast<std::size_t>(hi) + 1, -1);
        for (int v : labels) {
            if (relabel[static_cast<std::size_t>(v)] < 0) {
                report.kept_classes.push_back(v);
            }
            relabel[static_cast<std::size_t>(v)] = 0;
        }
        std::sort(report.kept_classes.begin(), report.kept_classes.end());
        for (std::size_t k = 0; k < report.kept_classes.size(); ++k) {
            relabel[static_cast<std::size_t>(report.kept_classes[k])] = static_cast<int>(k);
        }
    }
    const int classes = static_cast<int>(report.kept_classes.size());
    if (classes < 2) throw DataError("sweep: need at least 2 classes");
    report.num_classes = classes;
    report.train_size = static_cast<std::int64_t>(train_idx.size());
    report.test_size = static_cast<std::int64_t>(test_idx.size());
    if (test_idx.empty()) throw DataError("sweep: empty test split");

    std::vector<int> y(labels.size(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int cls = labels[i];
        if (cls >= 0 && cls < static_cast<int>(relabel.size())) {
            y[i] = relabel[static_cast<std::size_t>(cls)];
        }
    }
    report.train_per_class.assign(static_cast<std::size_t>(classes), 0);
    report.test_per_class.assign(static_cast<std::size_t>(classes), 0);
    for (std::int64_t i : train_idx) ++report.train_per_class[static_cast<std::size_t>(y[i])];
    for (std::int64_t i : test_idx) ++report.test_per_class[static_cast<std::size_t>(y[i])];
    const std::int64_t max_train_class =
        *std::max_element(report.train_per_class.begin(), report.train_per_class.end());

    const Mat x_test = evaldetail::gather_rows(fm, test_idx);
    std::vector<int> y_test;
    y_test.reserve(test_idx.size());
    for (std::int64_t i : test_idx) y_test.push_back(y[i]);

    // probe and baseline cells train on raw images at the backbone-native size
    const bool wants_probe = std::find(names.begin(), names.end(), "probe") != names.end() ||
                             std::find(names.begin(), names.end(), "baseline") != names.end();
    BackboneConfig arch;
    std::vector<Image> test_images;
    if (wants_probe) {
        if (ckpt == nullptr || images == nullptr) {
            throw ConfigError(
                "sweep: probe and baseline classifiers need a checkpoint and images, "
                "not a precomputed feature file");
        }
        arch = backbone_config_from_checkpoint(*ckpt, "teacher.");
        const auto native = arch.pos_grid * arch.patch;
        if (cfg.probe.augment.global_size != native) {
            throw ConfigError("sweep: probe global crop size " +
                              std::to_string(cfg.probe.augment.global_size) +
                              " does not match the backbone input size " + std::to_string(native));
        }
        for (std::int64_t i : test_idx) {
            test_images.push_back((*images)[static_cast<std::size_t>(i)]);
        }
    }

    auto train_labels_of = [&](const std::vector<std::int64_t>& idx) {
        std::vector<int> out;
        out.reserve(idx.size());
        for (std::int64_t i : idx) out.push_back(y[i]);
        return out;
    };

    for (const std::string& name : names) {
        for (std::int64_t n : cfg.grid) {
            SweepCell cell;
            cell.classifier = name;
            cell.n = n;
            cell.confusion = Mat(classes, classes);
            if (n > max_train_class) {
                cell.skipped = true;
                cell.skip_reason = "n=" + std::to_string(n) +
                                   " exceeds every class's training count (max " +
                                   std::to_string(max_train_class) + ")";
                report.cells.push_back(std::move(cell));
                continue;
            }
            const std::int64_t reps = name == "baseline" ? cfg.baseline_repeats : cfg.repeats;
            for (std::int64_t r = 0; r < reps; ++r) {
                const std::uint64_t cell_seed =
                    derive_seed(cfg.seed, name, static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(r));
                cell.seeds.push_back(cell_seed);
                try {
                    const auto sampled = sample_n_per_class(y, train_idx, n, cell_seed);
                    const std::vector<int> y_s = train_labels_of(sampled);
                    std::vector<int> pred;
                    if (name == "probe" || name == "baseline") {
                        std::vector<Image> imgs;
                        imgs.reserve(sampled.size());
                        for (std::int64_t i : sampled) {
                            imgs.push_back((*images)[static_cast<std::size_t>(i)]);
                        }
                        ProbeConfig pcfg = cfg.probe;
                        pcfg.seed = cell_seed;
                        const ProbeModel model =
                            name == "probe" ? fit_linear_probe(*ckpt, imgs, y_s, pcfg)
                                            : fit_dl_baseline(arch, imgs, y_s, pcfg);
                        pred = probe_predict(model, test_images);
                    } else {
                        LabeledSet train;
                        train.x = evaldetail::gather_rows(fm, sampled);
                        train.y = y_s;
                        const FeaturePipeline pipe = fit_feature_pipeline(train.x);
                        train.x = apply_feature_pipeline(pipe, train.x);
                        const Mat xt = apply_feature_pipeline(pipe, x_test);
                        if (name == "svm") {
                            pred = svm_predict(fit_svm_rbf(train, cfg.svm), xt);
                        } else if (name == "lr") {
                            pred = logreg_predict(fit_logreg(train, cfg.logreg), xt);
                        } else {
                            pred = knn_predict(fit_knn(train, static_cast<int>(cfg.knn_k)), xt);
                        }
                    }
                    std::vector<std::string> warn;
                    const double acc = balanced_accuracy(y_test, pred, classes, &warn);
                    evaldetail::append_unique(report.warnings, seen_warnings, warn);
                    const Mat conf = confusion_matrix(y_test, pred, classes);
                    for (std::size_t t = 0; t < conf.a.size(); ++t) cell.confusion.a[t] += conf.a[t];
                    cell.repeat_ids.push_back(r);
                    cell.accuracies.push_back(acc);
                } catch (const std::exception& e) {
                    cell.failures.push_back("repeat " + std::to_string(r) + ": " + e.what());
                }
            }
            const auto m = static_cast<double>(cell.accuracies.size());
            if (m > 0) {
                double s = 0.0;
                for (double a : cell.accuracies) s += a;
                cell.mean = s / m;
                if (m > 1) {
                    double q = 0.0;
                    for (double a : cell.accuracies) q += (a - cell.mean) * (a - cell.mean);
                    cell.stddev = std::sqrt(q / (m - 1.0));
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

}  // namespace evaldetail

// Runs the full label-efficiency protocol: one stratified split fixes the
// test set, then every (classifier, n) cell repeatedly samples n labeled
// training images per class, refits the feature pipeline and classifier on
// exactly that subsample, and scores balanced accuracy on the fixed test set.
inline SweepReport run_sweep(const Checkpoint& ckpt, const std::vector<Image>& images,
                             const std::vector<std::string>& ids, const std::vector<int>& labels,
                             const SweepConfig& cfg) {
    if (images.empty()) throw DataError("sweep: no input images");
    // frozen-teacher features for every image, extracted once
    const FeatureMatrix fm = extract_features<float>(ckpt, images, ids, labels);
    return evaldetail::run_sweep_core(fm, labels, &ckpt, &images, cfg);
}

// Feature-only sweep over a precomputed extraction; serves svm, lr, and knn.
// Rows without a label are dropped with a warning.
inline SweepReport run_sweep(const FeatureMatrix& fm, const SweepConfig& cfg) {
    validate_feature_matrix(fm, "sweep");
    std::int64_t unlabeled = 0;
    for (int v : fm.labels) unlabeled += v < 0 ? 1 : 0;
    if (unlabeled == 0) {
        return evaldetail::run_sweep_core(fm, fm.labels, nullptr, nullptr, cfg);
    }
    FeatureMatrix labeled;
    labeled.d = fm.d;
    for (std::int64_t i = 0; i < fm.n; ++i) {
        if (fm.labels[static_cast<std::size_t>(i)] < 0) continue;
        labeled.data.insert(labeled.data.end(), fm.row(i), fm.row(i) + fm.d);
        labeled.ids.push_back(fm.ids[static_cast<std::size_t>(i)]);
        labeled.labels.push_back(fm.labels[static_cast<std::size_t>(i)]);
        ++labeled.n;
    }
    if (labeled.n == 0) throw DataError("sweep: every feature row is unlabeled");
    SweepReport report = evaldetail::run_sweep_core(labeled, labeled.labels, nullptr, nullptr, cfg);
    report.warnings.insert(report.warnings.begin(),
                           "sweep: dropped " + std::to_string(unlabeled) +
                               " unlabeled feature rows");
    return report;
}

}  // namespace sslbench

#endif
