// Experimental protocol: stratified splitting, n-per-class subsampling,
// balanced accuracy, the min-train class filter, and the sweep engine.
// Metrics are checked against independent loop-based oracles and one sweep
// cell is reproduced by hand end to end.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sslbench/eval/metrics.hpp"
#include "sslbench/eval/protocol.hpp"
#include "sslbench/eval/report.hpp"
#include "sslbench/eval/sweep.hpp"
#include "sslbench/io/synthetic.hpp"

using namespace sslbench;

namespace {

// per-class recall mean computed with plain counters, no confusion matrix
double ba_oracle(const std::vector<int>& yt, const std::vector<int>& yp, int classes) {
    std::vector<std::int64_t> total(static_cast<std::size_t>(classes), 0);
    std::vector<std::int64_t> hit(static_cast<std::size_t>(classes), 0);
    for (std::size_t i = 0; i < yt.size(); ++i) {
        ++total[static_cast<std::size_t>(yt[i])];
        if (yt[i] == yp[i]) ++hit[static_cast<std::size_t>(yt[i])];
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < classes; ++c) {
        if (total[static_cast<std::size_t>(c)] == 0) continue;
        sum += static_cast<double>(hit[static_cast<std::size_t>(c)]) /
               static_cast<double>(total[static_cast<std::size_t>(c)]);
        ++present;
    }
    return sum / present;
}

std::vector<std::vector<std::int64_t>> conf_oracle(const std::vector<int>& yt,
                                                   const std::vector<int>& yp, int classes) {
    std::vector<std::vector<std::int64_t>> m(
        static_cast<std::size_t>(classes),
        std::vector<std::int64_t>(static_cast<std::size_t>(classes), 0));
    for (std::size_t i = 0; i < yt.size(); ++i) {
        ++m[static_cast<std::size_t>(yt[i])][static_cast<std::size_t>(yp[i])];
    }
    return m;
}

std::pair<std::vector<int>, std::vector<int>> random_instance(Rng& rng, int classes,
                                                              std::int64_t n) {
    std::vector<int> yt, yp;
    for (std::int64_t i = 0; i < n; ++i) {
        yt.push_back(static_cast<int>(rng.uniform_int(0, classes - 1)));
        yp.push_back(static_cast<int>(rng.uniform_int(0, classes - 1)));
    }
    return {yt, yp};
}

std::vector<std::int64_t> class_counts(const std::vector<int>& labels,
                                       const std::vector<std::int64_t>& idx, int classes) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(classes), 0);
    for (std::int64_t i : idx) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    return counts;
}

BackboneConfig sweep_arch() {
    BackboneConfig cfg;
    cfg.patch = 4;
    cfg.dim = 16;
    cfg.blocks = 1;
    cfg.heads = 2;
    cfg.mlp_ratio = 2.0;
    cfg.in_channels = 3;
    cfg.pos_grid = 2;
    return cfg;
}

Checkpoint sweep_checkpoint(std::uint64_t seed) {
    auto params = make_backbone_params<float>(sweep_arch(), seed);
    Checkpoint ckpt;
    ckpt.seed = seed;
    ckpt.step = 1;
    ckpt.config_echo = "sweep-test";
    store_params_in_checkpoint(ckpt, "student.", params);
    store_params_in_checkpoint(ckpt, "teacher.", params);
    return ckpt;
}

struct SweepData {
    std::vector<Image> images;
    std::vector<std::string> ids;
    std::vector<int> labels;
};

SweepData sweep_data(int per_class, int classes) {
    SynthConfig synth;
    synth.classes = classes;
    synth.size = 16;
    synth.freq_min = 1.5;
    synth.freq_max = 3.5;
    SweepData out;
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            out.images.push_back(synth_image(synth, 404, c, i));
            out.ids.push_back("img-" + std::to_string(c) + "-" + std::to_string(i));
            out.labels.push_back(c);
        }
    }
    return out;
}

// quiet augmentation at the backbone-native input size
ProbeConfig sweep_probe_cfg() {
    ProbeConfig cfg;
    cfg.augment.global_size = 8;
    cfg.augment.local_size = 8;
    cfg.augment.enable_rotation = false;
    cfg.augment.enable_jitter = false;
    cfg.augment.enable_grayscale = false;
    cfg.augment.enable_blur = false;
    cfg.augment.enable_solarize = false;
    cfg.batch_size = 8;
    cfg.max_epochs = 3;
    return cfg;
}

}  // namespace

TEST_CASE("balanced accuracy matches hand values and the loop oracle") {
    REQUIRE(balanced_accuracy({0, 0, 1, 1}, {0, 0, 1, 0}, 2) == 0.75);
    REQUIRE(balanced_accuracy({0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}, 3) == 1.0);
    // constant predictor on balanced classes scores one recall of 1, rest 0
    REQUIRE(balanced_accuracy({0, 1, 2, 3}, {2, 2, 2, 2}, 4) == 0.25);

    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
        const int classes = 2 + static_cast<int>(rng.uniform_int(0, 5));
        auto [yt, yp] = random_instance(rng, classes, 30);
        yt[0] = classes - 1;  // ensure the top class exists so inference agrees
        const double got = balanced_accuracy(yt, yp, classes);
        REQUIRE(got == Catch::Approx(ba_oracle(yt, yp, classes)).margin(1e-12));
        REQUIRE(got >= 0.0);
        REQUIRE(got <= 1.0);
        // inferred class count agrees when every class is present in y_true
        bool all_present = true;
        for (int c = 0; c < classes; ++c) {
            if (std::count(yt.begin(), yt.end(), c) == 0) all_present = false;
        }
        if (all_present) REQUIRE(balanced_accuracy(yt, yp) == got);
    }

    SECTION("consistent label permutation leaves the score unchanged") {
        Rng prng(42);
        for (int t = 0; t < 20; ++t) {
            auto [yt, yp] = random_instance(prng, 4, 40);
            std::vector<int> perm{2, 3, 1, 0};
            std::vector<int> pt, pp;
            for (int v : yt) pt.push_back(perm[static_cast<std::size_t>(v)]);
            for (int v : yp) pp.push_back(perm[static_cast<std::size_t>(v)]);
            REQUIRE(balanced_accuracy(pt, pp, 4) ==
                    Catch::Approx(balanced_accuracy(yt, yp, 4)).margin(1e-12));
        }
    }

    SECTION("classes absent from y_true are excluded with a warning") {
        std::vector<std::string> warnings;
        const double got = balanced_accuracy({0, 0, 2, 2}, {0, 1, 2, 2}, 3, &warnings);
        REQUIRE(got == Catch::Approx((0.5 + 1.0) / 2.0).margin(1e-15));
        REQUIRE(warnings.size() == 1);
        REQUIRE(warnings[0].find("class 1") != std::string::npos);
    }

    SECTION("errors") {
        REQUIRE_THROWS_AS(balanced_accuracy({0, 1}, {0}, 2), UsageError);
        REQUIRE_THROWS_AS(balanced_accuracy({}, {}, 2), UsageError);
        REQUIRE_THROWS_AS(balanced_accuracy({0, 3}, {0, 1}, 2), UsageError);
        REQUIRE_THROWS_AS(balanced_accuracy({0, 1}, {0, -1}, 2), UsageError);
    }
}

TEST_CASE("confusion matrix counts pairs and links to balanced accuracy") {
    Rng rng(43);
    for (int t = 0; t < 30; ++t) {
        const int classes = 2 + static_cast<int>(rng.uniform_int(0, 4));
        auto [yt, yp] = random_instance(rng, classes, 50);
        const Mat m = confusion_matrix(yt, yp, classes);
        const auto oracle = conf_oracle(yt, yp, classes);
        double total = 0.0;
        for (int i = 0; i < classes; ++i) {
            for (int j = 0; j < classes; ++j) {
                REQUIRE(m(i, j) ==
                        static_cast<double>(oracle[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(j)]));
                total += m(i, j);
            }
        }
        REQUIRE(total == static_cast<double>(yt.size()));

        // mean of the row-normalized diagonal over non-empty rows
        const Mat norm = row_normalize(m);
        double diag = 0.0;
        int present = 0;
        for (int c = 0; c < classes; ++c) {
            double row = 0.0;
            for (int j = 0; j < classes; ++j) row += m(c, j);
            if (row == 0.0) continue;
            diag += norm(c, c);
            ++present;
        }
        if (present > 0) {
            std::vector<std::string> warnings;
            REQUIRE(diag / present ==
                    Catch::Approx(balanced_accuracy(yt, yp, classes, &warnings)).margin(1e-12));
        }
    }

    SECTION("perfect predictions give a diagonal of class counts") {
        const std::vector<int> y{0, 1, 1, 2, 2, 2};
        const Mat m = confusion_matrix(y, y, 3);
        REQUIRE(m(0, 0) == 1.0);
        REQUIRE(m(1, 1) == 2.0);
        REQUIRE(m(2, 2) == 3.0);
        double off = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) off += i == j ? 0.0 : m(i, j);
        }
        REQUIRE(off == 0.0);
    }

    SECTION("row normalization keeps empty rows at zero") {
        const Mat m = confusion_matrix({0, 0}, {0, 1}, 3);
        const Mat norm = row_normalize(m);
        REQUIRE(norm(0, 0) == 0.5);
        REQUIRE(norm(0, 1) == 0.5);
        for (int j = 0; j < 3; ++j) {
            REQUIRE(norm(1, j) == 0.0);
            REQUIRE(norm(2, j) == 0.0);
        }
    }

    SECTION("errors") {
        REQUIRE_THROWS_AS(confusion_matrix({0, 2}, {0, 1}, 2), UsageError);
        REQUIRE_THROWS_AS(confusion_matrix({0, 1}, {0, 2}, 2), UsageError);
        REQUIRE_THROWS_AS(confusion_matrix({0}, {}, 2), UsageError);
        REQUIRE_THROWS_AS(confusion_matrix({0}, {0}, 0), UsageError);
    }
}

TEST_CASE("stratified split hits per-class and global targets") {
    SECTION("exact rounding on the reference sizes") {
        std::vector<int> labels;
        for (int i = 0; i < 10; ++i) labels.push_back(0);
        for (int i = 0; i < 20; ++i) labels.push_back(1);
        const DataSplit split = stratified_split(labels, SplitSpec{0.3, 7});
        const auto test_counts = class_counts(labels, split.test, 2);
        REQUIRE(test_counts[0] == 3);
        REQUIRE(test_counts[1] == 6);
        REQUIRE(split.train.size() + split.test.size() == labels.size());

        std::vector<std::int64_t> all = split.train;
        all.insert(all.end(), split.test.begin(), split.test.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size(); ++i) {
            REQUIRE(all[i] == static_cast<std::int64_t>(i));
        }
    }

    SECTION("per-class proportion within one sample, global target exact") {
        Rng rng(17);
        for (int round = 0; round < 10; ++round) {
            const int classes = 2 + static_cast<int>(rng.uniform_int(0, 4));
            std::vector<int> labels;
            std::vector<std::int64_t> sizes;
            for (int c = 0; c < classes; ++c) {
                const auto n_c = 5 + rng.uniform_int(0, 36);
                sizes.push_back(n_c);
                for (std::int64_t i = 0; i < n_c; ++i) labels.push_back(c);
            }
            Rng sh(900 + round);
            sh.shuffle(labels);
            const DataSplit split =
                stratified_split(labels, SplitSpec{0.3, static_cast<std::uint64_t>(100 + round)});
            const auto test_counts = class_counts(labels, split.test, classes);
            std::int64_t total = 0;
            for (int c = 0; c < classes; ++c) {
                REQUIRE(std::abs(static_cast<double>(test_counts[static_cast<std::size_t>(c)]) -
                                 0.3 * static_cast<double>(sizes[static_cast<std::size_t>(c)])) <=
                        1.0);
                total += test_counts[static_cast<std::size_t>(c)];
            }
            REQUIRE(total ==
                    std::llround(0.3 * static_cast<double>(labels.size())));
        }
    }

    SECTION("deterministic in the seed") {
        std::vector<int> labels;
        for (int i = 0; i < 30; ++i) labels.push_back(i % 2);
        const DataSplit a = stratified_split(labels, SplitSpec{0.3, 5});
        const DataSplit b = stratified_split(labels, SplitSpec{0.3, 5});
        REQUIRE(a.train == b.train);
        REQUIRE(a.test == b.test);
        const DataSplit c = stratified_split(labels, SplitSpec{0.3, 6});
        REQUIRE(a.test != c.test);
    }

    SECTION("single-sample classes stay in train with a warning") {
        const std::vector<int> labels{0, 0, 0, 0, 1};
        const DataSplit split = stratified_split(labels, SplitSpec{0.5, 3});
        REQUIRE(std::find(split.train.begin(), split.train.end(), 4) != split.train.end());
        REQUIRE(std::find(split.test.begin(), split.test.end(), 4) == split.test.end());
        REQUIRE(split.warnings.size() == 1);
        REQUIRE(split.warnings[0].find("class 1") != std::string::npos);
    }

    SECTION("errors") {
        REQUIRE_THROWS_AS(stratified_split({}, SplitSpec{0.3, 1}), DataError);
        REQUIRE_THROWS_AS(stratified_split({0, 1}, SplitSpec{0.0, 1}), ConfigError);
        REQUIRE_THROWS_AS(stratified_split({0, 1}, SplitSpec{1.0, 1}), ConfigError);
        REQUIRE_THROWS_AS(stratified_split({0, -1}, SplitSpec{0.3, 1}), UsageError);
    }
}

TEST_CASE("per-class subsampling respects availability") {
    std::vector<int> labels;
    std::vector<std::int64_t> pool;
    for (int i = 0; i < 5; ++i) labels.push_back(0);
    for (int i = 0; i < 100; ++i) labels.push_back(1);
    for (std::size_t i = 0; i < labels.size(); ++i) pool.push_back(static_cast<std::int64_t>(i));

    const auto picked = sample_n_per_class(labels, pool, 10, 9);
    const auto counts = class_counts(labels, picked, 2);
    REQUIRE(counts[0] == 5);
    REQUIRE(counts[1] == 10);

    SECTION("no duplicates and subset of the pool") {
        std::set<std::int64_t> unique(picked.begin(), picked.end());
        REQUIRE(unique.size() == picked.size());
        for (std::int64_t i : picked) {
            REQUIRE(std::find(pool.begin(), pool.end(), i) != pool.end());
        }
        REQUIRE(std::is_sorted(picked.begin(), picked.end()));
    }

    SECTION("n at least the largest class returns the whole pool") {
        const auto all = sample_n_per_class(labels, pool, 100, 9);
        REQUIRE(all == pool);
        const auto more = sample_n_per_class(labels, pool, 5000, 9);
        REQUIRE(more == pool);
    }

    SECTION("deterministic per seed, varying across seeds") {
        REQUIRE(sample_n_per_class(labels, pool, 10, 9) == picked);
        REQUIRE(sample_n_per_class(labels, pool, 10, 10) != picked);
    }

    SECTION("errors") {
        REQUIRE_THROWS_AS(sample_n_per_class(labels, pool, 0, 9), UsageError);
        REQUIRE_THROWS_AS(sample_n_per_class(labels, {999}, 1, 9), UsageError);
    }
}

TEST_CASE("min-train filter keeps large classes and re-indexes densely") {
    // class 0: 249 train, class 1: 250 train, class 2: 1000 train, 10 test each
    std::vector<int> labels;
    DataSplit split;
    std::int64_t pos = 0;
    const std::int64_t train_sizes[3] = {249, 250, 1000};
    for (int c = 0; c < 3; ++c) {
        for (std::int64_t i = 0; i < train_sizes[c]; ++i) {
            labels.push_back(c);
            split.train.push_back(pos++);
        }
        for (std::int64_t i = 0; i < 10; ++i) {
            labels.push_back(c);
            split.test.push_back(pos++);
        }
    }

    const FilterResult f = filter_min_train(labels, split, 250);
    REQUIRE(f.kept == std::vector<int>{1, 2});
    REQUIRE(f.relabel == std::vector<int>{-1, 0, 1});
    REQUIRE(static_cast<std::int64_t>(f.train.size()) == 250 + 1000);
    REQUIRE(static_cast<std::int64_t>(f.test.size()) == 20);
    for (std::int64_t i : f.train) REQUIRE(labels[static_cast<std::size_t>(i)] != 0);
    for (std::int64_t i : f.test) REQUIRE(labels[static_cast<std::size_t>(i)] != 0);
    REQUIRE(std::is_sorted(f.train.begin(), f.train.end()));
    REQUIRE(std::is_sorted(f.test.begin(), f.test.end()));

    SECTION("threshold already met by everyone keeps all classes") {
        const FilterResult all = filter_min_train(labels, split, 100);
        REQUIRE(all.kept == std::vector<int>{0, 1, 2});
        REQUIRE(all.relabel == std::vector<int>{0, 1, 2});
        REQUIRE(all.train.size() == split.train.size());
    }

    SECTION("errors") {
        REQUIRE_THROWS_AS(filter_min_train(labels, split, 1001), DataError);
        REQUIRE_THROWS_AS(filter_min_train(labels, split, 0), ConfigError);
    }
}

TEST_CASE("sweep produces structured deterministic cells") {
    const Checkpoint ckpt = sweep_checkpoint(77);
    const SweepData data = sweep_data(14, 2);

    SweepConfig cfg;
    cfg.grid = {1, 5, 100};
    cfg.repeats = 2;
    cfg.classifiers = {"knn", "logreg"};
    cfg.seed = 99;
    const SweepReport report = run_sweep(ckpt, data.images, data.ids, data.labels, cfg);

    REQUIRE(report.config.classifiers == std::vector<std::string>{"knn", "lr"});
    REQUIRE(report.num_classes == 2);
    REQUIRE(report.train_size + report.test_size == 28);
    REQUIRE(report.cells.size() == 6);

    for (const auto& cell : report.cells) {
        if (cell.n == 100) {
            REQUIRE(cell.skipped);
            REQUIRE(cell.skip_reason.find("exceeds") != std::string::npos);
            REQUIRE(cell.accuracies.empty());
            continue;
        }
        REQUIRE_FALSE(cell.skipped);
        REQUIRE(cell.failures.empty());
        REQUIRE(cell.accuracies.size() == 2);
        REQUIRE(cell.repeat_ids == std::vector<std::int64_t>{0, 1});
        for (std::int64_t r = 0; r < 2; ++r) {
            REQUIRE(cell.seeds[static_cast<std::size_t>(r)] ==
                    derive_seed(99, cell.classifier, static_cast<std::uint64_t>(cell.n),
                                static_cast<std::uint64_t>(r)));
        }
        double lo = 1.0, hi = 0.0, conf_total = 0.0;
        for (double a : cell.accuracies) {
            REQUIRE(a >= 0.0);
            REQUIRE(a <= 1.0);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        REQUIRE(cell.mean >= lo);
        REQUIRE(cell.mean <= hi);
        REQUIRE(cell.stddev >= 0.0);
        for (double v : cell.confusion.a) conf_total += v;
        REQUIRE(conf_total == static_cast<double>(2 * report.test_size));
    }

    SECTION("regeneration is bit-identical") {
        const SweepReport again = run_sweep(ckpt, data.images, data.ids, data.labels, cfg);
        REQUIRE(sweep_to_json(again).dump(2) == sweep_to_json(report).dump(2));
    }

    SECTION("one knn cell reproduced by hand") {
        const FeatureMatrix fm = extract_features<float>(ckpt, data.images, data.ids, data.labels);
        const DataSplit split =
            stratified_split(data.labels, SplitSpec{0.3, derive_seed(99, "split")});
        const auto sampled =
            sample_n_per_class(data.labels, split.train, 1, derive_seed(99, "knn", 1, 0));

        LabeledSet train;
        train.x = Mat(static_cast<std::int64_t>(sampled.size()), fm.d);
        std::int64_t r = 0;
        for (std::int64_t i : sampled) {
            for (std::int64_t j = 0; j < fm.d; ++j) {
                train.x(r, j) = static_cast<double>(fm.row(i)[j]);
            }
            train.y.push_back(data.labels[static_cast<std::size_t>(i)]);
            ++r;
        }
        const FeaturePipeline pipe = fit_feature_pipeline(train.x);
        train.x = apply_feature_pipeline(pipe, train.x);

        Mat x_test(static_cast<std::int64_t>(split.test.size()), fm.d);
        std::vector<int> y_test;
        r = 0;
        for (std::int64_t i : split.test) {
            for (std::int64_t j = 0; j < fm.d; ++j) {
                x_test(r, j) = static_cast<double>(fm.row(i)[j]);
            }
            y_test.push_back(data.labels[static_cast<std::size_t>(i)]);
            ++r;
        }
        const auto pred = knn_predict(fit_knn(train, 10), apply_feature_pipeline(pipe, x_test));
        const double by_hand = balanced_accuracy(y_test, pred, 2);

        REQUIRE(report.cells[0].classifier == "knn");
        REQUIRE(report.cells[0].n == 1);
        REQUIRE(report.cells[0].accuracies[0] == by_hand);
    }

    SECTION("feature-only sweep reproduces the image-mode cells bitwise") {
        const FeatureMatrix fm = extract_features<float>(ckpt, data.images, data.ids, data.labels);
        const SweepReport direct = run_sweep(fm, cfg);
        REQUIRE(direct.cells.size() == report.cells.size());
        for (std::size_t i = 0; i < direct.cells.size(); ++i) {
            REQUIRE(direct.cells[i].classifier == report.cells[i].classifier);
            REQUIRE(direct.cells[i].accuracies == report.cells[i].accuracies);
        }
        SweepConfig needs_images = cfg;
        needs_images.classifiers = {"probe"};
        REQUIRE_THROWS_AS(run_sweep(fm, needs_images), ConfigError);
    }

    SECTION("probe and baseline cells run end to end") {
        SweepConfig pc;
        pc.grid = {2};
        pc.repeats = 1;
        pc.baseline_repeats = 1;
        pc.classifiers = {"probe", "baseline"};
        pc.seed = 7;
        pc.probe = sweep_probe_cfg();
        const SweepReport pr = run_sweep(ckpt, data.images, data.ids, data.labels, pc);
        REQUIRE(pr.cells.size() == 2);
        for (const auto& cell : pr.cells) {
            INFO(cell.classifier << (cell.failures.empty() ? "" : ": " + cell.failures[0]));
            REQUIRE(cell.failures.empty());
            REQUIRE(cell.accuracies.size() == 1);
            REQUIRE(cell.accuracies[0] >= 0.0);
            REQUIRE(cell.accuracies[0] <= 1.0);
        }
    }
}

TEST_CASE("sweep records cell failures and continues") {
    const Checkpoint ckpt = sweep_checkpoint(78);
    const SweepData data = sweep_data(10, 2);

    SweepConfig cfg;
    cfg.grid = {1};
    cfg.repeats = 1;
    cfg.classifiers = {"probe", "knn"};
    cfg.seed = 3;
    cfg.probe = sweep_probe_cfg();
    cfg.probe.val_fraction = 1.5;  // invalid, caught at probe fit time
    const SweepReport report = run_sweep(ckpt, data.images, data.ids, data.labels, cfg);

    REQUIRE(report.cells.size() == 2);
    const auto& probe_cell = report.cells[0];
    REQUIRE(probe_cell.classifier == "probe");
    REQUIRE(probe_cell.accuracies.empty());
    REQUIRE(probe_cell.failures.size() == 1);
    REQUIRE(probe_cell.failures[0].find("repeat 0") != std::string::npos);
    REQUIRE(probe_cell.seeds.size() == 1);

    const auto& knn_cell = report.cells[1];
    REQUIRE(knn_cell.classifier == "knn");
    REQUIRE(knn_cell.failures.empty());
    REQUIRE(knn_cell.accuracies.size() == 1);

    SECTION("probe crop size must match the backbone input") {
        SweepConfig bad = cfg;
        bad.probe = sweep_probe_cfg();
        bad.probe.augment.global_size = 32;
        REQUIRE_THROWS_AS(run_sweep(ckpt, data.images, data.ids, data.labels, bad), ConfigError);
    }
}

TEST_CASE("sweep config validation") {
    const Checkpoint ckpt = sweep_checkpoint(79);
    const SweepData data = sweep_data(4, 2);
    auto expect_config_error = [&](SweepConfig cfg) {
        REQUIRE_THROWS_AS(run_sweep(ckpt, data.images, data.ids, data.labels, cfg), ConfigError);
    };

    SweepConfig cfg;
    cfg.grid = {1};
    cfg.repeats = 1;
    cfg.classifiers = {"knn"};

    SweepConfig bad = cfg;
    bad.grid = {};
    expect_config_error(bad);
    bad = cfg;
    bad.grid = {5, 5};
    expect_config_error(bad);
    bad = cfg;
    bad.grid = {0, 1};
    expect_config_error(bad);
    bad = cfg;
    bad.repeats = 0;
    expect_config_error(bad);
    bad = cfg;
    bad.classifiers = {"forest"};
    expect_config_error(bad);
    bad = cfg;
    bad.classifiers = {"lr", "logreg"};
    expect_config_error(bad);
    bad = cfg;
    bad.classifiers = {};
    expect_config_error(bad);
    bad = cfg;
    bad.test_fraction = 1.0;
    expect_config_error(bad);
    bad = cfg;
    bad.knn_k = 0;
    expect_config_error(bad);
    bad = cfg;
    bad.filter_enabled = true;
    bad.min_train_per_class = 0;
    expect_config_error(bad);
}

TEST_CASE("sweep defaults match the protocol") {
    const SweepConfig cfg;
    REQUIRE(cfg.grid == std::vector<std::int64_t>{1, 5, 10, 25, 50, 100, 250, 500, 1000});
    REQUIRE(cfg.repeats == 100);
    REQUIRE(cfg.baseline_repeats == 5);
    REQUIRE(cfg.test_fraction == 0.3);
    REQUIRE(cfg.knn_k == 10);
    REQUIRE(cfg.min_train_per_class == 250);
    REQUIRE_FALSE(cfg.filter_enabled);
}

TEST_CASE("report serialization round trips and renders") {
    const Checkpoint ckpt = sweep_checkpoint(80);
    const SweepData data = sweep_data(12, 2);

    SweepConfig cfg;
    cfg.grid = {1, 4, 50};
    cfg.repeats = 2;
    cfg.classifiers = {"knn", "lr"};
    cfg.seed = 11;
    const SweepReport report = run_sweep(ckpt, data.images, data.ids, data.labels, cfg);

    SECTION("json round trip is byte-stable") {
        const std::string once = sweep_to_json(report).dump(2);
        const SweepReport parsed = sweep_from_json(nlohmann::json::parse(once));
        REQUIRE(sweep_to_json(parsed).dump(2) == once);
    }

    SECTION("csv layout") {
        const std::string csv = sweep_to_csv(report);
        std::vector<std::string> lines;
        std::size_t start = 0;
        while (start < csv.size()) {
            const auto end = csv.find('\n', start);
            lines.push_back(csv.substr(start, end - start));
            start = end + 1;
        }
        REQUIRE(lines[0] == "classifier,n,repeat,balanced_accuracy");
        std::size_t successes = 0;
        for (const auto& cell : report.cells) successes += cell.accuracies.size();
        REQUIRE(lines.size() == 1 + successes);
        REQUIRE(lines[1].rfind("knn,1,0,", 0) == 0);
    }

    SECTION("table layout") {
        const std::string table = render_table(report);
        std::vector<std::string> lines;
        std::size_t start = 0;
        while (start < table.size()) {
            const auto end = table.find('\n', start);
            lines.push_back(table.substr(start, end - start));
            start = end + 1;
        }
        REQUIRE(lines.size() == 1 + cfg.grid.size());
        REQUIRE(lines[0].find("knn") != std::string::npos);
        REQUIRE(lines[0].find("lr") != std::string::npos);
        REQUIRE(lines[1].rfind("1 ", 0) == 0);
        // the n=50 row is skipped for both classifiers
        REQUIRE(lines[3].find("skip") != std::string::npos);
        for (const auto& cell : report.cells) {
            if (!cell.skipped) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.3f(%.3f)", cell.mean, cell.stddev);
                REQUIRE(table.find(buf) != std::string::npos);
            }
        }
    }
}
