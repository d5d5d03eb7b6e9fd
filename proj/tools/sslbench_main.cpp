// Command-line frontend. Subcommands cover the whole workflow:
//
//   synth     generate a synthetic striped-texture dataset
//   pretrain  self-supervised training on an image manifest
//   extract   frozen-teacher features for every manifest image
//   fit       train and score a single classifier
//   sweep     full label-efficiency protocol over (classifier, n) cells
//   report    render a saved sweep as a table or CSV
//
// Configuration comes from an optional INI file plus flag overrides; every
// command echoes the fully resolved configuration next to its outputs so a
// run can be reproduced from the artifacts alone.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sslbench/cli/config.hpp"
#include "sslbench/core/parallel.hpp"
#include "sslbench/eval/report.hpp"
#include "sslbench/eval/sweep.hpp"
#include "sslbench/features/pipeline.hpp"
#include "sslbench/io/checkpoint.hpp"
#include "sslbench/io/dataset.hpp"
#include "sslbench/io/feature_file.hpp"
#include "sslbench/io/synthetic.hpp"
#include "sslbench/train/dino.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sslbench;

namespace {

// relative output paths land under SSLBENCH_OUT_ROOT when it is set
fs::path resolve_out(const std::string& out) {
    fs::path p(out);
    if (p.is_absolute()) return p;
    const char* root = std::getenv("SSLBENCH_OUT_ROOT");
    if (root != nullptr && *root != '\0') return fs::path(root) / p;
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw DataError(path.string() + ": write failed");
}

// Flag values route through the same key bindings as config files, so both
// get identical parsing and error reporting. The deque keeps the value slots
// CLI11 writes into stable while options are being registered.
struct FlagBinder {
    struct Row {
        CLI::App* owner;
        std::string lookup;
        std::string section;
        std::string key;
        std::string value;
    };
    std::deque<Row> rows;

    void bind(CLI::App* cmd, const std::string& names, const std::string& section,
              const std::string& key, const std::string& help) {
        rows.push_back({cmd, names.substr(0, names.find(',')), section, key, ""});
        cmd->add_option(names, rows.back().value, help);
    }

    std::vector<IniEntry> entries() const {
        std::vector<IniEntry> out;
        for (const auto& r : rows) {
            if (r.owner->parsed() && r.owner->count(r.lookup) > 0) {
                out.push_back({r.section, r.key, r.value, 0});
            }
        }
        return out;
    }
};

RunConfig assemble_config(const std::string& config_path, const std::vector<IniEntry>& flag_entries) {
    RunConfig cfg;
    if (!config_path.empty()) {
        try {
            apply_config_entries(cfg, parse_ini_file(config_path));
        } catch (const ConfigError& e) {
            const std::string what = e.what();
            if (what.rfind(config_path, 0) == 0) throw;
            throw ConfigError(config_path + ": " + what);
        }
    }
    apply_config_entries(cfg, flag_entries);
    if (cfg.workers > 0) set_worker_count(cfg.workers);
    return cfg;
}

fs::path require_out_dir(RunConfig& cfg, const char* command) {
    if (cfg.out_dir.empty()) {
        throw ConfigError(std::string(command) + ": no output directory (--out or [output] dir)");
    }
    const fs::path p = resolve_out(cfg.out_dir);
    fs::create_directories(p);
    cfg.out_dir = p.string();
    return p;
}

void require_manifest(const RunConfig& cfg, const char* command) {
    if (cfg.manifest.empty()) {
        throw ConfigError(std::string(command) + ": no manifest (--manifest or [data] manifest)");
    }
}

std::optional<int> resize_of(const RunConfig& cfg) {
    if (cfg.resolution > 0) return cfg.resolution;
    return std::nullopt;
}

struct LoadedSamples {
    std::vector<Image> images;
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<std::string> class_names;
};

LoadedSamples load_samples(const RunConfig& cfg, const std::string& subset, const char* command) {
    const Dataset ds = load_dataset(cfg.manifest, resize_of(cfg));
    LoadedSamples out;
    out.class_names = ds.class_names;
    auto take = [&out](const std::vector<Sample>& samples) {
        for (const auto& s : samples) {
            out.images.push_back(s.image);
            out.ids.push_back(s.id);
            out.labels.push_back(s.label);
        }
    };
    if (subset == "labeled" || subset == "all") take(ds.labeled);
    if (subset == "unlabeled" || subset == "all") take(ds.unlabeled);
    if (out.images.empty()) {
        throw DataError(std::string(command) + ": subset '" + subset + "' of " + cfg.manifest +
                        " is empty");
    }
    return out;
}

// probe and baseline crops must match the backbone's native input size
AugmentPolicy pinned_probe_augment(const AugmentPolicy& base, const BackboneConfig& arch) {
    AugmentPolicy p = base;
    const int native = static_cast<int>(arch.pos_grid * arch.patch);
    p.global_size = native;
    if (p.local_size > native) p.local_size = native;
    return p;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (std::int64_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::int64_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    json out;
    out["rows"] = m.rows;
    out["cols"] = m.cols;
    out["data"] = std::move(rows);
    return out;
}

json pipeline_to_json(const FeaturePipeline& p) {
    json out;
    out["pca"]["mean"] = p.pca.mean;
    out["pca"]["components"] = mat_to_json(p.pca.components);
    out["pca"]["eigenvalues"] = p.pca.eigenvalues;
    out["pca"]["zero_variance"] = p.pca.zero_variance;
    out["power"]["lambda"] = p.power.lambda;
    out["power"]["mean"] = p.power.mean;
    out["power"]["stddev"] = p.power.stddev;
    out["power"]["constant_dims"] = p.power.constant_dims;
    return out;
}

// drops unlabeled rows; callers that cannot use them warn or fail themselves
FeatureMatrix labeled_rows(const FeatureMatrix& fm, const char* command) {
    std::int64_t unlabeled = 0;
    for (int v : fm.labels) unlabeled += v < 0 ? 1 : 0;
    if (unlabeled == 0) return fm;
    FeatureMatrix out;
    out.d = fm.d;
    for (std::int64_t i = 0; i < fm.n; ++i) {
        if (fm.labels[static_cast<std::size_t>(i)] < 0) continue;
        out.data.insert(out.data.end(), fm.row(i), fm.row(i) + fm.d);
        out.ids.push_back(fm.ids[static_cast<std::size_t>(i)]);
        out.labels.push_back(fm.labels[static_cast<std::size_t>(i)]);
        ++out.n;
    }
    if (out.n == 0) throw DataError(std::string(command) + ": every feature row is unlabeled");
    return out;
}

// labels re-indexed densely over the classes that actually occur
std::vector<int> densify(const std::vector<int>& labels, std::vector<int>& kept) {
    kept.clear();
    for (int v : labels) {
        if (std::find(kept.begin(), kept.end(), v) == kept.end()) kept.push_back(v);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<int> dense(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        dense[i] = static_cast<int>(std::find(kept.begin(), kept.end(), labels[i]) - kept.begin());
    }
    return dense;
}

int run_synth(RunConfig cfg, bool freq_band_given) {
    const fs::path out = require_out_dir(cfg, "synth");
    // the default frequency band tracks the image size; an explicitly chosen
    // band is validated as given
    const bool band_explicit = freq_band_given || cfg.synth.freq_max != SynthConfig{}.freq_max;
    if (!band_explicit) {
        const double ceiling = 0.95 * cfg.synth.size / (4.0 * (1.0 + cfg.synth.freq_jitter));
        if (cfg.synth.freq_max > ceiling) cfg.synth.freq_max = ceiling;
    }
    const std::string manifest = generate_synthetic(cfg.synth, cfg.seed, out.string());
    cfg.manifest = manifest;
    write_text(out / "resolved.ini", serialize_run_config(cfg));
    std::cout << manifest << "\n";
    return 0;
}

int run_pretrain(RunConfig cfg, const std::string& resume) {
    require_manifest(cfg, "pretrain");
    const fs::path out = require_out_dir(cfg, "pretrain");
    const LoadedSamples data = load_samples(cfg, "all", "pretrain");
    write_text(out / "resolved.ini", serialize_run_config(cfg));
    const PretrainResult res =
        pretrain<float>(data.images, cfg.trainer, out, fs::path(resume), &std::cerr);
    double last = 0.0;
    if (!res.loss_history.empty()) last = res.loss_history.back();
    std::cerr << "pretrain: " << res.loss_history.size() << " steps, final loss " << last << "\n";
    std::cout << res.final_checkpoint.string() << "\n";
    return 0;
}

int run_extract(RunConfig cfg, const std::string& checkpoint_path, const std::string& out_path,
                const std::string& subset, std::int64_t batch_size) {
    require_manifest(cfg, "extract");
    if (checkpoint_path.empty()) throw ConfigError("extract: --checkpoint is required");
    if (out_path.empty()) throw ConfigError("extract: --out is required");
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const LoadedSamples data = load_samples(cfg, subset, "extract");
    const FeatureMatrix fm =
        extract_features<float>(ckpt, data.images, data.ids, data.labels, batch_size);
    const fs::path out = resolve_out(out_path);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    save_features(out.string(), fm);
    cfg.out_dir = out.string();
    write_text(out.string() + ".resolved.ini", serialize_run_config(cfg));
    std::cout << "wrote " << fm.n << " x " << fm.d << " features to " << out.string() << "\n";
    return 0;
}

int run_fit(RunConfig cfg, const std::string& features_path, const std::string& checkpoint_path,
            const std::string& classifier, std::int64_t n_per_class, const std::string& out_path) {
    const std::string name = evaldetail::normalize_classifier(classifier);
    const bool needs_images = name == "probe" || name == "baseline";

    FeatureMatrix fm;
    LoadedSamples data;
    Checkpoint ckpt;
    std::vector<int> labels;
    if (needs_images) {
        if (name == "probe" && checkpoint_path.empty()) {
            throw ConfigError("fit: probe needs --checkpoint and --manifest");
        }
        if (cfg.manifest.empty()) throw ConfigError("fit: " + name + " needs --manifest");
        if (!checkpoint_path.empty()) ckpt = load_checkpoint(checkpoint_path);
        data = load_samples(cfg, "labeled", "fit");
        labels = data.labels;
    } else {
        if (features_path.empty()) throw ConfigError("fit: --features is required for " + name);
        fm = load_features(features_path);
        validate_feature_matrix(fm, "fit");
        fm = labeled_rows(fm, "fit");
        labels = fm.labels;
    }

    std::vector<int> kept;
    const std::vector<int> y = densify(labels, kept);
    const int classes = static_cast<int>(kept.size());
    if (classes < 2) throw DataError("fit: need at least 2 classes");

    const std::uint64_t split_seed = derive_seed(cfg.seed, "split");
    const DataSplit split = stratified_split(y, SplitSpec{cfg.sweep.test_fraction, split_seed});
    std::vector<std::string> warnings = split.warnings;

    std::vector<std::int64_t> counts(static_cast<std::size_t>(classes), 0);
    for (std::int64_t i : split.train) ++counts[static_cast<std::size_t>(y[i])];
    const std::int64_t max_train = *std::max_element(counts.begin(), counts.end());
    const std::int64_t requested = n_per_class;
    const std::int64_t n = n_per_class < 1 ? max_train : n_per_class;
    if (n > max_train) {
        throw DataError("fit: n=" + std::to_string(n) +
                        " exceeds every class's training count (max " + std::to_string(max_train) +
                        ")");
    }
    const std::uint64_t cell_seed =
        derive_seed(cfg.seed, name, static_cast<std::uint64_t>(n), std::uint64_t{0});
    const std::vector<std::int64_t> sampled = sample_n_per_class(y, split.train, n, cell_seed);

    std::vector<int> y_train;
    for (std::int64_t i : sampled) y_train.push_back(y[i]);
    std::vector<int> y_test;
    for (std::int64_t i : split.test) y_test.push_back(y[i]);

    std::vector<int> pred;
    json model;
    Checkpoint model_ckpt;
    bool have_model_ckpt = false;
    if (needs_images) {
        std::vector<Image> train_images;
        for (std::int64_t i : sampled) {
            train_images.push_back(data.images[static_cast<std::size_t>(i)]);
        }
        std::vector<Image> test_images;
        for (std::int64_t i : split.test) {
            test_images.push_back(data.images[static_cast<std::size_t>(i)]);
        }
        const BackboneConfig arch = !checkpoint_path.empty()
                                        ? backbone_config_from_checkpoint(ckpt, "teacher.")
                                        : cfg.trainer.backbone;
        ProbeConfig pcfg = cfg.sweep.probe;
        pcfg.seed = cell_seed;
        pcfg.augment = pinned_probe_augment(cfg.trainer.augment, arch);
        const ProbeModel pm = name == "probe" ? fit_linear_probe(ckpt, train_images, y_train, pcfg)
                                              : fit_dl_baseline(arch, train_images, y_train, pcfg);
        pred = probe_predict(pm, test_images);
        for (const auto& w : pm.warnings) warnings.push_back(w);
        model_ckpt.seed = cell_seed;
        model_ckpt.step = static_cast<std::uint64_t>(pm.epochs);
        model_ckpt.config_echo = name;
        store_params_in_checkpoint(model_ckpt, "backbone.", pm.backbone);
        const auto probe_dim = static_cast<std::int64_t>(pm.fc_w.size()) / pm.num_classes;
        model_ckpt.add("fc.w", {probe_dim, pm.num_classes}, pm.fc_w);
        model_ckpt.add("fc.b", {pm.num_classes}, pm.fc_b);
        have_model_ckpt = true;
    } else {
        LabeledSet train;
        train.x = evaldetail::gather_rows(fm, sampled);
        train.y = y_train;
        const FeaturePipeline pipe = fit_feature_pipeline(train.x);
        train.x = apply_feature_pipeline(pipe, train.x);
        const Mat x_test = apply_feature_pipeline(pipe, evaldetail::gather_rows(fm, split.test));
        if (name == "svm") {
            const SVMModel m = fit_svm_rbf(train, cfg.sweep.svm);
            pred = svm_predict(m, x_test);
            model["type"] = "svm";
            model["c"] = m.c;
            model["gamma"] = m.gamma;
            model["num_classes"] = m.num_classes;
            model["support_x"] = mat_to_json(m.support_x);
            json bins = json::array();
            for (const auto& b : m.binaries) {
                json jb;
                jb["alpha_y"] = b.alpha_y;
                jb["support"] = b.support;
                jb["bias"] = b.bias;
                jb["converged"] = b.converged;
                jb["final_violation"] = b.final_violation;
                bins.push_back(std::move(jb));
            }
            model["binaries"] = std::move(bins);
            model["pipeline"] = pipeline_to_json(pipe);
        } else if (name == "lr") {
            const LRModel m = fit_logreg(train, cfg.sweep.logreg);
            pred = logreg_predict(m, x_test);
            model["type"] = "lr";
            model["w"] = mat_to_json(m.w);
            model["b"] = m.b;
            model["num_classes"] = m.num_classes;
            model["converged"] = m.converged;
            model["final_grad_norm"] = m.final_grad_norm;
            model["pipeline"] = pipeline_to_json(pipe);
        } else {
            const KNNModel m = fit_knn(train, static_cast<int>(cfg.sweep.knn_k));
            pred = knn_predict(m, x_test);
            model["type"] = "knn";
            model["k"] = m.k;
            model["num_classes"] = m.num_classes;
            model["x"] = mat_to_json(m.x);
            model["y"] = m.y;
            model["pipeline"] = pipeline_to_json(pipe);
        }
    }

    const double acc = balanced_accuracy(y_test, pred, classes, &warnings);
    const Mat confusion = confusion_matrix(y_test, pred, classes);

    json metrics;
    metrics["classifier"] = name;
    metrics["requested_n"] = requested;
    metrics["n_per_class"] = n;
    metrics["seed"] = cfg.seed;
    metrics["split_seed"] = split_seed;
    metrics["cell_seed"] = cell_seed;
    metrics["num_classes"] = classes;
    metrics["kept_classes"] = kept;
    metrics["train_size"] = split.train.size();
    metrics["sampled_train_size"] = sampled.size();
    metrics["test_size"] = split.test.size();
    metrics["balanced_accuracy"] = acc;
    json conf = json::array();
    for (std::int64_t i = 0; i < confusion.rows; ++i) {
        json row = json::array();
        for (std::int64_t j = 0; j < confusion.cols; ++j) row.push_back(confusion(i, j));
        conf.push_back(std::move(row));
    }
    metrics["confusion"] = std::move(conf);
    metrics["warnings"] = warnings;

    std::cout << metrics.dump(2) << "\n";
    if (!out_path.empty()) {
        cfg.out_dir = out_path;
        const fs::path out = require_out_dir(cfg, "fit");
        write_text(out / "metrics.json", metrics.dump(2) + "\n");
        if (have_model_ckpt) {
            save_checkpoint((out / "model.ckpt").string(), model_ckpt);
        } else {
            write_text(out / "model.json", model.dump(2) + "\n");
        }
        write_text(out / "resolved.ini", serialize_run_config(cfg));
    }
    return 0;
}

int run_sweep_cmd(RunConfig cfg, const std::string& checkpoint_path,
                  const std::string& features_path) {
    const fs::path out = require_out_dir(cfg, "sweep");
    if (!features_path.empty() && !checkpoint_path.empty()) {
        throw ConfigError("sweep: pass either --checkpoint with --manifest or --features, not both");
    }

    SweepReport report;
    if (!features_path.empty()) {
        const FeatureMatrix fm = load_features(features_path);
        report = run_sweep(fm, cfg.sweep);
    } else {
        if (checkpoint_path.empty()) {
            throw ConfigError("sweep: --checkpoint with --manifest, or --features, is required");
        }
        require_manifest(cfg, "sweep");
        const Checkpoint ckpt = load_checkpoint(checkpoint_path);
        const LoadedSamples data = load_samples(cfg, "labeled", "sweep");
        cfg.sweep.probe.augment = pinned_probe_augment(
            cfg.trainer.augment, backbone_config_from_checkpoint(ckpt, "teacher."));
        report = run_sweep(ckpt, data.images, data.ids, data.labels, cfg.sweep);
    }

    write_text(out / "sweep.json", sweep_to_json(report).dump(2) + "\n");
    write_text(out / "sweep.csv", sweep_to_csv(report));
    write_text(out / "resolved.ini", serialize_run_config(cfg));
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << render_table(report);
    return 0;
}

int run_report(const std::string& sweep_path, const std::string& format) {
    std::ifstream in(sweep_path);
    if (!in) throw DataError(sweep_path + ": cannot open");
    SweepReport report;
    try {
        report = sweep_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw DataError(sweep_path + ": not a sweep report: " + e.what());
    }
    if (format == "csv") {
        std::cout << sweep_to_csv(report);
    } else {
        std::cout << render_table(report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-supervised representation learning and label-efficiency benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string checkpoint_path;
    std::string features_path;
    std::string resume_path;
    std::string subset = "labeled";
    std::string classifier;
    std::string report_path;
    std::string format = "table";
    std::int64_t n_per_class = 0;
    std::int64_t batch_size = 32;
    bool filter_flag = false;

    FlagBinder fl;

    auto* synth = app.add_subcommand("synth", "generate a synthetic striped-texture dataset");
    synth->add_option("--config", config_path, "INI config file");
    synth->add_option("--out", out_path, "output directory");
    fl.bind(synth, "--classes", "synth", "classes", "number of classes");
    fl.bind(synth, "--per-class", "synth", "per_class", "labeled images per class");
    fl.bind(synth, "--unlabeled-per-class", "synth", "unlabeled_per_class",
            "extra unlabeled images per class");
    fl.bind(synth, "--size", "synth", "size", "image side length");
    fl.bind(synth, "--freq-min", "synth", "freq_min", "lowest class frequency");
    fl.bind(synth, "--freq-max", "synth", "freq_max", "highest class frequency");
    fl.bind(synth, "--seed", "run", "seed", "generator seed");

    auto* pre = app.add_subcommand("pretrain", "self-supervised training on a manifest");
    pre->add_option("--config", config_path, "INI config file");
    pre->add_option("--out", out_path, "output directory");
    pre->add_option("--resume", resume_path, "checkpoint to resume from");
    fl.bind(pre, "--manifest,--data", "data", "manifest", "dataset manifest CSV");
    fl.bind(pre, "--resolution", "data", "resolution", "resize images on load");
    fl.bind(pre, "--steps", "trainer", "total_steps", "optimization steps");
    fl.bind(pre, "--batch-size", "trainer", "batch_size", "images per step");
    fl.bind(pre, "--lr", "trainer", "learning_rate", "learning rate");
    fl.bind(pre, "--optimizer", "trainer", "optimizer", "sgd or adam");
    fl.bind(pre, "--t-student", "trainer", "t_student", "student temperature");
    fl.bind(pre, "--t-teacher", "trainer", "t_teacher", "teacher temperature");
    fl.bind(pre, "--ema-base", "trainer", "ema_base", "teacher EMA at step 0");
    fl.bind(pre, "--ema-final", "trainer", "ema_final", "teacher EMA at the last step");
    fl.bind(pre, "--center-momentum", "trainer", "center_momentum", "center update momentum");
    fl.bind(pre, "--checkpoint-every", "trainer", "checkpoint_every",
            "checkpoint cadence in steps");
    fl.bind(pre, "--seed", "run", "seed", "training seed");
    fl.bind(pre, "--workers", "run", "workers", "worker thread count");

    auto* ext = app.add_subcommand("extract", "frozen-teacher features for manifest images");
    ext->add_option("--config", config_path, "INI config file");
    ext->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
    ext->add_option("--out", out_path, "output feature file");
    ext->add_option("--subset", subset, "labeled, unlabeled, or all")
        ->check(CLI::IsMember({"labeled", "unlabeled", "all"}));
    ext->add_option("--batch-size", batch_size, "inference batch size");
    fl.bind(ext, "--manifest,--data", "data", "manifest", "dataset manifest CSV");
    fl.bind(ext, "--resolution", "data", "resolution", "resize images on load");
    fl.bind(ext, "--workers", "run", "workers", "worker thread count");

    auto* fit = app.add_subcommand("fit", "train and score one classifier");
    fit->add_option("--config", config_path, "INI config file");
    fit->add_option("--features", features_path, "feature file from extract");
    fit->add_option("--checkpoint", checkpoint_path, "trained checkpoint (probe)");
    fit->add_option("--classifier", classifier, "svm, lr, knn, probe, or baseline")->required();
    fit->add_option("--n-per-class", n_per_class, "labeled samples per class (0: all)");
    fit->add_option("--out", out_path, "directory for metrics and the fitted model");
    fl.bind(fit, "--manifest,--data", "data", "manifest", "dataset manifest CSV (probe, baseline)");
    fl.bind(fit, "--resolution", "data", "resolution", "resize images on load");
    fl.bind(fit, "--test-fraction", "sweep", "test_fraction", "held-out fraction");
    fl.bind(fit, "--knn-k", "classifier", "knn_k", "neighbor count for knn");
    fl.bind(fit, "--seed", "run", "seed", "protocol seed");
    fl.bind(fit, "--workers", "run", "workers", "worker thread count");

    auto* swp = app.add_subcommand("sweep", "label-efficiency protocol over (classifier, n)");
    swp->add_option("--config", config_path, "INI config file");
    swp->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
    swp->add_option("--features", features_path, "feature file (svm, lr, knn only)");
    swp->add_option("--out", out_path, "output directory");
    swp->add_flag("--filter", filter_flag, "keep only classes with enough training samples");
    fl.bind(swp, "--manifest,--data", "data", "manifest", "dataset manifest CSV");
    fl.bind(swp, "--resolution", "data", "resolution", "resize images on load");
    fl.bind(swp, "--n-grid", "sweep", "grid", "comma-separated n-per-class grid");
    fl.bind(swp, "--repeats", "sweep", "repeats", "repeats per cell");
    fl.bind(swp, "--baseline-repeats", "sweep", "baseline_repeats", "repeats for baseline cells");
    fl.bind(swp, "--classifiers", "sweep", "classifiers", "comma-separated classifier list");
    fl.bind(swp, "--min-train", "sweep", "min_train_per_class", "class filter threshold");
    fl.bind(swp, "--test-fraction", "sweep", "test_fraction", "held-out fraction");
    fl.bind(swp, "--knn-k", "classifier", "knn_k", "neighbor count for knn");
    fl.bind(swp, "--seed", "run", "seed", "protocol seed");
    fl.bind(swp, "--workers", "run", "workers", "worker thread count");

    auto* rep = app.add_subcommand("report", "render a saved sweep");
    rep->add_option("--sweep,--sweep-json", report_path, "sweep.json from a sweep run")->required();
    rep->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::vector<IniEntry> flag_entries = fl.entries();
    if (filter_flag) flag_entries.push_back({"sweep", "filter", "true", 0});
    if (!out_path.empty() && (synth->parsed() || pre->parsed() || swp->parsed())) {
        flag_entries.push_back({"output", "dir", out_path, 0});
    }

    try {
        if (rep->parsed()) return run_report(report_path, format);
        RunConfig cfg = assemble_config(config_path, flag_entries);
        if (synth->parsed()) return run_synth(std::move(cfg), synth->count("--freq-max") > 0);
        if (pre->parsed()) return run_pretrain(std::move(cfg), resume_path);
        if (ext->parsed()) {
            return run_extract(std::move(cfg), checkpoint_path, out_path, subset, batch_size);
        }
        if (fit->parsed()) {
            return run_fit(std::move(cfg), features_path, checkpoint_path, classifier, n_per_class,
                           out_path);
        }
        if (swp->parsed()) return run_sweep_cmd(std::move(cfg), checkpoint_path, features_path);
        std::cerr << "error: usage: no command selected\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 4;
    } catch (const ShapeError& e) {
        std::cerr << "error: shape: " << e.what() << "\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
