#ifndef SSLBENCH_EVAL_REPORT_HPP
#define SSLBENCH_EVAL_REPORT_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslbench/eval/sweep.hpp"

namespace sslbench {

namespace evaldetail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline nlohmann::json policy_to_json(const AugmentPolicy& p) {
    nlohmann::json j;
    j["n_global"] = p.n_global;
    j["n_local"] = p.n_local;
    j["global_size"] = p.global_size;
    j["local_size"] = p.local_size;
    j["global_area_min"] = p.global_area_min;
    j["global_area_max"] = p.global_area_max;
    j["local_area_min"] = p.local_area_min;
    j["local_area_max"] = p.local_area_max;
    j["aspect_min"] = p.aspect_min;
    j["aspect_max"] = p.aspect_max;
    j["enable_flip"] = p.enable_flip;
    j["p_hflip"] = p.p_hflip;
    j["p_vflip"] = p.p_vflip;
    j["enable_rotation"] = p.enable_rotation;
    j["p_rot90"] = p.p_rot90;
    j["p_small_rot"] = p.p_small_rot;
    j["small_rot_max_deg"] = p.small_rot_max_deg;
    j["enable_jitter"] = p.enable_jitter;
    j["p_jitter"] = p.p_jitter;
    j["jitter_min"] = p.jitter_min;
    j["jitter_max"] = p.jitter_max;
    j["hue_max_shift"] = p.hue_max_shift;
    j["enable_grayscale"] = p.enable_grayscale;
    j["p_grayscale"] = p.p_grayscale;
    j["enable_blur"] = p.enable_blur;
    j["p_blur_global_first"] = p.p_blur_global_first;
    j["p_blur_global_rest"] = p.p_blur_global_rest;
    j["p_blur_local"] = p.p_blur_local;
    j["blur_sigma_min"] = p.blur_sigma_min;
    j["blur_sigma_max"] = p.blur_sigma_max;
    j["enable_solarize"] = p.enable_solarize;
    j["p_solarize"] = p.p_solarize;
    j["solarize_threshold"] = p.solarize_threshold;
    return j;
}

inline AugmentPolicy policy_from_json(const nlohmann::json& j) {
    AugmentPolicy p;
    p.n_global = j.at("n_global").get<int>();
    p.n_local = j.at("n_local").get<int>();
    p.global_size = j.at("global_size").get<int>();
    p.local_size = j.at("local_size").get<int>();
    p.global_area_min = j.at("global_area_min").get<double>();
    p.global_area_max = j.at("global_area_max").get<double>();
    p.local_area_min = j.at("local_area_min").get<double>();
    p.local_area_max = j.at("local_area_max").get<double>();
    p.aspect_min = j.at("aspect_min").get<double>();
    p.aspect_max = j.at("aspect_max").get<double>();
    p.enable_flip = j.at("enable_flip").get<bool>();
    p.p_hflip = j.at("p_hflip").get<double>();
    p.p_vflip = j.at("p_vflip").get<double>();
    p.enable_rotation = j.at("enable_rotation").get<bool>();
    p.p_rot90 = j.at("p_rot90").get<double>();
    p.p_small_rot = j.at("p_small_rot").get<double>();
    p.small_rot_max_deg = j.at("small_rot_max_deg").get<double>();
    p.enable_jitter = j.at("enable_jitter").get<bool>();
    p.p_jitter = j.at("p_jitter").get<double>();
    p.jitter_min = j.at("jitter_min").get<double>();
    p.jitter_max = j.at("jitter_max").get<double>();
    p.hue_max_shift = j.at("hue_max_shift").get<double>();
    p.enable_grayscale = j.at("enable_grayscale").get<bool>();
    p.p_grayscale = j.at("p_grayscale").get<double>();
    p.enable_blur = j.at("enable_blur").get<bool>();
    p.p_blur_global_first = j.at("p_blur_global_first").get<double>();
    p.p_blur_global_rest = j.at("p_blur_global_rest").get<double>();
    p.p_blur_local = j.at("p_blur_local").get<double>();
    p.blur_sigma_min = j.at("blur_sigma_min").get<double>();
    p.blur_sigma_max = j.at("blur_sigma_max").get<double>();
    p.enable_solarize = j.at("enable_solarize").get<bool>();
    p.p_solarize = j.at("p_solarize").get<double>();
    p.solarize_threshold = j.at("solarize_threshold").get<double>();
    return p;
}

}  // namespace evaldetail

inline nlohmann::json sweep_to_json(const SweepReport& r) {
    nlohmann::json cfg;
    cfg["grid"] = r.config.grid;
    cfg["repeats"] = r.config.repeats;
    cfg["baseline_repeats"] = r.config.baseline_repeats;
    cfg["classifiers"] = r.config.classifiers;
    cfg["filter_enabled"] = r.config.filter_enabled;
    cfg["min_train_per_class"] = r.config.min_train_per_class;
    cfg["test_fraction"] = r.config.test_fraction;
    cfg["seed"] = r.config.seed;
    cfg["knn_k"] = r.config.knn_k;
    cfg["svm"] = {{"c", r.config.svm.c},
                  {"gamma", r.config.svm.gamma},
                  {"tol", r.config.svm.tol},
                  {"max_pair_steps", r.config.svm.max_pair_steps}};
    cfg["logreg"] = {{"l2", r.config.logreg.l2},
                     {"grad_tol", r.config.logreg.grad_tol},
                     {"max_iters", r.config.logreg.max_iters},
                     {"lbfgs_memory", r.config.logreg.lbfgs_memory}};
    cfg["probe"] = {{"lr", r.config.probe.lr},
                    {"batch_size", r.config.probe.batch_size},
                    {"max_epochs", r.config.probe.max_epochs},
                    {"val_fraction", r.config.probe.val_fraction},
                    {"min_rel_improvement", r.config.probe.min_rel_improvement},
                    {"augment", evaldetail::policy_to_json(r.config.probe.augment)}};

    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json jc;
        jc["classifier"] = c.classifier;
        jc["n"] = c.n;
        jc["skipped"] = c.skipped;
        if (c.skipped) jc["skip_reason"] = c.skip_reason;
        jc["seeds"] = c.seeds;
        jc["repeat_ids"] = c.repeat_ids;
        jc["accuracies"] = c.accuracies;
        jc["failures"] = c.failures;
        jc["mean"] = c.mean;
        jc["stddev"] = c.stddev;
        nlohmann::json conf = nlohmann::json::array();
        for (std::int64_t i = 0; i < c.confusion.rows; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::int64_t j = 0; j < c.confusion.cols; ++j) row.push_back(c.confusion(i, j));
            conf.push_back(row);
        }
        jc["confusion"] = conf;
        cells.push_back(jc);
    }

    nlohmann::json j;
    j["config"] = cfg;
    j["split_seed"] = r.split_seed;
    j["num_classes"] = r.num_classes;
    j["kept_classes"] = r.kept_classes;
    j["train_size"] = r.train_size;
    j["test_size"] = r.test_size;
    j["train_per_class"] = r.train_per_class;
    j["test_per_class"] = r.test_per_class;
    j["warnings"] = r.warnings;
    j["cells"] = cells;
    return j;
}

inline SweepReport sweep_from_json(const nlohmann::json& j) {
    SweepReport r;
    const auto& cfg = j.at("config");
    r.config.grid = cfg.at("grid").get<std::vector<std::int64_t>>();
    r.config.repeats = cfg.at("repeats").get<std::int64_t>();
    r.config.baseline_repeats = cfg.at("baseline_repeats").get<std::int64_t>();
    r.config.classifiers = cfg.at("classifiers").get<std::vector<std::string>>();
    r.config.filter_enabled = cfg.at("filter_enabled").get<bool>();
    r.config.min_train_per_class = cfg.at("min_train_per_class").get<std::int64_t>();
    r.config.test_fraction = cfg.at("test_fraction").get<double>();
    r.config.seed = cfg.at("seed").get<std::uint64_t>();
    r.config.knn_k = cfg.at("knn_k").get<std::int64_t>();
    r.config.svm.c = cfg.at("svm").at("c").get<double>();
    r.config.svm.gamma = cfg.at("svm").at("gamma").get<double>();
    r.config.svm.tol = cfg.at("svm").at("tol").get<double>();
    r.config.svm.max_pair_steps = cfg.at("svm").at("max_pair_steps").get<std::int64_t>();
    r.config.logreg.l2 = cfg.at("logreg").at("l2").get<double>();
    r.config.logreg.grad_tol = cfg.at("logreg").at("grad_tol").get<double>();
    r.config.logreg.max_iters = cfg.at("logreg").at("max_iters").get<std::int64_t>();
    r.config.logreg.lbfgs_memory = cfg.at("logreg").at("lbfgs_memory").get<int>();
    r.config.probe.lr = cfg.at("probe").at("lr").get<double>();
    r.config.probe.batch_size = cfg.at("probe").at("batch_size").get<std::int64_t>();
    r.config.probe.max_epochs = cfg.at("probe").at("max_epochs").get<std::int64_t>();
    r.config.probe.val_fraction = cfg.at("probe").at("val_fraction").get<double>();
    r.config.probe.min_rel_improvement = cfg.at("probe").at("min_rel_improvement").get<double>();
    r.config.probe.augment = evaldetail::policy_from_json(cfg.at("probe").at("augment"));

    r.split_seed = j.at("split_seed").get<std::uint64_t>();
    r.num_classes = j.at("num_classes").get<int>();
    r.kept_classes = j.at("kept_classes").get<std::vector<int>>();
    r.train_size = j.at("train_size").get<std::int64_t>();
    r.test_size = j.at("test_size").get<std::int64_t>();
    r.train_per_class = j.at("train_per_class").get<std::vector<std::int64_t>>();
    r.test_per_class = j.at("test_per_class").get<std::vector<std::int64_t>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& jc : j.at("cells")) {
        SweepCell c;
        c.classifier = jc.at("classifier").get<std::string>();
        c.n = jc.at("n").get<std::int64_t>();
        c.skipped = jc.at("skipped").get<bool>();
        if (c.skipped) c.skip_reason = jc.at("skip_reason").get<std::string>();
        c.seeds = jc.at("seeds").get<std::vector<std::uint64_t>>();
        c.repeat_ids = jc.at("repeat_ids").get<std::vector<std::int64_t>>();
        c.accuracies = jc.at("accuracies").get<std::vector<double>>();
        c.failures = jc.at("failures").get<std::vector<std::string>>();
        c.mean = jc.at("mean").get<double>();
        c.stddev = jc.at("stddev").get<double>();
        const auto& conf = jc.at("confusion");
        const auto rows = static_cast<std::int64_t>(conf.size());
        const auto cols = rows > 0 ? static_cast<std::int64_t>(conf.at(0).size()) : 0;
        c.confusion = Mat(rows, cols);
        for (std::int64_t i = 0; i < rows; ++i) {
            for (std::int64_t k = 0; k < cols; ++k) {
                c.confusion(i, k) = conf.at(static_cast<std::size_t>(i))
                                        .at(static_cast<std::size_t>(k))
                                        .get<double>();
            }
        }
        r.cells.push_back(std::move(c));
    }
    return r;
}

// Flat long-form table, one row per successful repeat.
inline std::string sweep_to_csv(const SweepReport& r) {
    std::string out = "classifier,n,repeat,balanced_accuracy\n";
    for (const auto& c : r.cells) {
        for (std::size_t i = 0; i < c.accuracies.size(); ++i) {
            out += c.classifier;
            out += ',';
            out += std::to_string(c.n);
            out += ',';
            out += std::to_string(c.repeat_ids[i]);
            out += ',';
            out += evaldetail::fmt_double(c.accuracies[i]);
            out += '\n';
        }
    }
    return out;
}

// One row per n, one column per classifier, mean(std) in each cell.
inline std::string render_table(const SweepReport& r) {
    std::vector<std::string> headers{"n"};
    for (const auto& name : r.config.classifiers) headers.push_back(name);

    std::vector<std::vector<std::string>> rows;
    for (std::int64_t n : r.config.grid) {
        std::vector<std::string> row{std::to_string(n)};
        for (const auto& name : r.config.classifiers) {
            std::string text = "-";
            for (const auto& c : r.cells) {
                if (c.classifier != name || c.n != n) continue;
                if (c.skipped) {
                    text = "skip";
                } else if (c.accuracies.empty()) {
                    text = "fail";
                } else {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.3f(%.3f)", c.mean, c.stddev);
                    text = buf;
                }
                break;
            }
            row.push_back(text);
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(headers.size());
    for (std::size_t j = 0; j < headers.size(); ++j) width[j] = headers[j].size();
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
    }
    auto emit = [&](const std::vector<std::string>& row) {
        std::string line;
        for (std::size_t j = 0; j < row.size(); ++j) {
            line += row[j];
            if (j + 1 < row.size()) line.append(width[j] - row[j].size() + 2, ' ');
        }
        return line + '\n';
    };
    std::string out = emit(headers);
    for (const auto& row : rows) out += emit(row);
    return out;
}

}  // namespace sslbench

#endif
