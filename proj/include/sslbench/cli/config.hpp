#ifndef SSLBENCH_CLI_CONFIG_HPP
#define SSLBENCH_CLI_CONFIG_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/eval/sweep.hpp"
#include "sslbench/io/synthetic.hpp"
#include "sslbench/train/dino.hpp"

namespace sslbench {

// Everything a run needs, file-configurable as INI sections. Command-line
// flags override file values; the fully resolved result is echoed into the
// output directory so any run can be regenerated exactly.
struct RunConfig {
    std::string manifest;
    int resolution = 0;  // 0 keeps source sizes
    SynthConfig synth;
    TrainerConfig trainer;
    SweepConfig sweep;
    std::string out_dir;
    std::uint64_t seed = 1;
    int workers = 0;  // 0 picks the hardware thread count

    RunConfig() {
        trainer.seed = seed;
        sweep.seed = seed;
    }
};

struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

namespace clidetail {

inline std::string ini_trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace clidetail

// Sections in brackets, key = value lines, # or ; comments. Syntax problems
// are collected and reported together.
inline std::vector<IniEntry> parse_ini_text(const std::string& text) {
    std::vector<IniEntry> entries;
    std::vector<std::string> faults;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = clidetail::ini_trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                faults.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = clidetail::ini_trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            faults.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        IniEntry e;
        e.section = section;
        e.key = clidetail::ini_trim(line.substr(0, eq));
        e.value = clidetail::ini_trim(line.substr(eq + 1));
        e.line = lineno;
        if (e.key.empty()) {
            faults.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        entries.push_back(std::move(e));
    }
    if (!faults.empty()) {
        std::string msg;
        for (const auto& f : faults) msg += (msg.empty() ? "" : "; ") + f;
        throw ConfigError(msg);
    }
    return entries;
}

inline std::vector<IniEntry> parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_ini_text(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace clidetail {

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline std::int64_t to_i64(const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::int64_t out = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("'" + v + "' is not an integer");
    }
}

inline std::uint64_t to_u64(const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t out = std::stoull(v, &pos);
        if (pos != v.size() || (!v.empty() && v[0] == '-')) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("'" + v + "' is not a non-negative integer");
    }
}

inline double to_dbl(const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("'" + v + "' is not a number");
    }
}

inline bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("expected true or false");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = ini_trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::vector<std::int64_t> to_i64_list(const std::string& v) {
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(v)) out.push_back(to_i64(item));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

// one registry row per "section.key"
inline const std::map<std::string, Setter>& config_bindings() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["data.manifest"] = [](RunConfig& c, const std::string& v) { c.manifest = v; };
        t["data.resolution"] = [](RunConfig& c, const std::string& v) {
            c.resolution = static_cast<int>(to_i64(v));
        };

        t["synth.classes"] = [](RunConfig& c, const std::string& v) {
            c.synth.classes = static_cast<int>(to_i64(v));
        };
        t["synth.per_class"] = [](RunConfig& c, const std::string& v) {
            c.synth.per_class = static_cast<int>(to_i64(v));
        };
        t["synth.unlabeled_per_class"] = [](RunConfig& c, const std::string& v) {
            c.synth.unlabeled_per_class = static_cast<int>(to_i64(v));
        };
        t["synth.size"] = [](RunConfig& c, const std::string& v) {
            c.synth.size = static_cast<int>(to_i64(v));
        };
        t["synth.freq_min"] = [](RunConfig& c, const std::string& v) { c.synth.freq_min = to_dbl(v); };
        t["synth.freq_max"] = [](RunConfig& c, const std::string& v) { c.synth.freq_max = to_dbl(v); };
        t["synth.freq_jitter"] = [](RunConfig& c, const std::string& v) {
            c.synth.freq_jitter = to_dbl(v);
        };
        t["synth.amplitude"] = [](RunConfig& c, const std::string& v) {
            c.synth.amplitude = to_dbl(v);
        };
        t["synth.class_dc_step"] = [](RunConfig& c, const std::string& v) {
            c.synth.class_dc_step = to_dbl(v);
        };
        t["synth.channel_gain_min"] = [](RunConfig& c, const std::string& v) {
            c.synth.channel_gain_min = to_dbl(v);
        };
        t["synth.channel_gain_max"] = [](RunConfig& c, const std::string& v) {
            c.synth.channel_gain_max = to_dbl(v);
        };
        t["synth.brightness_shift"] = [](RunConfig& c, const std::string& v) {
            c.synth.brightness_shift = to_dbl(v);
        };
        t["synth.pixel_noise"] = [](RunConfig& c, const std::string& v) {
            c.synth.pixel_noise = to_dbl(v);
        };

        t["backbone.patch"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.patch = to_i64(v);
        };
        t["backbone.dim"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.dim = to_i64(v);
            c.trainer.head.in_dim = c.trainer.backbone.dim;
        };
        t["backbone.blocks"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.blocks = to_i64(v);
        };
        t["backbone.heads"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.heads = to_i64(v);
        };
        t["backbone.mlp_ratio"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.mlp_ratio = to_dbl(v);
        };
        t["backbone.tau_init"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.tau_init = to_dbl(v);
        };
        t["backbone.in_channels"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.in_channels = to_i64(v);
        };
        t["backbone.pos_grid"] = [](RunConfig& c, const std::string& v) {
            c.trainer.backbone.pos_grid = to_i64(v);
        };

        t["head.hidden"] = [](RunConfig& c, const std::string& v) {
            c.trainer.head.hidden = to_i64(v);
        };
        t["head.bottleneck"] = [](RunConfig& c, const std::string& v) {
            c.trainer.head.bottleneck = to_i64(v);
        };
        t["head.k_out"] = [](RunConfig& c, const std::string& v) {
            c.trainer.head.k_out = to_i64(v);
        };

        auto bind_policy = [&t](const std::string& key, auto setter) {
            t["augment." + key] = [setter](RunConfig& c, const std::string& v) {
                setter(c.trainer.augment, v);
            };
        };
        bind_policy("n_global", [](AugmentPolicy& p, const std::string& v) {
            p.n_global = static_cast<int>(to_i64(v));
        });
        bind_policy("n_local", [](AugmentPolicy& p, const std::string& v) {
            p.n_local = static_cast<int>(to_i64(v));
        });
        bind_policy("global_size", [](AugmentPolicy& p, const std::string& v) {
            p.global_size = static_cast<int>(to_i64(v));
        });
        bind_policy("local_size", [](AugmentPolicy& p, const std::string& v) {
            p.local_size = static_cast<int>(to_i64(v));
        });
        bind_policy("global_area_min",
                    [](AugmentPolicy& p, const std::string& v) { p.global_area_min = to_dbl(v); });
        bind_policy("global_area_max",
                    [](AugmentPolicy& p, const std::string& v) { p.global_area_max = to_dbl(v); });
        bind_policy("local_area_min",
                    [](AugmentPolicy& p, const std::string& v) { p.local_area_min = to_dbl(v); });
        bind_policy("local_area_max",
                    [](AugmentPolicy& p, const std::string& v) { p.local_area_max = to_dbl(v); });
        bind_policy("aspect_min",
                    [](AugmentPolicy& p, const std::string& v) { p.aspect_min = to_dbl(v); });
        bind_policy("aspect_max",
                    [](AugmentPolicy& p, const std::string& v) { p.aspect_max = to_dbl(v); });
        bind_policy("enable_flip",
                    [](AugmentPolicy& p, const std::string& v) { p.enable_flip = to_bool(v); });
        bind_policy("p_hflip", [](AugmentPolicy& p, const std::string& v) { p.p_hflip = to_dbl(v); });
        bind_policy("p_vflip", [](AugmentPolicy& p, const std::string& v) { p.p_vflip = to_dbl(v); });
        bind_policy("enable_rotation",
                    [](AugmentPolicy& p, const std::string& v) { p.enable_rotation = to_bool(v); });
        bind_policy("p_rot90", [](AugmentPolicy& p, const std::string& v) { p.p_rot90 = to_dbl(v); });
        bind_policy("p_small_rot",
                    [](AugmentPolicy& p, const std::string& v) { p.p_small_rot = to_dbl(v); });
        bind_policy("small_rot_max_deg",
                    [](AugmentPolicy& p, const std::string& v) { p.small_rot_max_deg = to_dbl(v); });
        bind_policy("enable_jitter",
                    [](AugmentPolicy& p, const std::string& v) { p.enable_jitter = to_bool(v); });
        bind_policy("p_jitter", [](AugmentPolicy& p, const std::string& v) { p.p_jitter = to_dbl(v); });
        bind_policy("jitter_min",
                    [](AugmentPolicy& p, const std::string& v) { p.jitter_min = to_dbl(v); });
        bind_policy("jitter_max",
                    [](AugmentPolicy& p, const std::string& v) { p.jitter_max = to_dbl(v); });
        bind_policy("hue_max_shift",
                    [](AugmentPolicy& p, const std::string& v) { p.hue_max_shift = to_dbl(v); });
        bind_policy("enable_grayscale",
                    [](AugmentPolicy& p, const std::string& v) { p.enable_grayscale = to_bool(v); });
        bind_policy("p_grayscale",
                    [](AugmentPolicy& p, const std::string& v) { p.p_grayscale = to_dbl(v); });
        bind_policy("enable_blur",
                    [](AugmentPolicy& p, const std::string& v) { p.enable_blur = to_bool(v); });
        bind_policy("p_blur_global_first", [](AugmentPolicy& p, const std::string& v) {
            p.p_blur_global_first = to_dbl(v);
        });
        bind_policy("p_blur_global_rest", [](AugmentPolicy& p, const std::string& v) {
            p.p_blur_global_rest = to_dbl(v);
        });
        bind_policy("p_blur_local",
                    [](AugmentPolicy& p, const std::string& v) { p.p_blur_local = to_dbl(v); });
        bind_policy("blur_sigma_min",
                    [](AugmentPolicy& p, const std::string& v) { p.blur_sigma_min = to_dbl(v); });
        bind_policy("blur_sigma_max",
                    [](AugmentPolicy& p, const std::string& v) { p.blur_sigma_max = to_dbl(v); });
        bind_policy("enable_solarize",
                    [](AugmentPolicy& p, const std::string& v) { p.enable_solarize = to_bool(v); });
        bind_policy("p_solarize",
                    [](AugmentPolicy& p, const std::string& v) { p.p_solarize = to_dbl(v); });
        bind_policy("solarize_threshold",
                    [](AugmentPolicy& p, const std::string& v) { p.solarize_threshold = to_dbl(v); });

        t["trainer.t_student"] = [](RunConfig& c, const std::string& v) {
            c.trainer.t_student = to_dbl(v);
        };
        t["trainer.t_teacher"] = [](RunConfig& c, const std::string& v) {
            c.trainer.t_teacher = to_dbl(v);
        };
        t["trainer.ema_base"] = [](RunConfig& c, const std::string& v) {
            c.trainer.ema_base = to_dbl(v);
        };
        t["trainer.ema_final"] = [](RunConfig& c, const std::string& v) {
            c.trainer.ema_final = to_dbl(v);
        };
        t["trainer.center_momentum"] = [](RunConfig& c, const std::string& v) {
            c.trainer.center_momentum = to_dbl(v);
        };
        t["trainer.batch_size"] = [](RunConfig& c, const std::string& v) {
            c.trainer.batch_size = to_i64(v);
        };
        t["trainer.total_steps"] = [](RunConfig& c, const std::string& v) {
            c.trainer.total_steps = to_i64(v);
        };
        t["trainer.checkpoint_every"] = [](RunConfig& c, const std::string& v) {
            c.trainer.checkpoint_every = to_i64(v);
        };
        t["trainer.optimizer"] = [](RunConfig& c, const std::string& v) {
            if (v == "sgd") {
                c.trainer.opt_mode = OptimizerMode::SgdMomentum;
            } else if (v == "adam") {
                c.trainer.opt_mode = OptimizerMode::Adam;
            } else {
                throw std::invalid_argument("expected sgd or adam");
            }
        };
        t["trainer.learning_rate"] = [](RunConfig& c, const std::string& v) {
            c.trainer.learning_rate = to_dbl(v);
        };
        t["trainer.momentum"] = [](RunConfig& c, const std::string& v) {
            c.trainer.momentum = to_dbl(v);
        };
        t["trainer.adam_beta1"] = [](RunConfig& c, const std::string& v) {
            c.trainer.adam_beta1 = to_dbl(v);
        };
        t["trainer.adam_beta2"] = [](RunConfig& c, const std::string& v) {
            c.trainer.adam_beta2 = to_dbl(v);
        };
        t["trainer.weight_decay"] = [](RunConfig& c, const std::string& v) {
            c.trainer.weight_decay = to_dbl(v);
        };

        t["classifier.knn_k"] = [](RunConfig& c, const std::string& v) {
            c.sweep.knn_k = to_i64(v);
        };
        t["classifier.svm_c"] = [](RunConfig& c, const std::string& v) { c.sweep.svm.c = to_dbl(v); };
        t["classifier.svm_gamma"] = [](RunConfig& c, const std::string& v) {
            c.sweep.svm.gamma = to_dbl(v);
        };
        t["classifier.svm_tol"] = [](RunConfig& c, const std::string& v) {
            c.sweep.svm.tol = to_dbl(v);
        };
        t["classifier.svm_max_pair_steps"] = [](RunConfig& c, const std::string& v) {
            c.sweep.svm.max_pair_steps = to_i64(v);
        };
        t["classifier.lr_l2"] = [](RunConfig& c, const std::string& v) {
            c.sweep.logreg.l2 = to_dbl(v);
        };
        t["classifier.lr_grad_tol"] = [](RunConfig& c, const std::string& v) {
            c.sweep.logreg.grad_tol = to_dbl(v);
        };
        t["classifier.lr_max_iters"] = [](RunConfig& c, const std::string& v) {
            c.sweep.logreg.max_iters = to_i64(v);
        };
        t["classifier.lr_lbfgs_memory"] = [](RunConfig& c, const std::string& v) {
            c.sweep.logreg.lbfgs_memory = static_cast<int>(to_i64(v));
        };
        t["classifier.probe_lr"] = [](RunConfig& c, const std::string& v) {
            c.sweep.probe.lr = to_dbl(v);
        };
        t["classifier.probe_batch_size"] = [](RunConfig& c, const std::string& v) {
            c.sweep.probe.batch_size = to_i64(v);
        };
        t["classifier.probe_max_epochs"] = [](RunConfig& c, const std::string& v) {
            c.sweep.probe.max_epochs = to_i64(v);
        };
        t["classifier.probe_val_fraction"] = [](RunConfig& c, const std::string& v) {
            c.sweep.probe.val_fraction = to_dbl(v);
        };
        t["classifier.probe_min_rel_improvement"] = [](RunConfig& c, const std::string& v) {
            c.sweep.probe.min_rel_improvement = to_dbl(v);
        };

        t["sweep.grid"] = [](RunConfig& c, const std::string& v) { c.sweep.grid = to_i64_list(v); };
        t["sweep.repeats"] = [](RunConfig& c, const std::string& v) {
            c.sweep.repeats = to_i64(v);
        };
        t["sweep.baseline_repeats"] = [](RunConfig& c, const std::string& v) {
            c.sweep.baseline_repeats = to_i64(v);
        };
        t["sweep.classifiers"] = [](RunConfig& c, const std::string& v) {
            c.sweep.classifiers = split_list(v);
            if (c.sweep.classifiers.empty()) throw std::invalid_argument("empty list");
        };
        t["sweep.filter"] = [](RunConfig& c, const std::string& v) {
            c.sweep.filter_enabled = to_bool(v);
        };
        t["sweep.min_train_per_class"] = [](RunConfig& c, const std::string& v) {
            c.sweep.min_train_per_class = to_i64(v);
        };
        t["sweep.test_fraction"] = [](RunConfig& c, const std::string& v) {
            c.sweep.test_fraction = to_dbl(v);
        };

        t["output.dir"] = [](RunConfig& c, const std::string& v) { c.out_dir = v; };
        t["run.seed"] = [](RunConfig& c, const std::string& v) {
            c.seed = to_u64(v);
            c.trainer.seed = c.seed;
            c.sweep.seed = c.seed;
        };
        t["run.workers"] = [](RunConfig& c, const std::string& v) {
            c.workers = static_cast<int>(to_i64(v));
        };
        return t;
    }();
    return table;
}

}  // namespace clidetail

// Applies entries onto the config. Unknown keys and bad values are all
// collected and reported in one error. line 0 marks an entry that came from
// a command-line flag rather than a file.
inline void apply_config_entries(RunConfig& cfg, const std::vector<IniEntry>& entries) {
    const auto& table = clidetail::config_bindings();
    std::vector<std::string> faults;
    for (const auto& e : entries) {
        const std::string path = e.section + "." + e.key;
        const std::string where =
            e.line > 0 ? "line " + std::to_string(e.line) + ": " : "";
        const auto it = table.find(path);
        if (it == table.end()) {
            faults.push_back(where + "unknown key '" + path + "'");
            continue;
        }
        try {
            it->second(cfg, e.value);
        } catch (const std::exception& ex) {
            faults.push_back(where + "bad value for '" + path + "': " + ex.what());
        }
    }
    if (!faults.empty()) {
        std::string msg;
        for (const auto& f : faults) msg += (msg.empty() ? "" : "; ") + f;
        throw ConfigError(msg);
    }
}

inline RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    apply_config_entries(cfg, parse_ini_file(path));
    return cfg;
}

// Full echo: every key explicit, parseable by parse_ini_text.
inline std::string serialize_run_config(const RunConfig& c) {
    std::ostringstream out;
    auto dbl = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    auto boolean = [](bool v) { return v ? "true" : "false"; };

    out << "[data]\n";
    out << "manifest = " << c.manifest << "\n";
    out << "resolution = " << c.resolution << "\n\n";

    out << "[synth]\n";
    out << "classes = " << c.synth.classes << "\n";
    out << "per_class = " << c.synth.per_class << "\n";
    out << "unlabeled_per_class = " << c.synth.unlabeled_per_class << "\n";
    out << "size = " << c.synth.size << "\n";
    out << "freq_min = " << dbl(c.synth.freq_min) << "\n";
    out << "freq_max = " << dbl(c.synth.freq_max) << "\n";
    out << "freq_jitter = " << dbl(c.synth.freq_jitter) << "\n";
    out << "amplitude = " << dbl(c.synth.amplitude) << "\n";
    out << "class_dc_step = " << dbl(c.synth.class_dc_step) << "\n";
    out << "channel_gain_min = " << dbl(c.synth.channel_gain_min) << "\n";
    out << "channel_gain_max = " << dbl(c.synth.channel_gain_max) << "\n";
    out << "brightness_shift = " << dbl(c.synth.brightness_shift) << "\n";
    out << "pixel_noise = " << dbl(c.synth.pixel_noise) << "\n\n";

    out << "[backbone]\n";
    out << "patch = " << c.trainer.backbone.patch << "\n";
    out << "dim = " << c.trainer.backbone.dim << "\n";
    out << "blocks = " << c.trainer.backbone.blocks << "\n";
    out << "heads = " << c.trainer.backbone.heads << "\n";
    out << "mlp_ratio = " << dbl(c.trainer.backbone.mlp_ratio) << "\n";
    out << "tau_init = " << dbl(c.trainer.backbone.tau_init) << "\n";
    out << "in_channels = " << c.trainer.backbone.in_channels << "\n";
    out << "pos_grid = " << c.trainer.backbone.pos_grid << "\n\n";

    out << "[head]\n";
    out << "hidden = " << c.trainer.head.hidden << "\n";
    out << "bottleneck = " << c.trainer.head.bottleneck << "\n";
    out << "k_out = " << c.trainer.head.k_out << "\n\n";

    const AugmentPolicy& p = c.trainer.augment;
    out << "[augment]\n";
    out << "n_global = " << p.n_global << "\n";
    out << "n_local = " << p.n_local << "\n";
    out << "global_size = " << p.global_size << "\n";
    out << "local_size = " << p.local_size << "\n";
    out << "global_area_min = " << dbl(p.global_area_min) << "\n";
    out << "global_area_max = " << dbl(p.global_area_max) << "\n";
    out << "local_area_min = " << dbl(p.local_area_min) << "\n";
    out << "local_area_max = " << dbl(p.local_area_max) << "\n";
    out << "aspect_min = " << dbl(p.aspect_min) << "\n";
    out << "aspect_max = " << dbl(p.aspect_max) << "\n";
    out << "enable_flip = " << boolean(p.enable_flip) << "\n";
    out << "p_hflip = " << dbl(p.p_hflip) << "\n";
    out << "p_vflip = " << dbl(p.p_vflip) << "\n";
    out << "enable_rotation = " << boolean(p.enable_rotation) << "\n";
    out << "p_rot90 = " << dbl(p.p_rot90) << "\n";
    out << "p_small_rot = " << dbl(p.p_small_rot) << "\n";
    out << "small_rot_max_deg = " << dbl(p.small_rot_max_deg) << "\n";
    out << "enable_jitter = " << boolean(p.enable_jitter) << "\n";
    out << "p_jitter = " << dbl(p.p_jitter) << "\n";
    out << "jitter_min = " << dbl(p.jitter_min) << "\n";
    out << "jitter_max = " << dbl(p.jitter_max) << "\n";
    out << "hue_max_shift = " << dbl(p.hue_max_shift) << "\n";
    out << "enable_grayscale = " << boolean(p.enable_grayscale) << "\n";
    out << "p_grayscale = " << dbl(p.p_grayscale) << "\n";
    out << "enable_blur = " << boolean(p.enable_blur) << "\n";
    out << "p_blur_global_first = " << dbl(p.p_blur_global_first) << "\n";
    out << "p_blur_global_rest = " << dbl(p.p_blur_global_rest) << "\n";
    out << "p_blur_local = " << dbl(p.p_blur_local) << "\n";
    out << "blur_sigma_min = " << dbl(p.blur_sigma_min) << "\n";
    out << "blur_sigma_max = " << dbl(p.blur_sigma_max) << "\n";
    out << "enable_solarize = " << boolean(p.enable_solarize) << "\n";
    out << "p_solarize = " << dbl(p.p_solarize) << "\n";
    out << "solarize_threshold = " << dbl(p.solarize_threshold) << "\n\n";

    out << "[trainer]\n";
    out << "t_student = " << dbl(c.trainer.t_student) << "\n";
    out << "t_teacher = " << dbl(c.trainer.t_teacher) << "\n";
    out << "ema_base = " << dbl(c.trainer.ema_base) << "\n";
    out << "ema_final = " << dbl(c.trainer.ema_final) << "\n";
    out << "center_momentum = " << dbl(c.trainer.center_momentum) << "\n";
    out << "batch_size = " << c.trainer.batch_size << "\n";
    out << "total_steps = " << c.trainer.total_steps << "\n";
    out << "checkpoint_every = " << c.trainer.checkpoint_every << "\n";
    out << "optimizer = " << (c.trainer.opt_mode == OptimizerMode::Adam ? "adam" : "sgd") << "\n";
    out << "learning_rate = " << dbl(c.trainer.learning_rate) << "\n";
    out << "momentum = " << dbl(c.trainer.momentum) << "\n";
    out << "adam_beta1 = " << dbl(c.trainer.adam_beta1) << "\n";
    out << "adam_beta2 = " << dbl(c.trainer.adam_beta2) << "\n";
    out << "weight_decay = " << dbl(c.trainer.weight_decay) << "\n\n";

    out << "[classifier]\n";
    out << "knn_k = " << c.sweep.knn_k << "\n";
    out << "svm_c = " << dbl(c.sweep.svm.c) << "\n";
    out << "svm_gamma = " << dbl(c.sweep.svm.gamma) << "\n";
    out << "svm_tol = " << dbl(c.sweep.svm.tol) << "\n";
    out << "svm_max_pair_steps = " << c.sweep.svm.max_pair_steps << "\n";
    out << "lr_l2 = " << dbl(c.sweep.logreg.l2) << "\n";
    out << "lr_grad_tol = " << dbl(c.sweep.logreg.grad_tol) << "\n";
    out << "lr_max_iters = " << c.sweep.logreg.max_iters << "\n";
    out << "lr_lbfgs_memory = " << c.sweep.logreg.lbfgs_memory << "\n";
    out << "probe_lr = " << dbl(c.sweep.probe.lr) << "\n";
    out << "probe_batch_size = " << c.sweep.probe.batch_size << "\n";
    out << "probe_max_epochs = " << c.sweep.probe.max_epochs << "\n";
    out << "probe_val_fraction = " << dbl(c.sweep.probe.val_fraction) << "\n";
    out << "probe_min_rel_improvement = " << dbl(c.sweep.probe.min_rel_improvement) << "\n\n";

    out << "[sweep]\n";
    out << "grid = ";
    for (std::size_t i = 0; i < c.sweep.grid.size(); ++i) {
        out << (i > 0 ? "," : "") << c.sweep.grid[i];
    }
    out << "\n";
    out << "repeats = " << c.sweep.repeats << "\n";
    out << "baseline_repeats = " << c.sweep.baseline_repeats << "\n";
    out << "classifiers = ";
    for (std::size_t i = 0; i < c.sweep.classifiers.size(); ++i) {
        out << (i > 0 ? "," : "") << c.sweep.classifiers[i];
    }
    out << "\n";
    out << "filter = " << boolean(c.sweep.filter_enabled) << "\n";
    out << "min_train_per_class = " << c.sweep.min_train_per_class << "\n";
    out << "test_fraction = " << dbl(c.sweep.test_fraction) << "\n\n";

    out << "[output]\n";
    out << "dir = " << c.out_dir << "\n\n";

    out << "[run]\n";
    out << "seed = " << c.seed << "\n";
    out << "workers = " << c.workers << "\n";
    return out.str();
}

}  // namespace sslbench

#endif
