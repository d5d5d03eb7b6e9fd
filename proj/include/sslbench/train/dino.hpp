#pragma once

// Self-distillation training loop: student/teacher forward over multi-crop
// view sets, temperature-sharpened cross-entropy over view pairs, student
// backprop, teacher EMA, and centering of teacher logits.
//
// Determinism contract: every random decision derives from the root seed via
// named streams keyed by step, epoch, or batch position, so a run is a pure
// function of (config, data) and resuming from a checkpoint reproduces the
// uninterrupted trajectory bit-exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/optim.hpp"
#include "sslbench/core/params.hpp"
#include "sslbench/core/rng.hpp"
#include "sslbench/core/tensor.hpp"
#include "sslbench/image/augment.hpp"
#include "sslbench/image/image.hpp"
#include "sslbench/io/checkpoint.hpp"
#include "sslbench/nn/backbone.hpp"
#include "sslbench/nn/head.hpp"

namespace sslbench {

struct TrainerConfig {
    BackboneConfig backbone;
    HeadConfig head;
    AugmentPolicy augment;

    double t_student = 0.1;
    double t_teacher = 0.04;
    double ema_base = 0.996;
    double ema_final = 1.0;
    double center_momentum = 0.9;

    std::int64_t batch_size = 8;
    std::int64_t total_steps = 100;
    std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint

    OptimizerMode opt_mode = OptimizerMode::SgdMomentum;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double weight_decay = 0.0;

    std::uint64_t seed = 1;
};

inline void validate_trainer_config(const TrainerConfig& cfg) {
    validate_backbone_config(cfg.backbone);
    validate_head_config(cfg.head);
    validate_policy(cfg.augment);
    if (cfg.head.in_dim != cfg.backbone.dim) {
        throw ConfigError("trainer: head in_dim " + std::to_string(cfg.head.in_dim) +
                          " must equal backbone dim " + std::to_string(cfg.backbone.dim));
    }
    if (!(cfg.t_teacher > 0.0 && cfg.t_teacher < cfg.t_student)) {
        throw ConfigError("trainer: need 0 < teacher temperature < student temperature");
    }
    if (!(cfg.ema_base >= 0.0 && cfg.ema_base <= cfg.ema_final && cfg.ema_final <= 1.0)) {
        throw ConfigError("trainer: EMA schedule must satisfy 0 <= base <= final <= 1");
    }
    if (!(cfg.center_momentum >= 0.0 && cfg.center_momentum <= 1.0)) {
        throw ConfigError("trainer: center momentum must lie in [0,1]");
    }
    if (cfg.batch_size < 1) throw ConfigError("trainer: batch size must be >= 1");
    if (cfg.total_steps < 0) throw ConfigError("trainer: total steps must be >= 0");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("trainer: learning rate must be positive");
}

// Teacher EMA momentum, cosine from ema_base at step 0 to ema_final at the
// last step. Non-decreasing on [0, total_steps].
inline double ema_lambda_at(const TrainerConfig& cfg, std::int64_t step) {
    if (cfg.total_steps <= 0) return cfg.ema_final;
    const double t = std::clamp(static_cast<double>(step) / static_cast<double>(cfg.total_steps),
                                0.0, 1.0);
    const double w = (std::cos(std::numbers::pi * t) + 1.0) / 2.0;
    return cfg.ema_final - (cfg.ema_final - cfg.ema_base) * w;
}

template <typename T>
struct TrainerState {
    ParameterSet<T> student;
    ParameterSet<T> teacher;
    Tensor<T> center;
    OptimizerState<T> optimizer;
    std::int64_t step = 0;
    std::vector<double> loss_history;
    double entropy_sum = 0.0;

    double mean_entropy() const {
        return loss_history.empty() ? 0.0 : entropy_sum / static_cast<double>(loss_history.size());
    }
};

template <typename T>
struct ViewOutputs {
    // One batch x K_out probability matrix per view. Teacher entries cover
    // the global views only and carry no gradient graph.
    std::vector<Tensor<T>> student_probs;
    std::vector<Tensor<T>> teacher_probs;
};

struct StepMetrics {
    double loss = 0.0;
    double grad_norm = 0.0;
    double lambda = 0.0;
    double teacher_entropy = 0.0;
};

namespace traindetail {

template <typename T>
OptimizerState<T> make_optimizer(const TrainerConfig& cfg) {
    if (cfg.opt_mode == OptimizerMode::Adam) {
        return OptimizerState<T>::adam(static_cast<T>(cfg.learning_rate),
                                       static_cast<T>(cfg.adam_beta1),
                                       static_cast<T>(cfg.adam_beta2), T(1e-8),
                                       static_cast<T>(cfg.weight_decay));
    }
    return OptimizerState<T>::sgd(static_cast<T>(cfg.learning_rate),
                                  static_cast<T>(cfg.momentum),
                                  static_cast<T>(cfg.weight_decay));
}

inline std::string config_echo(const TrainerConfig& cfg) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "dim=%lld blocks=%lld heads=%lld patch=%lld k_out=%lld "
                  "t_s=%g t_t=%g ema=[%g,%g] m_c=%g batch=%lld steps=%lld lr=%g opt=%s",
                  static_cast<long long>(cfg.backbone.dim),
                  static_cast<long long>(cfg.backbone.blocks),
                  static_cast<long long>(cfg.backbone.heads),
                  static_cast<long long>(cfg.backbone.patch),
                  static_cast<long long>(cfg.head.k_out), cfg.t_student, cfg.t_teacher,
                  cfg.ema_base, cfg.ema_final, cfg.center_momentum,
                  static_cast<long long>(cfg.batch_size),
                  static_cast<long long>(cfg.total_steps), cfg.learning_rate,
                  cfg.opt_mode == OptimizerMode::Adam ? "adam" : "sgd");
    return std::string(buf);
}

}  // namespace traindetail

template <typename T>
TrainerState<T> init_trainer_state(const TrainerConfig& cfg) {
    validate_trainer_config(cfg);
    TrainerState<T> state;
    init_backbone_params(state.student, cfg.backbone, derive_seed(cfg.seed, "init"));
    init_head_params(state.student, cfg.head, derive_seed(cfg.seed, "init"));
    for (const auto& name : state.student.names()) {
        auto& copy = state.teacher.add(name, state.student.at(name).detach());
        copy.set_requires_grad(false);
    }
    state.center = Tensor<T>::zeros({cfg.head.k_out});
    state.optimizer = traindetail::make_optimizer<T>(cfg);
    return state;
}

// theta_t <- lambda * theta_t + (1 - lambda) * theta_s, elementwise.
template <typename T>
void ema_update(ParameterSet<T>& teacher, const ParameterSet<T>& student, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ema_update: lambda must lie in [0,1]");
    if (teacher.names() != student.names()) {
        throw ConfigError("ema_update: parameter sets are not structurally identical");
    }
    const T lam = static_cast<T>(lambda);
    for (auto& [name, pt] : teacher) {
        const auto& ps = student.at(name);
        if (pt.shape() != ps.shape()) {
            throw ConfigError("ema_update: shape mismatch for parameter '" + name + "'");
        }
        auto& tv = pt.mutable_values();
        const auto& sv = ps.values();
        for (std::size_t i = 0; i < tv.size(); ++i) tv[i] = lam * tv[i] + (T(1) - lam) * sv[i];
    }
}

// c <- m_c * c + (1 - m_c) * column mean of the raw teacher logits.
template <typename T>
void center_update(Tensor<T>& center, const Tensor<T>& teacher_logits, double m_c) {
    if (teacher_logits.ndim() != 2 || teacher_logits.extent(1) != center.numel()) {
        throw ShapeError("center_update: logits must be rows x " + std::to_string(center.numel()));
    }
    const std::int64_t rows = teacher_logits.extent(0);
    const std::int64_t k = teacher_logits.extent(1);
    const T mc = static_cast<T>(m_c);
    auto& c = center.mutable_values();
    const auto& l = teacher_logits.values();
    for (std::int64_t j = 0; j < k; ++j) {
        T s = T(0);
        for (std::int64_t r = 0; r < rows; ++r) s += l[static_cast<std::size_t>(r * k + j)];
        const T mean = s / static_cast<T>(rows);
        c[static_cast<std::size_t>(j)] = mc * c[static_cast<std::size_t>(j)] + (T(1) - mc) * mean;
    }
}

// Mean of the 12 pair cross-entropies (teacher global view g, student view v,
// v != g): -sum_k P_t log P_s, averaged flat over pairs and batch rows.
template <typename T>
Tensor<T> dino_loss(const ViewOutputs<T>& outs) {
    if (outs.teacher_probs.empty() || outs.student_probs.size() < 2) {
        throw UsageError("dino_loss: need at least one teacher view and two student views");
    }
    if (outs.teacher_probs.size() > outs.student_probs.size()) {
        throw UsageError("dino_loss: more teacher views than student views");
    }
    const std::int64_t rows = outs.student_probs[0].extent(0);
    Tensor<T> acc;
    std::int64_t pairs = 0;
    for (std::size_t g = 0; g < outs.teacher_probs.size(); ++g) {
        const auto& pt = outs.teacher_probs[g];
        if (pt.shape() != outs.student_probs[g].shape()) {
            throw ShapeError("dino_loss: teacher/student view shapes disagree");
        }
        auto pt_const = pt.detach();
        for (std::size_t v = 0; v < outs.student_probs.size(); ++v) {
            if (v == g) continue;
            auto ce = sum(mul(pt_const, log(clamp_min(outs.student_probs[v], T(1e-12)))));
            acc = (pairs == 0) ? ce : add(acc, ce);
            pairs += 1;
        }
    }
    if (pairs == 0) throw UsageError("dino_loss: view pairing produced no pairs");
    return mul_scalar(acc, -T(1) / static_cast<T>(pairs * rows));
}

namespace traindetail {

// Natural-log entropy averaged over probability rows.
template <typename T>
double mean_row_entropy(const std::vector<Tensor<T>>& probs) {
    double total = 0.0;
    std::int64_t rows = 0;
    for (const auto& p : probs) {
        const std::int64_t k = p.extent(p.ndim() - 1);
        const std::int64_t r = p.numel() / k;
        for (std::int64_t i = 0; i < r * k; ++i) {
            const double q = std::max(static_cast<double>(p.values()[static_cast<std::size_t>(i)]),
                                      1e-12);
            total -= q * std::log(q);
        }
        rows += r;
    }
    return rows == 0 ? 0.0 : total / static_cast<double>(rows);
}

template <typename T>
Tensor<T> forward_views(const std::vector<Image>& views, const ParameterSet<T>& params,
                        const TrainerConfig& cfg) {
    return projection_head(forward_backbone(views, params, cfg.backbone), params, cfg.head);
}

}  // namespace traindetail

// One optimization step over a batch of source images. image_ids seed the
// per-image augmentation streams; batch position disambiguates duplicates.
template <typename T>
StepMetrics train_step(TrainerState<T>& state, const TrainerConfig& cfg,
                          const std::vector<Image>& images,
                          const std::vector<std::int64_t>& image_ids) {
    if (images.empty() || images.size() != image_ids.size()) {
        throw UsageError("train_step: images and image_ids must be non-empty and equal-sized");
    }
    const auto b = static_cast<std::int64_t>(images.size());
    const std::int64_t n_views = cfg.augment.n_global + cfg.augment.n_local;

    // View slot v of every image, batched per slot so each forward sees
    // uniformly sized inputs.
    std::vector<std::vector<Image>> slots(static_cast<std::size_t>(n_views));
    for (auto& s : slots) s.reserve(static_cast<std::size_t>(b));
    for (std::int64_t i = 0; i < b; ++i) {
        Rng rng(derive_seed(cfg.seed, "augment", static_cast<std::uint64_t>(state.step),
                            static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(image_ids[static_cast<std::size_t>(i)])));
        auto views = multi_crop(images[static_cast<std::size_t>(i)], cfg.augment, rng);
        std::int64_t v = 0;
        for (auto& g : views.global_views) slots[static_cast<std::size_t>(v++)].push_back(std::move(g));
        for (auto& l : views.local_views) slots[static_cast<std::size_t>(v++)].push_back(std::move(l));
    }

    ViewOutputs<T> outs;
    Tensor<T> teacher_logits_all;
    {
        NoGradGuard ng;
        std::vector<Tensor<T>> teacher_logits;
        for (std::int64_t g = 0; g < cfg.augment.n_global; ++g) {
            teacher_logits.push_back(
                traindetail::forward_views(slots[static_cast<std::size_t>(g)], state.teacher, cfg));
        }
        teacher_logits_all = concat<T>(teacher_logits, 0);
        for (const auto& logits : teacher_logits) {
            outs.teacher_probs.push_back(
                softmax_t(sub(logits, state.center), static_cast<T>(cfg.t_teacher)));
        }
    }
    for (std::int64_t v = 0; v < n_views; ++v) {
        auto logits = traindetail::forward_views(slots[static_cast<std::size_t>(v)], state.student, cfg);
        outs.student_probs.push_back(softmax_t(logits, static_cast<T>(cfg.t_student)));
    }

    auto loss = dino_loss(outs);
    if (!all_finite(loss)) {
        throw NumericError("train_step: non-finite loss at step " + std::to_string(state.step));
    }

    state.student.zero_grad();
    backward(loss);
    double grad_sq = 0.0;
    for (const auto& [name, p] : state.student) {
        for (const T g : p.grad()) grad_sq += static_cast<double>(g) * static_cast<double>(g);
    }
    optimizer_step(state.optimizer, state.student);

    const double lambda = ema_lambda_at(cfg, state.step);
    ema_update(state.teacher, state.student, lambda);
    center_update(state.center, teacher_logits_all, cfg.center_momentum);

    StepMetrics metrics;
    metrics.loss = static_cast<double>(loss.item());
    metrics.grad_norm = std::sqrt(grad_sq);
    metrics.lambda = lambda;
    metrics.teacher_entropy = traindetail::mean_row_entropy(outs.teacher_probs);
    state.step += 1;
    state.loss_history.push_back(metrics.loss);
    state.entropy_sum += metrics.teacher_entropy;
    return metrics;
}

template <typename T>
Checkpoint trainer_checkpoint(const TrainerState<T>& state, const TrainerConfig& cfg) {
    Checkpoint ckpt;
    ckpt.seed = cfg.seed;
    ckpt.step = static_cast<std::uint64_t>(state.step);
    ckpt.config_echo = traindetail::config_echo(cfg);
    store_params_in_checkpoint(ckpt, "student.", state.student);
    store_params_in_checkpoint(ckpt, "teacher.", state.teacher);
    {
        std::vector<float> c(state.center.values().begin(), state.center.values().end());
        ckpt.add("center", state.center.shape(), c);
    }
    for (const auto& [name, buf] : state.optimizer.m) {
        ckpt.add("opt.m." + name, {static_cast<std::int64_t>(buf.size())},
                 std::vector<float>(buf.begin(), buf.end()));
    }
    for (const auto& [name, buf] : state.optimizer.v) {
        ckpt.add("opt.v." + name, {static_cast<std::int64_t>(buf.size())},
                 std::vector<float>(buf.begin(), buf.end()));
    }
    return ckpt;
}

template <typename T>
TrainerState<T> trainer_state_from_checkpoint(const Checkpoint& ckpt, const TrainerConfig& cfg) {
    TrainerState<T> state = init_trainer_state<T>(cfg);
    load_params_from_checkpoint(ckpt, "student.", state.student);
    load_params_from_checkpoint(ckpt, "teacher.", state.teacher);
    const auto* c = ckpt.find("center");
    if (c == nullptr || c->data.size() != state.center.values().size()) {
        throw DataError("checkpoint is missing a center vector of width " +
                        std::to_string(state.center.numel()));
    }
    std::copy(c->data.begin(), c->data.end(), state.center.mutable_values().begin());
    for (const auto& blob : ckpt.blobs) {
        if (blob.name.rfind("opt.m.", 0) == 0) {
            state.optimizer.m[blob.name.substr(6)].assign(blob.data.begin(), blob.data.end());
        } else if (blob.name.rfind("opt.v.", 0) == 0) {
            state.optimizer.v[blob.name.substr(6)].assign(blob.data.begin(), blob.data.end());
        }
    }
    state.step = static_cast<std::int64_t>(ckpt.step);
    state.optimizer.step_count = ckpt.step;
    return state;
}

// Deterministic batch schedule: epochs of a shuffled index permutation cut
// into non-straddling batches (drop-last), so the batch at step t is a pure
// function of (seed, pool size, batch size, t).
inline std::vector<std::int64_t> batch_indices_at(std::uint64_t seed, std::int64_t pool,
                                                  std::int64_t batch_size, std::int64_t step) {
    if (pool < 1) throw UsageError("batch_indices_at: empty pool");
    const std::int64_t per_epoch = std::max<std::int64_t>(pool / batch_size, 1);
    const std::int64_t epoch = step / per_epoch;
    const std::int64_t slot = step % per_epoch;
    std::vector<std::int64_t> order(static_cast<std::size_t>(pool));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    std::vector<std::int64_t> batch(static_cast<std::size_t>(batch_size));
    for (std::int64_t i = 0; i < batch_size; ++i) {
        batch[static_cast<std::size_t>(i)] =
            order[static_cast<std::size_t>((slot * batch_size + i) % pool)];
    }
    return batch;
}

struct PretrainResult {
    std::filesystem::path final_checkpoint;
    std::vector<double> loss_history;
};

// Runs (or resumes) the training loop over the image pool, appending one JSON
// line of metrics per step and checkpointing at the configured cadence.
template <typename T>
PretrainResult pretrain(const std::vector<Image>& pool, const TrainerConfig& cfg,
                        const std::filesystem::path& out_dir,
                        const std::filesystem::path& resume_from = {},
                        std::ostream* progress = nullptr) {
    validate_trainer_config(cfg);
    if (pool.empty()) throw DataError("pretrain: image pool is empty");
    std::filesystem::create_directories(out_dir);

    TrainerState<T> state;
    if (resume_from.empty()) {
        state = init_trainer_state<T>(cfg);
    } else {
        state = trainer_state_from_checkpoint<T>(load_checkpoint(resume_from.string()), cfg);
    }

    std::ofstream metrics_log(out_dir / "metrics.jsonl", std::ios::app);
    const auto n = static_cast<std::int64_t>(pool.size());

    while (state.step < cfg.total_steps) {
        const auto idx = batch_indices_at(cfg.seed, n, cfg.batch_size, state.step);
        std::vector<Image> batch;
        batch.reserve(idx.size());
        for (const auto i : idx) batch.push_back(pool[static_cast<std::size_t>(i)]);

        StepMetrics m;
        try {
            m = train_step(state, cfg, batch, idx);
        } catch (const NumericError& e) {
            const auto diag = out_dir / "diagnostic.ckpt";
            save_checkpoint(diag.string(), trainer_checkpoint(state, cfg));
            throw NumericError(std::string(e.what()) + "; diagnostic checkpoint written to " +
                               diag.string());
        }

        char line[256];
        std::snprintf(line, sizeof(line),
                      R"({"step":%lld,"loss":%.17g,"lambda":%.17g,"entropy":%.17g})",
                      static_cast<long long>(state.step - 1), m.loss, m.lambda, m.teacher_entropy);
        metrics_log << line << '\n';
        if (progress != nullptr && (state.step % 10 == 0 || state.step == cfg.total_steps)) {
            *progress << "step " << state.step << "/" << cfg.total_steps << " loss " << m.loss
                      << " entropy " << m.teacher_entropy << '\n';
        }

        if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 &&
            state.step < cfg.total_steps) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_%06lld.ckpt",
                          static_cast<long long>(state.step));
            save_checkpoint((out_dir / name).string(), trainer_checkpoint(state, cfg));
        }
    }

    PretrainResult result;
    result.final_checkpoint = out_dir / "final.ckpt";
    save_checkpoint(result.final_checkpoint.string(), trainer_checkpoint(state, cfg));
    result.loss_history = state.loss_history;
    return result;
}

}  // namespace sslbench
