// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rid/corpus.hpp"
#include "rid/denoiser.hpp"
#include "rid/errors.hpp"
#include "rid/evaluate.hpp"
#include "rid/lora.hpp"
#include "rid/optim.hpp"
#include "rid/rewards.hpp"
#include "rid/rng.hpp"
#include "rid/sampler.hpp"
#include "rid/schedule.hpp"
#include "rid/tensor.hpp"

namespace rid {

enum class Method { Baseline, Rid, RidFullstep, Joint };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Baseline: return "baseline";
        case Method::Rid: return "rid";
        case Method::RidFullstep: return "rid_fullstep";
        default: return "joint";
    }
}

inline Method method_from_name(const std::string& s) {
    if (s == "baseline") return Method::Baseline;
    if (s == "rid") return Method::Rid;
    if (s == "rid_fullstep") return Method::RidFullstep;
    if (s == "joint") return Method::Joint;
    throw config_error("unknown method '" + s + "'");
}

/// Per-task training settings. Epoch/lr/batch defaults depend on the method;
/// the config layer fills them.
struct TaskOptions {
    Method method = Method::Rid;
    RewardKind reward = RewardKind::Compress;
    int epochs = 10;
    int batch = 8;
    double lr = 5e-5;
    double lambda = 0.1;
    double ema_momentum = 0.99;
    double scale = 1.0;  // reward scale multiplier for this task
    std::array<double, 3> joint_weights{0.01, 2.0, 1.0};  // (smooth, pref, compress)
};

// ---------------------------------------------------------------------------
// EMA teacher.
// ---------------------------------------------------------------------------

/// Elementwise convex combination teacher = alpha*teacher + (1-alpha)*student
/// over every parameter. The teacher must mirror the student's names/shapes.
inline void ema_update(Denoiser& teacher, Denoiser& student, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw contract_error("ema_update: momentum must lie in [0,1]");
    auto tp = teacher.named_params();
    auto sp = student.named_params();
    if (tp.size() != sp.size()) throw contract_error("ema_update: parameter sets do not mirror");
    for (size_t i = 0; i < tp.size(); ++i) {
        if (tp[i].first != sp[i].first || tp[i].second->shape != sp[i].second->shape)
            throw contract_error("ema_update: parameter '" + tp[i].first + "' does not mirror");
        auto& t = tp[i].second->mut();
        const auto& s = sp[i].second->vec();
        for (size_t j = 0; j < t.size(); ++j) t[j] = alpha * t[j] + (1.0 - alpha) * s[j];
    }
}

// ---------------------------------------------------------------------------
// Training steps. Each draws one z_N per batch element from the given noise
// stream and backpropagates through the final sampling step only.
// ---------------------------------------------------------------------------

namespace detail {

inline Tensor draw_noise(const Denoiser& model, rng::Stream& noise) {
    const auto& cfg = model.config();
    return Tensor({cfg.img_h, cfg.img_w},
                  noise.gaussians(static_cast<size_t>(cfg.img_h) * cfg.img_w));
}

inline void check_finite_loss(const Tensor& loss, const char* who) {
    if (!std::isfinite(loss.item()))
        throw training_error(std::string(who) + ": non-finite loss");
}

}  // namespace detail

struct RidStepStats {
    double reward_term = 0.0;   // mean (scaled) reward over the batch
    double distill_term = 0.0;  // mean squared distance to the teacher image
};

/// Adapted-baseline step: maximize the reward through the truncated final
/// sampling step. Returns the loss value.
inline double baseline_step(Denoiser& model, const std::vector<const Condition*>& batch,
                            const RewardTask& reward, const NoiseSchedule& sched, int active_task,
                            double lr, rng::Stream& noise) {
    if (batch.empty()) throw contract_error("baseline_step: empty batch");
    Tape tape;
    auto params = model.trainable_params(active_task);
    for (Tensor* p : params) tape.watch(*p);

    Tensor loss;
    for (size_t b = 0; b < batch.size(); ++b) {
        Tensor z = detail::draw_noise(model, noise);
        SampleTrace t = ddim_sample(model, z, *batch[b], sched, GradMode::LastStep, &tape);
        Tensor l = scalar_mul(reward.training_value(t.image, *batch[b]), -1.0);
        loss = (b == 0) ? l : add(loss, l);
    }
    loss = scalar_mul(loss, 1.0 / static_cast<double>(batch.size()));
    detail::check_finite_loss(loss, "baseline_step");

    GradMap grads = tape.backward(loss);
    sgd_step(grads, params, lr);
    return loss.item();
}

/// RID step: reward plus lambda-weighted last-step distillation against the
/// EMA teacher from the student's own z1, then the EMA update after the
/// optimizer step. With lambda = 0 the distillation term is left out of the
/// loss graph, so parameter updates coincide exactly with baseline_step.
inline RidStepStats rid_step(Denoiser& model, Denoiser& teacher,
                             const std::vector<const Condition*>& batch,
                             const RewardTask& reward, const NoiseSchedule& sched, int active_task,
                             double lambda, double ema_momentum, double lr, rng::Stream& noise) {
    if (batch.empty()) throw contract_error("rid_step: empty batch");
    if (lambda < 0.0) throw contract_error("rid_step: lambda must be nonnegative");
    if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0))
        throw contract_error("rid_step: ema momentum must lie in [0,1]");

    Tape tape;
    auto params = model.trainable_params(active_task);
    for (Tensor* p : params) tape.watch(*p);

    RidStepStats stats;
    Tensor loss;
    for (size_t b = 0; b < batch.size(); ++b) {
        Tensor z = detail::draw_noise(model, noise);
        SampleTrace t =
            ddim_sample(model, z, *batch[b], sched, GradMode::LastStep, &tape, /*keep_latents=*/true);
        const Tensor& z1 = t.latents.back();  // already cut off from earlier steps

        Tensor r = reward.training_value(t.image, *batch[b]);
        stats.reward_term += r.item();
        Tensor l = scalar_mul(r, -1.0);

        Tensor teacher_img = denoise_final_step(teacher, z1, *batch[b], sched);
        Tensor dist = sq_norm(t.image, teacher_img);
        stats.distill_term += dist.item();
        if (lambda > 0.0) l = add(l, scalar_mul(dist, lambda));
        loss = (b == 0) ? l : add(loss, l);
    }
    loss = scalar_mul(loss, 1.0 / static_cast<double>(batch.size()));
    detail::check_finite_loss(loss, "rid_step");

    GradMap grads = tape.backward(loss);
    sgd_step(grads, params, lr);
    ema_update(teacher, model, ema_momentum);

    stats.reward_term /= static_cast<double>(batch.size());
    stats.distill_term /= static_cast<double>(batch.size());
    return stats;
}

/// Full-trajectory distillation ablation: the teacher denoises the same z_N
/// over all steps (2N denoiser applications per sample against the student's
/// N). Returns the tracked mean squared image distance.
inline Tensor fullstep_distill_loss(const Denoiser& student, const Denoiser& teacher,
                                    const std::vector<const Condition*>& batch,
                                    const NoiseSchedule& sched, Tape& tape, rng::Stream& noise) {
    if (batch.empty()) throw contract_error("fullstep_distill_loss: empty batch");
    Tensor loss;
    for (size_t b = 0; b < batch.size(); ++b) {
        Tensor z = detail::draw_noise(student, noise);
        SampleTrace s = ddim_sample(student, z, *batch[b], sched, GradMode::LastStep, &tape);
        SampleTrace t = ddim_sample(teacher, z, *batch[b], sched, GradMode::None);
        Tensor dist = sq_norm(s.image, t.image);
        loss = (b == 0) ? dist : add(loss, dist);
    }
    loss = scalar_mul(loss, 1.0 / static_cast<double>(batch.size()));
    detail::check_finite_loss(loss, "fullstep_distill_loss");
    return loss;
}

/// RID variant with the full-step distillation term (the instrumented
/// ablation): reward through the truncated last step plus lambda times the
/// full-trajectory teacher distance.
inline RidStepStats rid_fullstep_step(Denoiser& model, Denoiser& teacher,
                                      const std::vector<const Condition*>& batch,
                                      const RewardTask& reward, const NoiseSchedule& sched,
                                      int active_task, double lambda, double ema_momentum,
                                      double lr, rng::Stream& noise) {
    if (batch.empty()) throw contract_error("rid_fullstep_step: empty batch");
    Tape tape;
    auto params = model.trainable_params(active_task);
    for (Tensor* p : params) tape.watch(*p);

    RidStepStats stats;
    Tensor loss;
    for (size_t b = 0; b < batch.size(); ++b) {
        Tensor z = detail::draw_noise(model, noise);
        SampleTrace s = ddim_sample(model, z, *batch[b], sched, GradMode::LastStep, &tape);
        SampleTrace t = ddim_sample(teacher, z, *batch[b], sched, GradMode::None);

        Tensor r = reward.training_value(s.image, *batch[b]);
        stats.reward_term += r.item();
        Tensor dist = sq_norm(s.image, t.image);
        stats.distill_term += dist.item();

        Tensor l = scalar_mul(r, -1.0);
        if (lambda > 0.0) l = add(l, scalar_mul(dist, lambda));
        loss = (b == 0) ? l : add(loss, l);
    }
    loss = scalar_mul(loss, 1.0 / static_cast<double>(batch.size()));
    detail::check_finite_loss(loss, "rid_fullstep_step");

    GradMap grads = tape.backward(loss);
    sgd_step(grads, params, lr);
    ema_update(teacher, model, ema_momentum);

    stats.reward_term /= static_cast<double>(batch.size());
    stats.distill_term /= static_cast<double>(batch.size());
    return stats;
}

/// Joint-tuning step on the weighted sum of all three rewards. Zero-weight
/// rewards are skipped exactly, so one-hot weights reduce to baseline_step.
inline double joint_step(Denoiser& model, const std::vector<const Condition*>& batch,
                         const RewardSet& rewards, const std::array<double, 3>& weights,
                         const NoiseSchedule& sched, int active_task, double lr,
                         rng::Stream& noise) {
    if (batch.empty()) throw contract_error("joint_step: empty batch");
    Tape tape;
    auto params = model.trainable_params(active_task);
    for (Tensor* p : params) tape.watch(*p);

    Tensor loss;
    for (size_t b = 0; b < batch.size(); ++b) {
        Tensor z = detail::draw_noise(model, noise);
        SampleTrace t = ddim_sample(model, z, *batch[b], sched, GradMode::LastStep, &tape);

        Tensor weighted;
        bool have = false;
        const RewardKind kinds[3] = {RewardKind::Smooth, RewardKind::Pref, RewardKind::Compress};
        for (int k = 0; k < 3; ++k) {
            if (weights[static_cast<size_t>(k)] == 0.0) continue;
            Tensor term = scalar_mul(rewards.by_kind(kinds[k]).value(t.image, *batch[b]),
                                     weights[static_cast<size_t>(k)]);
            weighted = have ? add(weighted, term) : term;
            have = true;
        }
        Tensor l = have ? scalar_mul(weighted, -1.0) : scalar_mul(sum(t.image), 0.0);
        loss = (b == 0) ? l : add(loss, l);
    }
    loss = scalar_mul(loss, 1.0 / static_cast<double>(batch.size()));
    detail::check_finite_loss(loss, "joint_step");

    GradMap grads = tape.backward(loss);
    sgd_step(grads, params, lr);
    return loss.item();
}

// ---------------------------------------------------------------------------
// Model soup.
// ---------------------------------------------------------------------------

/// Collapses every adapter group into its dense weight; the result carries no
/// adapter pairs.
inline Denoiser dense_model(const Denoiser& m) {
    Denoiser d = m.clone();
    for (auto& l : d.layers()) {
        l.group.weight = merge_dense(l.group);
        l.group.pairs.clear();
    }
    return d;
}

/// Per-parameter convex combination of dense-merged models.
inline Denoiser model_soup(const std::vector<const Denoiser*>& models,
                           const std::vector<double>& coefficients) {
    if (models.empty() || models.size() != coefficients.size())
        throw contract_error("model_soup: coefficient count must match model count");
    double csum = 0.0;
    for (double c : coefficients) csum += c;
    if (std::abs(csum - 1.0) > 1e-9)
        throw contract_error("model_soup: coefficients must sum to 1");

    std::vector<Denoiser> dense;
    dense.reserve(models.size());
    for (const Denoiser* m : models) dense.push_back(dense_model(*m));

    Denoiser out = dense[0].clone();
    auto out_params = out.named_params();
    for (auto& [name, p] : out_params)
        for (auto& v : p->mut()) v = 0.0;

    for (size_t i = 0; i < dense.size(); ++i) {
        auto mp = dense[i].named_params();
        if (mp.size() != out_params.size())
            throw contract_error("model_soup: parameter sets do not match");
        for (size_t k = 0; k < mp.size(); ++k) {
            if (mp[k].first != out_params[k].first ||
                mp[k].second->shape != out_params[k].second->shape)
                throw contract_error("model_soup: shape mismatch at '" + mp[k].first + "'");
            auto& acc = out_params[k].second->mut();
            const auto& src = mp[k].second->vec();
            const double c = coefficients[i];
            for (size_t j = 0; j < acc.size(); ++j) acc[j] += c * src[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// The incremental sequence.
// ---------------------------------------------------------------------------

struct SequenceResult {
    std::vector<Denoiser> checkpoints;  // one snapshot per task, 1..T
    MetricsHistory history;             // rows for task 0..T
};

using TaskSink = std::function<void(int task_index, const Denoiser& model, const EvalOutput& eval)>;

/// Runs the reward task sequence: expand the adapter group, train with the
/// task's method, snapshot, evaluate. Row 0 of the history is the pretrained
/// model. The RID teacher is re-initialized as a deep copy of the student at
/// each task start unless teacher_persist is set.
inline SequenceResult run_sequence(Denoiser& model, const std::vector<TaskOptions>& tasks,
                                   int lora_rank, bool teacher_persist, const Corpus& corpus,
                                   const NoiseSchedule& sched, const RewardSet& rewards,
                                   const Evaluator& evaluator, uint64_t run_seed,
                                   const TaskSink& sink = nullptr) {
    SequenceResult result;

    EvalOutput base_eval = evaluator.evaluate(model, 0);
    result.history.records.push_back(base_eval.record);
    if (sink) sink(0, model, base_eval);

    std::optional<Denoiser> teacher;
    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        const int task_index = static_cast<int>(ti) + 1;
        const TaskOptions& opt = tasks[ti];
        const std::string tag = "task" + std::to_string(task_index);
        rng::Stream init = rng::Stream::named(run_seed, tag + "-init");
        rng::Stream data = rng::Stream::named(run_seed, tag + "-data");
        rng::Stream noise = rng::Stream::named(run_seed, tag + "-noise");

        model.expand_all_layers(lora_rank, init);

        const bool uses_teacher = opt.method == Method::Rid || opt.method == Method::RidFullstep;
        if (uses_teacher) {
            if (!teacher_persist || !teacher.has_value()) {
                teacher = model.clone();
            } else {
                // Mirror the freshly expanded pairs into the persistent teacher.
                auto& tl = teacher->layers();
                auto& sl = model.layers();
                for (size_t li = 0; li < sl.size(); ++li) {
                    for (auto& p : tl[li].group.pairs) p.frozen = true;
                    const LoraPair& np = sl[li].group.pairs.back();
                    tl[li].group.pairs.push_back(
                        {np.A.deep_copy(), np.B.deep_copy(), np.task_id, np.frozen});
                }
            }
        }

        std::vector<size_t> order(corpus.train_conditions.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        RewardTask reward = rewards.by_kind(opt.reward);
        reward.scale = opt.scale;

        try {
            for (int epoch = 0; epoch < opt.epochs; ++epoch) {
                data.shuffle(order);
                for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch)) {
                    const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch));
                    std::vector<const Condition*> batch;
                    for (size_t k = start; k < end; ++k)
                        batch.push_back(&corpus.train_conditions[order[k]]);
                    switch (opt.method) {
                        case Method::Baseline:
                            baseline_step(model, batch, reward, sched, task_index, opt.lr, noise);
                            break;
                        case Method::Rid:
                            rid_step(model, *teacher, batch, reward, sched, task_index, opt.lambda,
                                     opt.ema_momentum, opt.lr, noise);
                            break;
                        case Method::RidFullstep:
                            rid_fullstep_step(model, *teacher, batch, reward, sched, task_index,
                                              opt.lambda, opt.ema_momentum, opt.lr, noise);
                            break;
                        case Method::Joint:
                            joint_step(model, batch, rewards, opt.joint_weights, sched, task_index,
                                       opt.lr, noise);
                            break;
                    }
                }
            }
        } catch (const training_error& e) {
            throw training_error("task " + std::to_string(task_index) + ": " + e.what());
        }

        result.history.activate_for_reward(opt.reward, task_index);
        EvalOutput ev = evaluator.evaluate(model, task_index);
        result.history.records.push_back(ev.record);
        if (sink) sink(task_index, model, ev);
        result.checkpoints.push_back(model.clone());
    }
    return result;
}

}  // namespace rid
