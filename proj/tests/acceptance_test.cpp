// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one test per criterion, each printing a pass/fail line.
// Criteria 7 and 8 run the directional training experiments over three seeds
// and dominate the suite's runtime.
#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "rid/checkpoint.hpp"
#include "rid/config.hpp"
#include "rid/evaluate.hpp"
#include "rid/pretrain.hpp"
#include "rid/runner.hpp"
#include "rid/strategies.hpp"

using namespace rid;
namespace fs = std::filesystem;

namespace {

void verdict(int criterion, const std::string& what) {
    std::printf("[%s] criterion %2d: %s\n",
                ::testing::Test::HasFailure() ? "FAIL" : "PASS", criterion, what.c_str());
    std::fflush(stdout);
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Max finite-difference error over the given parameter tensors against the
/// loss closure, one parameter at a time.
double grad_check_params(const std::vector<Tensor*>& params,
                         const std::function<Tensor()>& loss_fn, double eps = 1e-6) {
    double worst = 0.0;
    for (Tensor* target : params) {
        const Tensor saved = *target;
        auto f = [&](const Tensor& x) {
            *target = x;
            Tensor loss = loss_fn();
            *target = saved;
            return loss;
        };
        worst = std::max(worst, finite_diff_check(f, saved.deep_copy(), eps));
        *target = saved;
    }
    return worst;
}

Condition make_condition(int dim, uint64_t seed) {
    Condition c;
    c.class_id = 0;
    c.style = 0.5;
    c.embedding = rid::detail::condition_embedding(0, 0.5, dim, seed);
    return c;
}

std::vector<double> flat_params(Denoiser& m) {
    std::vector<double> out;
    for (auto& [name, p] : m.named_params()) out.insert(out.end(), p->vec().begin(), p->vec().end());
    return out;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------
// Shared desk-scale workbench for the directional experiments (criteria 7, 8).
// ---------------------------------------------------------------------------

struct Workbench {
    Corpus corpus;
    NoiseSchedule sched;
    RewardSet rewards;
    std::map<uint64_t, Denoiser> pretrained;

    static Workbench& instance() {
        static Workbench w = [] {
            Workbench wb{generate_corpus(1000, 4, 8, 8, 0.25),
                         build_schedule(10, 0.02, 0.25),
                         // Training-reward JPEG quality 10 gives the
                         // compressibility objective wide zero basins at desk
                         // scale; evaluation stays at quality 80.
                         make_reward_set(2000, JpegConfig{10, 1.0}),
                         {}};
            for (uint64_t seed : {11ull, 12ull, 13ull}) {
                DenoiserConfig cfg{.img_h = 16, .img_w = 16, .hidden = 256, .n_hidden = 3,
                                   .time_dim = 32, .cond_dim = 16};
                rng::Stream init = rng::Stream::named(seed, "model-init");
                Denoiser model(cfg, wb.sched.steps, init);
                PretrainOptions opt{.epochs = 80, .batch = 16, .lr = 0.2, .momentum = 0.9, .seed = seed};
                pretrain(model, wb.corpus, wb.sched, opt);
                wb.pretrained.emplace(seed, std::move(model));
            }
            return wb;
        }();
        return w;
    }
};

TaskOptions task_opt(Method m, RewardKind r, int epochs, int batch, double lr) {
    TaskOptions t;
    t.method = m;
    t.reward = r;
    t.epochs = epochs;
    t.batch = batch;
    t.lr = lr;
    t.lambda = 0.1;
    t.ema_momentum = 0.99;
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(Acceptance, C01_GradientSuite) {
    const auto t0 = std::chrono::steady_clock::now();
    DenoiserConfig cfg{.img_h = 8, .img_w = 8, .hidden = 6, .n_hidden = 2, .time_dim = 4, .cond_dim = 3};
    NoiseSchedule sched = build_schedule(4, 0.02, 0.25);
    RewardSet rewards = make_reward_set(2000, JpegConfig{80, 1.0}, 8, 8, 3);

    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const uint64_t s = 100 + static_cast<uint64_t>(inst);
        rng::Stream init(s);
        Denoiser model(cfg, sched.steps, init);
        rng::Stream li(s + 1);
        model.expand_all_layers(2, li);
        // Give the fresh pair nonzero B so gradients exercise both factors.
        for (auto& l : model.layers())
            for (auto& v : l.group.pairs.back().B.mut()) v = 0.1 * li.uniform(-1.0, 1.0);

        Condition cond = make_condition(3, s + 2);
        rng::Stream r(s + 3);
        Tensor img({8, 8}, r.gaussians(64));
        Tensor target({8, 8}, r.gaussians(64));
        Tensor z1({8, 8}, r.gaussians(64));

        // Rotate the parameter under test across layers and instances.
        auto trainable = model.trainable_params(1);
        std::vector<Tensor*> probe{trainable[static_cast<size_t>(inst) % trainable.size()]};

        // (a) denoiser forward
        worst = std::max(worst, grad_check_params(
            probe, [&] { return mse(model.forward(img, 2, cond.embedding_tensor()), target); }));

        // (b) rewards w.r.t. the image
        Tensor im2({8, 8}, r.gaussians(64));
        for (auto& v : im2.mut()) v = 0.5 + 0.2 * v;
        worst = std::max(worst, finite_diff_check(
            [&](const Tensor& x) { return rewards.smooth.value(x, cond); }, im2, 1e-6));
        worst = std::max(worst, finite_diff_check(
            [&](const Tensor& x) { return rewards.pref.value(x, cond); }, im2, 1e-6));
        worst = std::max(worst, finite_diff_check(
            [&](const Tensor& x) { return rewards.compress.value(x, cond); }, im2, 1e-6));

        // (c) full RID loss from a fixed z1: reward plus distillation against
        //     a diverged teacher, gradients truncated at z1 by construction.
        Denoiser teacher = model.clone();
        for (auto& [n, p] : teacher.named_params())
            for (auto& v : p->mut()) v += 0.05 * r.gaussian();
        Tensor teacher_img = denoise_final_step(teacher, z1, cond, sched);
        auto rid_loss = [&] {
            Tensor student_img = denoise_final_step(model, z1, cond, sched);
            Tensor l = scalar_mul(rewards.compress.value(student_img, cond), -1.0);
            return add(l, scalar_mul(sq_norm(student_img, teacher_img), 0.1));
        };
        worst = std::max(worst, grad_check_params(probe, rid_loss));
    }
    EXPECT_LE(worst, 1e-5);
    const double dt = elapsed_s(t0);
    EXPECT_LT(dt, 60.0);
    verdict(1, "gradient suite: max rel err " + std::to_string(worst) + ", " +
                   std::to_string(dt) + "s");
}

TEST(Acceptance, C02_AdapterGroupSuite) {
    // (a) zero-init no-op: sampled images bitwise identical across expansion.
    NoiseSchedule sched = build_schedule(8, 0.02, 0.25);
    DenoiserConfig cfg{.img_h = 16, .img_w = 16, .hidden = 32, .n_hidden = 2, .time_dim = 8, .cond_dim = 16};
    rng::Stream init(5);
    Denoiser model(cfg, sched.steps, init);
    Condition cond = make_condition(16, 7);
    rng::Stream zs(9);
    std::vector<Tensor> inits;
    for (int i = 0; i < 3; ++i) inits.push_back(Tensor({16, 16}, zs.gaussians(256)));

    std::vector<std::vector<double>> before;
    for (const auto& z : inits) before.push_back(ddim_sample(model, z, cond, sched, GradMode::None).image.vec());
    rng::Stream li(11);
    model.expand_all_layers(4, li);
    for (size_t i = 0; i < inits.size(); ++i) {
        const auto after = ddim_sample(model, inits[i], cond, sched, GradMode::None).image.vec();
        EXPECT_TRUE(bitwise_equal(before[i], after)) << "sample " << i;
    }

    // (b) freezing: a full fine-tuning epoch leaves W and frozen pairs intact.
    Corpus corpus = generate_corpus(60, 2, 4, 2, 0.25);
    RewardSet rewards = make_reward_set(2000, JpegConfig{});
    model.expand_all_layers(4, li);  // task 2 active; task 1 pairs now frozen
    std::vector<double> frozen_before;
    for (auto& l : model.layers()) {
        frozen_before.insert(frozen_before.end(), l.group.weight.vec().begin(), l.group.weight.vec().end());
        frozen_before.insert(frozen_before.end(), l.bias.vec().begin(), l.bias.vec().end());
        frozen_before.insert(frozen_before.end(), l.group.pairs[0].A.vec().begin(), l.group.pairs[0].A.vec().end());
        frozen_before.insert(frozen_before.end(), l.group.pairs[0].B.vec().begin(), l.group.pairs[0].B.vec().end());
    }
    rng::Stream noise(13);
    for (size_t start = 0; start < corpus.train_conditions.size(); start += 4) {
        std::vector<const Condition*> batch;
        for (size_t k = start; k < std::min(corpus.train_conditions.size(), start + 4); ++k)
            batch.push_back(&corpus.train_conditions[k]);
        baseline_step(model, batch, rewards.smooth, sched, 2, 1e-3, noise);
    }
    std::vector<double> frozen_after;
    for (auto& l : model.layers()) {
        frozen_after.insert(frozen_after.end(), l.group.weight.vec().begin(), l.group.weight.vec().end());
        frozen_after.insert(frozen_after.end(), l.bias.vec().begin(), l.bias.vec().end());
        frozen_after.insert(frozen_after.end(), l.group.pairs[0].A.vec().begin(), l.group.pairs[0].A.vec().end());
        frozen_after.insert(frozen_after.end(), l.group.pairs[0].B.vec().begin(), l.group.pairs[0].B.vec().end());
    }
    EXPECT_TRUE(bitwise_equal(frozen_before, frozen_after));

    // (c) merge equivalence on 100 random inputs.
    rng::Stream s(17);
    LoraGroup g;
    g.weight = Tensor({6, 5}, s.gaussians(30));
    for (int t = 0; t < 3; ++t) {
        LoraPair p;
        p.A = Tensor({6, 2}, s.gaussians(12));
        p.B = Tensor({2, 5}, s.gaussians(10));
        p.task_id = t + 1;
        g.pairs.push_back(p);
    }
    Tensor merged = merge_dense(g);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x({5}, s.gaussians(5));
        Tensor a = lora_forward(g, x);
        Tensor b = matmul(merged, x);
        for (int i = 0; i < 6; ++i)
            worst = std::max(worst, std::abs(a.at(static_cast<size_t>(i)) - b.at(static_cast<size_t>(i))));
    }
    EXPECT_LE(worst, 1e-12);
    verdict(2, "adapter group: zero-init no-op, freezing, merge within " + std::to_string(worst));
}

TEST(Acceptance, C03_EmaAlgebra) {
    NoiseSchedule sched = build_schedule(4, 0.02, 0.25);
    DenoiserConfig cfg{.img_h = 8, .img_w = 8, .hidden = 12, .n_hidden = 2, .time_dim = 4, .cond_dim = 4};
    rng::Stream init(19);
    Denoiser student(cfg, sched.steps, init);
    rng::Stream gap(23);

    double worst = 0.0;
    for (double alpha : {0.0, 0.5, 0.9, 1.0}) {
        Denoiser teacher = student.clone();
        std::vector<double> gap0;
        for (auto& [n, p] : teacher.named_params())
            for (auto& v : p->mut()) {
                const double g = gap.gaussian();
                v += g;
                gap0.push_back(g);
            }
        double factor = 1.0;
        for (int k = 1; k <= 50; ++k) {
            ema_update(teacher, student, alpha);
            factor *= alpha;
            size_t idx = 0;
            auto tp = teacher.named_params();
            auto sp = student.named_params();
            for (size_t i = 0; i < tp.size(); ++i)
                for (size_t j = 0; j < tp[i].second->vec().size(); ++j) {
                    const double g = tp[i].second->vec()[j] - sp[i].second->vec()[j];
                    worst = std::max(worst, std::abs(g - factor * gap0[idx]));
                    ++idx;
                }
        }
    }
    EXPECT_LE(worst, 1e-12);
    verdict(3, "EMA contraction within " + std::to_string(worst));
}

TEST(Acceptance, C04_OverheadAccounting) {
    // The paper's 2% claim: one extra teacher pass per sample at N=50.
    NoiseSchedule sched = build_schedule(50, 0.02, 0.25);
    DenoiserConfig cfg{.img_h = 8, .img_w = 8, .hidden = 8, .n_hidden = 2, .time_dim = 4, .cond_dim = 4};
    rng::Stream init(29);
    Denoiser model(cfg, sched.steps, init);
    rng::Stream li(31);
    model.expand_all_layers(2, li);
    Denoiser teacher = model.clone();
    RewardSet rewards = make_reward_set(2000, JpegConfig{}, 8, 8, 4);

    Condition cond = make_condition(4, 37);
    std::vector<const Condition*> batch{&cond, &cond, &cond};

    rng::Stream n1(41);
    model.reset_forward_count();
    baseline_step(model, batch, rewards.smooth, sched, 1, 1e-5, n1);
    const uint64_t base_fwd = model.forward_count();

    rng::Stream n2(43);
    model.reset_forward_count();
    teacher.reset_forward_count();
    rid_step(model, teacher, batch, rewards.smooth, sched, 1, 0.1, 0.99, 1e-5, n2);
    const uint64_t rid_fwd = model.forward_count() + teacher.forward_count();

    EXPECT_EQ(base_fwd, 50u * batch.size());
    EXPECT_EQ(rid_fwd, 51u * batch.size());
    const double ratio = static_cast<double>(rid_fwd) / static_cast<double>(base_fwd);
    EXPECT_EQ(ratio, 51.0 / 50.0);
    EXPECT_EQ(ratio, 1.02);

    rng::Stream n3(47);
    model.reset_forward_count();
    teacher.reset_forward_count();
    Tape tape;
    for (Tensor* p : model.trainable_params(1)) tape.watch(*p);
    fullstep_distill_loss(model, teacher, batch, sched, tape, n3);
    const double full_ratio =
        static_cast<double>(model.forward_count() + teacher.forward_count()) / static_cast<double>(base_fwd);
    EXPECT_EQ(full_ratio, 2.0);
    verdict(4, "overhead: RID/baseline = 1.02 at N=50, full-step = 2.0");
}

TEST(Acceptance, C05_ForgettingArithmetic) {
    const double f = forgetting_value({5.23, 6.07, 5.79}, true, 1);
    EXPECT_EQ(f, 6.07 - 5.79);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", f);
    EXPECT_STREQ(buf, "0.28");

    EXPECT_EQ(forgetting_value({1.0, 2.0, 3.0}, true, 0), 0.0);
    EXPECT_EQ(forgetting_value({7.0, 7.0, 7.0}, true, 0), 0.0);
    EXPECT_EQ(forgetting_value({9.0, 5.0, 1.0}, false, 0), 0.0);
    EXPECT_EQ(forgetting_value({10.0, 4.0, 7.0}, false, 0), 3.0);
    EXPECT_EQ(forgetting_value({10.0, 4.0, 7.0}, false, 1), 3.0);
    EXPECT_EQ(forgetting_value({1.0, 3.0, 2.0}, true, 0), 1.0);
    verdict(5, "forgetting reproduces the table arithmetic exactly");
}

TEST(Acceptance, C06_ReductionIdentities) {
    Corpus corpus = generate_corpus(70, 2, 4, 2, 0.25);
    NoiseSchedule sched = build_schedule(6, 0.02, 0.25);
    RewardSet rewards = make_reward_set(2000, JpegConfig{});
    DenoiserConfig cfg{.img_h = 16, .img_w = 16, .hidden = 24, .n_hidden = 2, .time_dim = 8, .cond_dim = 16};
    rng::Stream init(53);
    Denoiser base_model(cfg, sched.steps, init);
    rng::Stream li(59);
    base_model.expand_all_layers(4, li);

    std::vector<const Condition*> batch;
    for (size_t i = 0; i < 3; ++i) batch.push_back(&corpus.train_conditions[i]);

    {
        Denoiser a = base_model.clone();
        Denoiser b = base_model.clone();
        Denoiser teacher = b.clone();
        rng::Stream na = rng::Stream::named(61, "shared");
        rng::Stream nb = rng::Stream::named(61, "shared");
        baseline_step(a, batch, rewards.compress, sched, 1, 3e-4, na);
        rid_step(b, teacher, batch, rewards.compress, sched, 1, 0.0, 0.7, 3e-4, nb);
        EXPECT_TRUE(bitwise_equal(flat_params(a), flat_params(b)));
    }
    {
        Denoiser a = base_model.clone();
        Denoiser b = base_model.clone();
        rng::Stream na = rng::Stream::named(67, "shared");
        rng::Stream nb = rng::Stream::named(67, "shared");
        RewardTask smooth_unit = rewards.smooth;
        smooth_unit.scale = 1.0;
        baseline_step(a, batch, smooth_unit, sched, 1, 3e-4, na);
        joint_step(b, batch, rewards, {1.0, 0.0, 0.0}, sched, 1, 3e-4, nb);
        EXPECT_TRUE(bitwise_equal(flat_params(a), flat_params(b)));
    }
    verdict(6, "rid(lambda=0) == baseline and one-hot joint == baseline, bitwise");
}

TEST(Acceptance, C07_SingleTaskEfficacy) {
    const auto t0 = std::chrono::steady_clock::now();
    Workbench& w = Workbench::instance();

    bool all_pass = true;
    std::ostringstream detail;
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        const auto seed_t0 = std::chrono::steady_clock::now();
        Evaluator ev(w.corpus, w.rewards, w.sched, seed, 16, 80, eval_threads_from_env());

        auto single = [&](RewardKind kind, int epochs, double lr) {
            Denoiser model = w.pretrained.at(seed).clone();
            std::vector<TaskOptions> tasks{task_opt(Method::Baseline, kind, epochs, 32, lr)};
            return run_sequence(model, tasks, 4, false, w.corpus, w.sched, w.rewards, ev, seed);
        };

        SequenceResult rs = single(RewardKind::Smooth, 6, 0.05);
        SequenceResult rp = single(RewardKind::Pref, 8, 0.05);
        SequenceResult rc = single(RewardKind::Compress, 150, 0.01);

        const double ds = rs.history.records[1].smooth_score - rs.history.records[0].smooth_score;
        const double dp = rp.history.records[1].pref_score - rp.history.records[0].pref_score;
        const double dc = rc.history.records[1].lossy_bytes - rc.history.records[0].lossy_bytes;
        EXPECT_GT(ds, 0.0) << "seed " << seed;
        EXPECT_GT(dp, 0.0) << "seed " << seed;
        EXPECT_LT(dc, 0.0) << "seed " << seed;
        all_pass = all_pass && ds > 0 && dp > 0 && dc < 0;
        detail << " seed" << seed << "(smooth +" << ds << ", pref +" << dp << ", lossy " << dc << ")";
        EXPECT_LT(elapsed_s(seed_t0), 600.0) << "seed " << seed << " exceeded 10 min";
    }
    (void)all_pass;
    verdict(7, "single-task efficacy:" + detail.str() + ", total " +
                   std::to_string(elapsed_s(t0)) + "s");
}

TEST(Acceptance, C08_RilHeadline) {
    const auto t0 = std::chrono::steady_clock::now();
    Workbench& w = Workbench::instance();

    double mean_f_smooth_base = 0, mean_f_smooth_rid = 0;
    double mean_f_fd_base = 0, mean_f_fd_rid = 0;
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        const auto seed_t0 = std::chrono::steady_clock::now();
        Evaluator ev(w.corpus, w.rewards, w.sched, seed, 16, 80, eval_threads_from_env());

        auto sequence = [&](Method m, double lr_smooth, double lr_pref, double lr_compress,
                            int ep_smooth, int ep_pref, int ep_compress, int batch) {
            Denoiser model = w.pretrained.at(seed).clone();
            std::vector<TaskOptions> tasks{
                task_opt(m, RewardKind::Smooth, ep_smooth, batch, lr_smooth),
                task_opt(m, RewardKind::Pref, ep_pref, batch, lr_pref),
                task_opt(m, RewardKind::Compress, ep_compress, batch, lr_compress)};
            return run_sequence(model, tasks, 4, false, w.corpus, w.sched, w.rewards, ev, seed);
        };

        SequenceResult rb = sequence(Method::Baseline, 0.05, 0.05, 0.015, 6, 8, 400, 32);
        SequenceResult rr = sequence(Method::Rid, 0.01, 0.01, 0.01, 6, 8, 60, 8);

        // (a) each method reaches each task's target improvement at task end.
        for (const auto* r : {&rb, &rr}) {
            const auto& rec = r->history.records;
            EXPECT_GT(rec[1].smooth_score, rec[0].smooth_score) << "seed " << seed;
            EXPECT_GT(rec[2].pref_score, rec[0].pref_score) << "seed " << seed;
            EXPECT_LT(rec[3].lossy_bytes, rec[0].lossy_bytes) << "seed " << seed;
        }

        // (b) forgetting of the task-1 target and of feat_fd, per seed.
        const double fb_s = forgetting(rb.history, "smooth_score").value();
        const double fr_s = forgetting(rr.history, "smooth_score").value();
        const double fb_f = forgetting(rb.history, "feat_fd").value();
        const double fr_f = forgetting(rr.history, "feat_fd").value();
        std::printf("    seed %llu: forgetting smooth %.5f (rid %.5f), fd %.5f (rid %.5f)\n",
                    static_cast<unsigned long long>(seed), fb_s, fr_s, fb_f, fr_f);
        mean_f_smooth_base += fb_s / 3;
        mean_f_smooth_rid += fr_s / 3;
        mean_f_fd_base += fb_f / 3;
        mean_f_fd_rid += fr_f / 3;
        EXPECT_LT(elapsed_s(seed_t0), 2700.0) << "seed " << seed << " exceeded 45 min";
    }

    EXPECT_LT(mean_f_smooth_rid, mean_f_smooth_base);
    EXPECT_LT(mean_f_fd_rid, mean_f_fd_base);
    std::ostringstream detail;
    detail << "mean forgetting smooth " << mean_f_smooth_base << " (rid " << mean_f_smooth_rid
           << "), fd " << mean_f_fd_base << " (rid " << mean_f_fd_rid << "), total "
           << elapsed_s(t0) << "s";
    verdict(8, "RIL headline: " + detail.str());
}

TEST(Acceptance, C09_ModelSoup) {
    NoiseSchedule sched = build_schedule(6, 0.02, 0.25);
    DenoiserConfig cfg{.img_h = 16, .img_w = 16, .hidden = 24, .n_hidden = 2, .time_dim = 8, .cond_dim = 16};
    rng::Stream init(71);
    Denoiser m1(cfg, sched.steps, init);
    rng::Stream li(73);
    m1.expand_all_layers(4, li);
    Denoiser m2 = m1.clone();
    Denoiser m3 = m1.clone();
    rng::Stream perturb(79);
    for (auto& [n, p] : m2.named_params())
        for (auto& v : p->mut()) v += 0.1 * perturb.gaussian();
    for (auto& [n, p] : m3.named_params())
        for (auto& v : p->mut()) v += 0.1 * perturb.gaussian();

    Denoiser soup = model_soup({&m1, &m2, &m3}, {1.0, 0.0, 0.0});
    Denoiser dense1 = dense_model(m1);
    EXPECT_TRUE(bitwise_equal(flat_params(soup), flat_params(dense1)));

    RunConfig cfg_default = parse_config_text("[seed]\nvalue = 1\n");
    EXPECT_DOUBLE_EQ(cfg_default.soup.alpha, 0.333);
    EXPECT_DOUBLE_EQ(cfg_default.soup.beta, 0.333);
    verdict(9, "soup one-hot is bitwise model 1; defaults 0.333/0.333");
}

TEST(Acceptance, C10_Reproducibility) {
    const char* config_text = R"(
[seed]
value = 42
[corpus]
seed = 100
classes = 2
styles_per_class = 4
images_per_condition = 2
test_fraction = 0.25
[pretrain]
epochs = 1
batch = 8
lr = 0.1
hidden = 24
n_hidden = 2
time_dim = 8
ddim_steps = 6
[tasks]
task = reward=smooth method=rid epochs=1 batch=4 lr=1e-4
task = reward=compress method=baseline epochs=1 batch=4 lr=1e-3
[eval]
samples_per_condition = 2
)";
    RunConfig cfg = parse_config_text(config_text);
    const fs::path base = fs::path(::testing::TempDir()) / "acceptance_repro";
    fs::remove_all(base);
    const std::string out1 = (base / "a").string(), out2 = (base / "b").string();
    ASSERT_EQ(cmd_run(cfg, out1, false), 0);
    ASSERT_EQ(cmd_run(cfg, out2, false), 0);

    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    EXPECT_EQ(slurp(out1 + "/metrics.csv"), slurp(out2 + "/metrics.csv"));
    EXPECT_FALSE(slurp(out1 + "/metrics.csv").empty());

    // Round-trip identity for every emitted checkpoint.
    for (int t = 0; t <= 2; ++t) {
        const std::string p = out1 + "/checkpoints/task_" + std::to_string(t) + ".rid";
        LoadedCheckpoint lc = load_checkpoint(p);
        const std::string p2 = out1 + "/checkpoints/rt_" + std::to_string(t) + ".rid";
        save_checkpoint(p2, lc.model, lc.schedule, lc.beta_min, lc.beta_max);
        EXPECT_EQ(slurp(p), slurp(p2)) << p;
    }
    fs::remove_all(base);
    verdict(10, "bitwise-identical reruns; checkpoint round-trip identity");
}

TEST(Acceptance, C11_DiffJpegFidelity) {
    JpegConfig cfg{.quality = 80, .tau = 1.0};
    double worst_rel = 0.0;
    rng::Stream s(83);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor img = Tensor::zeros({16, 16});
        for (auto& v : img.mut()) v = s.uniform();
        Tensor soft = diff_jpeg(img, cfg);
        auto hard = oracle::jpeg_reconstruct(img, 80);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < img.numel(); ++i) {
            const double d = soft.at(static_cast<size_t>(i)) - hard[static_cast<size_t>(i)];
            num += d * d;
            den += hard[static_cast<size_t>(i)] * hard[static_cast<size_t>(i)];
        }
        worst_rel = std::max(worst_rel, std::sqrt(num / den));
    }
    EXPECT_LT(worst_rel, 0.05);

    RewardSet rewards = make_reward_set(2000, JpegConfig{80, 1.0});
    Condition cond = make_condition(16, 89);
    double worst_reward = 0.0;
    for (double v : {0.0, 0.2, 1.0 / 3.0, 0.5, 0.7, 1.0}) {
        Tensor img = Tensor::full({16, 16}, v);
        worst_reward = std::min(worst_reward, rewards.compress.value(img, cond).item());
    }
    EXPECT_GE(worst_reward, -1e-4);
    verdict(11, "diff JPEG within " + std::to_string(worst_rel) + " of the oracle; constant reward >= " +
                    std::to_string(worst_reward));
}
