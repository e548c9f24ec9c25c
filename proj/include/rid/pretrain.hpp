// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rid/corpus.hpp"
#include "rid/denoiser.hpp"
#include "rid/errors.hpp"
#include "rid/optim.hpp"
#include "rid/rng.hpp"
#include "rid/sampler.hpp"
#include "rid/schedule.hpp"
#include "rid/tensor.hpp"

namespace rid {

struct PretrainOptions {
    int epochs = 20;
    int batch = 32;
    double lr = 0.2;
    double momentum = 0.9;
    uint64_t seed = 0;
};

struct PretrainResult {
    double noise_mse_before = 0.0;  // predicted-noise MSE on the fixed probe set
    double noise_mse_after = 0.0;
    int steps = 0;
};

/// Predicted-noise MSE on a fixed probe set of (image, step, noise) draws.
inline double noise_mse_probe(const Denoiser& model, const Corpus& corpus,
                              const NoiseSchedule& sched, uint64_t seed, int n_samples = 64) {
    rng::Stream s = rng::Stream::named(seed, "pretrain-probe");
    double total = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const size_t ci = static_cast<size_t>(s.below(corpus.train_conditions.size()));
        const size_t ii = static_cast<size_t>(s.below(corpus.train_images[ci].size()));
        const int t = 1 + static_cast<int>(s.below(static_cast<uint64_t>(sched.steps)));
        Tensor eps({corpus.img_h, corpus.img_w}, s.gaussians(static_cast<size_t>(corpus.img_h * corpus.img_w)));
        Tensor x0 = to_model_space(corpus.train_images[ci][ii]);
        Tensor xt = q_sample(x0, t, eps, sched);
        Tensor pred = predict_noise(model, sched, xt, t, corpus.train_conditions[ci].embedding_tensor());
        total += mse(pred, eps).item();
    }
    return total / n_samples;
}

/// Pretraining over random (image, step, noise, condition) draws. The network
/// regresses the clean image; the predicted-noise MSE follows through the
/// DDIM identity and is what the probe reports.
inline PretrainResult pretrain(Denoiser& model, const Corpus& corpus, const NoiseSchedule& sched,
                               const PretrainOptions& opt) {
    if (corpus.train_conditions.empty()) throw contract_error("pretrain: empty corpus");
    if (opt.epochs < 0 || opt.batch < 1) throw contract_error("pretrain: bad epochs/batch");

    PretrainResult res;
    res.noise_mse_before = noise_mse_probe(model, corpus, sched, opt.seed);

    rng::Stream data = rng::Stream::named(opt.seed, "pretrain-data");
    rng::Stream noise = rng::Stream::named(opt.seed, "pretrain-noise");

    std::vector<std::pair<int, int>> samples;  // flat (condition, image) index
    for (size_t ci = 0; ci < corpus.train_conditions.size(); ++ci)
        for (size_t ii = 0; ii < corpus.train_images[ci].size(); ++ii)
            samples.emplace_back(static_cast<int>(ci), static_cast<int>(ii));

    std::vector<Tensor> centered;  // cache of model-space training images
    centered.reserve(samples.size());
    for (const auto& [ci, ii] : samples)
        centered.push_back(to_model_space(corpus.train_images[static_cast<size_t>(ci)][static_cast<size_t>(ii)]));

    MomentumSgd optimizer(opt.momentum);
    const int pixels = corpus.img_h * corpus.img_w;
    int step_index = 0;
    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        data.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch));
            Tape tape;
            auto params = model.pretrain_params();
            for (Tensor* p : params) tape.watch(*p);

            Tensor loss;
            for (size_t k = start; k < end; ++k) {
                const size_t idx = order[k];
                const int ci = samples[idx].first;
                const int t = 1 + static_cast<int>(noise.below(static_cast<uint64_t>(sched.steps)));
                Tensor eps({corpus.img_h, corpus.img_w}, noise.gaussians(static_cast<size_t>(pixels)));
                Tensor xt = q_sample(centered[idx], t, eps, sched);
                Tensor pred = model.forward(xt, t, corpus.train_conditions[static_cast<size_t>(ci)].embedding_tensor());
                Tensor sample_loss = mse(pred, centered[idx]);
                loss = (k == start) ? sample_loss : add(loss, sample_loss);
            }
            loss = scalar_mul(loss, 1.0 / static_cast<double>(end - start));
            if (!std::isfinite(loss.item()))
                throw training_error("pretrain: non-finite loss at step " + std::to_string(step_index));

            GradMap grads = tape.backward(loss);
            optimizer.step(grads, params, opt.lr);
            ++step_index;
        }
    }
    res.steps = step_index;
    res.noise_mse_after = noise_mse_probe(model, corpus, sched, opt.seed);
    return res;
}

}  // namespace rid
