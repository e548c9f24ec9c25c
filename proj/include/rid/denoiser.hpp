// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rid/errors.hpp"
#include "rid/lora.hpp"
#include "rid/rng.hpp"
#include "rid/tensor.hpp"

namespace rid {

struct DenoiserConfig {
    int img_h = 16;
    int img_w = 16;
    int hidden = 256;
    int n_hidden = 3;
    int time_dim = 32;
    int cond_dim = 16;
};

/// Conditional denoiser: an MLP over flattened latent + sinusoidal timestep
/// embedding + projected condition embedding. The network regresses the
/// clean image in centered space; predicted noise follows from the DDIM
/// identity (see predict_noise). Every linear layer carries a LoRA adapter
/// group; the timestep table is fixed.
class Denoiser {
public:
    struct Layer {
        std::string name;
        LoraGroup group;
        Tensor bias;
    };

    Denoiser(DenoiserConfig cfg, int schedule_steps, rng::Stream& init)
        : cfg_(cfg), steps_(schedule_steps) {
        const int pixels = cfg_.img_h * cfg_.img_w;
        const int input_dim = pixels + cfg_.time_dim + cfg_.cond_dim;
        add_layer("cond_proj", cfg_.cond_dim, cfg_.cond_dim, init);
        add_layer("in", cfg_.hidden, input_dim, init);
        for (int i = 1; i < cfg_.n_hidden; ++i)
            add_layer("mid" + std::to_string(i), cfg_.hidden, cfg_.hidden, init);
        add_layer("out", pixels, cfg_.hidden, init);
        build_time_table();
    }

    Denoiser(const Denoiser&) = delete;
    Denoiser& operator=(const Denoiser&) = delete;
    Denoiser(Denoiser&& o) noexcept
        : cfg_(o.cfg_),
          steps_(o.steps_),
          layers_(std::move(o.layers_)),
          time_table_(std::move(o.time_table_)),
          forwards_(o.forwards_.load(std::memory_order_relaxed)) {}
    Denoiser& operator=(Denoiser&& o) noexcept {
        cfg_ = o.cfg_;
        steps_ = o.steps_;
        layers_ = std::move(o.layers_);
        time_table_ = std::move(o.time_table_);
        forwards_.store(o.forwards_.load(std::memory_order_relaxed), std::memory_order_relaxed);
        return *this;
    }

    /// Deep copy of all parameters; the forward counter starts at zero.
    Denoiser clone() const {
        Denoiser d(cfg_, steps_);
        for (const auto& l : layers_) d.layers_.push_back({l.name, l.group.deep_copy(), l.bias.deep_copy()});
        d.build_time_table();
        return d;
    }

    const DenoiserConfig& config() const { return cfg_; }
    int schedule_steps() const { return steps_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    /// Predicted noise for one image at step t. Participates in whatever
    /// computation record the watched parameters belong to.
    Tensor forward(const Tensor& img, int t, const Tensor& cond_emb) const {
        if (img.numel() != cfg_.img_h * cfg_.img_w)
            throw dim_error("denoiser: image shape " + Tensor::shape_str(img.shape) +
                            " does not match configured " + std::to_string(cfg_.img_h) + "x" +
                            std::to_string(cfg_.img_w));
        if (t < 1 || t > steps_)
            throw contract_error("denoiser: step " + std::to_string(t) + " outside schedule");
        forwards_.fetch_add(1, std::memory_order_relaxed);

        Tensor x = reshape(img, {cfg_.img_h * cfg_.img_w});
        Tensor temb({cfg_.time_dim}, time_table_[static_cast<size_t>(t)]);
        Tensor cp = add(lora_forward(layers_[0].group, cond_emb), layers_[0].bias);
        Tensor h = concat({x, temb, cp});
        for (size_t i = 1; i + 1 < layers_.size(); ++i)
            h = silu(add(lora_forward(layers_[i].group, h), layers_[i].bias));
        const auto& out = layers_.back();
        Tensor eps = add(lora_forward(out.group, h), out.bias);
        return reshape(eps, {cfg_.img_h, cfg_.img_w});
    }

    uint64_t forward_count() const { return forwards_.load(std::memory_order_relaxed); }
    void reset_forward_count() { forwards_.store(0, std::memory_order_relaxed); }

    /// Every host weight and bias; what pretraining optimizes.
    std::vector<Tensor*> pretrain_params() {
        std::vector<Tensor*> out;
        for (auto& l : layers_) {
            out.push_back(&l.group.weight);
            out.push_back(&l.bias);
        }
        return out;
    }

    /// Number of adapter pairs per layer (identical across layers).
    int task_count() const {
        const size_t n = layers_[0].group.pairs.size();
        for (const auto& l : layers_)
            if (l.group.pairs.size() != n)
                throw contract_error("denoiser: inconsistent adapter group sizes");
        return static_cast<int>(n);
    }

    /// Appends one adapter pair to every layer and freezes the previous ones.
    void expand_all_layers(int rank, rng::Stream& init) {
        for (auto& l : layers_) expand_group(l.group, rank, init);
    }

    /// Exactly the active task's A and B matrices across layers. The host
    /// weights, biases and frozen pairs are never handed to an optimizer.
    std::vector<Tensor*> trainable_params(int task) {
        if (task_count() == 0 || layers_[0].group.pairs.back().task_id != task)
            throw contract_error("trainable_params: task " + std::to_string(task) +
                                 " is not the active task");
        std::vector<Tensor*> out;
        for (auto& l : layers_) {
            LoraPair& p = l.group.pairs.back();
            if (p.frozen) throw contract_error("trainable_params: active pair is frozen");
            out.push_back(&p.A);
            out.push_back(&p.B);
        }
        return out;
    }

    /// Stable persistence order: per layer W, b, then adapter pairs by task.
    std::vector<std::pair<std::string, Tensor*>> named_params() {
        std::vector<std::pair<std::string, Tensor*>> out;
        for (size_t i = 0; i < layers_.size(); ++i) {
            const std::string prefix = "layer" + std::to_string(i);
            out.emplace_back(prefix + ".W", &layers_[i].group.weight);
            out.emplace_back(prefix + ".b", &layers_[i].bias);
            for (auto& p : layers_[i].group.pairs) {
                const std::string lp = prefix + ".lora" + std::to_string(p.task_id);
                out.emplace_back(lp + ".A", &p.A);
                out.emplace_back(lp + ".B", &p.B);
            }
        }
        return out;
    }

private:
    Denoiser(DenoiserConfig cfg, int steps) : cfg_(cfg), steps_(steps) {}

    void add_layer(const std::string& name, int d_out, int d_in, rng::Stream& init) {
        Layer l;
        l.name = name;
        l.group.weight = Tensor::zeros({d_out, d_in});
        const double bound = std::sqrt(6.0 / static_cast<double>(d_in));
        for (auto& v : l.group.weight.mut()) v = init.uniform(-bound, bound);
        l.bias = Tensor::zeros({d_out});
        layers_.push_back(std::move(l));
    }

    void build_time_table() {
        time_table_.assign(static_cast<size_t>(steps_) + 1, std::vector<double>(static_cast<size_t>(cfg_.time_dim), 0.0));
        const int half = cfg_.time_dim / 2;
        for (int t = 0; t <= steps_; ++t)
            for (int i = 0; i < half; ++i) {
                const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
                time_table_[static_cast<size_t>(t)][static_cast<size_t>(2 * i)] = std::sin(t * freq);
                time_table_[static_cast<size_t>(t)][static_cast<size_t>(2 * i + 1)] = std::cos(t * freq);
            }
    }

    DenoiserConfig cfg_;
    int steps_;
    std::vector<Layer> layers_;
    std::vector<std::vector<double>> time_table_;
    mutable std::atomic<uint64_t> forwards_{0};
};

}  // namespace rid
