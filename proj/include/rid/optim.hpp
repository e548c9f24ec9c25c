// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "rid/tensor.hpp"

namespace rid {

/// Plain SGD over the watched parameters: p -= lr * grad(p). Fine-tuning uses
/// this; it keeps the reduction-identity tests exact.
inline void sgd_step(const GradMap& grads, const std::vector<Tensor*>& params, double lr) {
    for (Tensor* p : params) {
        if (!grads.contains(*p)) continue;
        const auto& g = grads.at(*p);
        auto& v = p->mut();
        for (size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
}

/// Classical momentum SGD. Deterministic; used for pretraining, where plain
/// SGD is impractically slow on the noise-prediction objective.
class MomentumSgd {
public:
    explicit MomentumSgd(double momentum = 0.9) : momentum_(momentum) {}

    void step(const GradMap& grads, const std::vector<Tensor*>& params, double lr) {
        if (velocity_.empty())
            for (Tensor* p : params) velocity_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
        for (size_t i = 0; i < params.size(); ++i) {
            if (!grads.contains(*params[i])) continue;
            const auto& g = grads.at(*params[i]);
            auto& vel = velocity_[i];
            auto& v = params[i]->mut();
            for (size_t j = 0; j < v.size(); ++j) {
                vel[j] = momentum_ * vel[j] + g[j];
                v[j] -= lr * vel[j];
            }
        }
    }

private:
    double momentum_;
    std::vector<std::vector<double>> velocity_;
};

}  // namespace rid
