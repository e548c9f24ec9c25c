// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "rid/errors.hpp"
#include "rid/tensor.hpp"

namespace rid {

/// Diffusion coefficients over N steps. Index t runs 1..N; alpha_bar[0] = 1
/// so the final DDIM update reduces to the predicted clean image.
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> beta;       // [N+1], beta[0] unused
    std::vector<double> alpha;      // 1 - beta
    std::vector<double> alpha_bar;  // cumulative products, alpha_bar[0] = 1
};

inline NoiseSchedule build_schedule(int n, double beta_min = 1e-4, double beta_max = 0.02) {
    if (n < 2) throw contract_error("schedule: need at least 2 steps");
    if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0))
        throw contract_error("schedule: require 0 < beta_min < beta_max < 1");

    NoiseSchedule s;
    s.steps = n;
    s.beta.assign(static_cast<size_t>(n) + 1, 0.0);
    s.alpha.assign(static_cast<size_t>(n) + 1, 1.0);
    s.alpha_bar.assign(static_cast<size_t>(n) + 1, 1.0);
    for (int t = 1; t <= n; ++t) {
        s.beta[static_cast<size_t>(t)] = beta_min + (beta_max - beta_min) * (t - 1) / (n - 1);
        s.alpha[static_cast<size_t>(t)] = 1.0 - s.beta[static_cast<size_t>(t)];
        s.alpha_bar[static_cast<size_t>(t)] = s.alpha_bar[static_cast<size_t>(t) - 1] * s.alpha[static_cast<size_t>(t)];
    }
    return s;
}

/// Forward process draw: sqrt(a_bar_t) x0 + sqrt(1 - a_bar_t) eps.
inline Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s) {
    if (eps.shape != x0.shape)
        throw dim_error("q_sample: eps shape " + Tensor::shape_str(eps.shape) +
                        " does not match x0 shape " + Tensor::shape_str(x0.shape));
    if (t < 1 || t > s.steps)
        throw contract_error("q_sample: step " + std::to_string(t) + " outside [1," +
                             std::to_string(s.steps) + "]");
    const double ab = s.alpha_bar[static_cast<size_t>(t)];
    return add(scalar_mul(x0, std::sqrt(ab)), scalar_mul(eps, std::sqrt(1.0 - ab)));
}

}  // namespace rid
