// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rid/corpus.hpp"
#include "rid/denoiser.hpp"
#include "rid/errors.hpp"
#include "rid/schedule.hpp"
#include "rid/tensor.hpp"

namespace rid {

/// Gradient handling during sampling: track nothing, or track only the final
/// denoising step with the penultimate latent cut off from earlier steps.
enum class GradMode { None, LastStep };

struct SampleTrace {
    Tensor image;                 // final z0, smoothly clamped to [0,1]
    uint64_t forward_count = 0;   // denoiser applications in this call
    std::vector<Tensor> latents;  // z_N..z_1 when requested
};

/// The diffusion process runs on centered pixels in [-1, 1].
inline Tensor to_model_space(const Tensor& img01) {
    return add(scalar_mul(img01, 2.0), Tensor::scalar(-1.0));
}

namespace detail {

inline void check_finite_latent(const Tensor& z, int t) {
    for (int i = 0; i < z.numel(); ++i)
        if (!std::isfinite(z.at(static_cast<size_t>(i))))
            throw numeric_error("ddim: non-finite latent at step " + std::to_string(t));
}

/// Differentiable squash of the final centered prediction into [0,1]; the
/// scaled sigmoid matches the identity map's slope at mid-gray.
inline Tensor smooth_clamp(const Tensor& x_centered) {
    return sigmoid(scalar_mul(x_centered, 2.0));
}

/// Stabilizer for intermediate (untracked) steps: keeps the clean-image
/// estimate near the data range so early-training trajectories cannot blow
/// up. Inactive once the model predicts in range.
inline Tensor hard_clamp(const Tensor& t, double lo, double hi) {
    if (t.tracked()) throw contract_error("hard_clamp: only valid on untracked tensors");
    Tensor out = t.deep_copy();
    for (auto& v : out.mut()) v = std::min(hi, std::max(lo, v));
    return out;
}

}  // namespace detail

/// Predicted noise via the DDIM identity eps = (z - sqrt(ab_t) x0hat) /
/// sqrt(1 - ab_t), where x0hat is the network's clean-image estimate.
inline Tensor predict_noise(const Denoiser& model, const NoiseSchedule& sched, const Tensor& z,
                            int t, const Tensor& cond_emb) {
    Tensor x0 = model.forward(z, t, cond_emb);
    const double ab = sched.alpha_bar[static_cast<size_t>(t)];
    return scalar_mul(sub(z, scalar_mul(x0, std::sqrt(ab))), 1.0 / std::sqrt(1.0 - ab));
}

/// Final denoising step: at t=1 the DDIM update reduces to the clean-image
/// estimate itself, squashed into [0,1]. Shared by the sampler and by
/// last-step distillation so student and teacher run identical arithmetic
/// from a common z1.
inline Tensor denoise_final_step(const Denoiser& model, const Tensor& z1, const Condition& cond,
                                 const NoiseSchedule& sched) {
    (void)sched;
    Tensor x0 = model.forward(z1, 1, cond.embedding_tensor());
    return detail::smooth_clamp(x0);
}

/// Deterministic DDIM (eta = 0) from step N down to 1. With
/// GradMode::LastStep, steps N..2 run unrecorded, z1 passes through
/// stop_gradient, and only the final step lands on the tape.
inline SampleTrace ddim_sample(const Denoiser& model, const Tensor& z_init, const Condition& cond,
                               const NoiseSchedule& sched, GradMode mode, Tape* tape = nullptr,
                               bool keep_latents = false) {
    if (z_init.numel() != model.config().img_h * model.config().img_w)
        throw dim_error("ddim: initial noise shape " + Tensor::shape_str(z_init.shape) +
                        " does not match image shape");

    SampleTrace trace;
    const uint64_t start_count = model.forward_count();
    Tensor cemb = cond.embedding_tensor();
    Tensor z = z_init;

    {
        NoGrad ng(tape);  // steps N..2 are never tracked in either mode
        for (int t = sched.steps; t >= 2; --t) {
            if (keep_latents) trace.latents.push_back(z);
            Tensor x0 = detail::hard_clamp(model.forward(z, t, cemb), -1.5, 1.5);
            const double ab_t = sched.alpha_bar[static_cast<size_t>(t)];
            const double ab_p = sched.alpha_bar[static_cast<size_t>(t) - 1];
            Tensor eps = scalar_mul(sub(z, scalar_mul(x0, std::sqrt(ab_t))), 1.0 / std::sqrt(1.0 - ab_t));
            z = add(scalar_mul(x0, std::sqrt(ab_p)), scalar_mul(eps, std::sqrt(1.0 - ab_p)));
            detail::check_finite_latent(z, t - 1);
        }
    }

    if (mode == GradMode::LastStep) z = stop_gradient(z);
    if (keep_latents) trace.latents.push_back(z);

    if (mode == GradMode::None) {
        NoGrad ng(tape);
        trace.image = denoise_final_step(model, z, cond, sched);
    } else {
        trace.image = denoise_final_step(model, z, cond, sched);
    }
    detail::check_finite_latent(trace.image, 0);

    trace.forward_count = model.forward_count() - start_count;
    return trace;
}

}  // namespace rid
