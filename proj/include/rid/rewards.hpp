// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rid/corpus.hpp"
#include "rid/errors.hpp"
#include "rid/jpeg.hpp"
#include "rid/rng.hpp"
#include "rid/tensor.hpp"

namespace rid {

enum class RewardKind { Smooth, Pref, Compress };

inline const char* reward_name(RewardKind k) {
    switch (k) {
        case RewardKind::Smooth: return "smooth";
        case RewardKind::Pref: return "pref";
        default: return "compress";
    }
}

inline RewardKind reward_from_name(const std::string& s) {
    if (s == "smooth") return RewardKind::Smooth;
    if (s == "pref") return RewardKind::Pref;
    if (s == "compress") return RewardKind::Compress;
    throw config_error("unknown reward '" + s + "'");
}

namespace detail {

/// 16x(h*w) matrix averaging each 4x4 patch of an h x w image.
inline Tensor patch_pool_matrix(int h, int w) {
    Tensor p = Tensor::zeros({16, h * w});
    const int ph = h / 4, pw = w / 4;
    const double inv = 1.0 / (ph * pw);
    for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx)
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x)
                    p.mut()[static_cast<size_t>((by * 4 + bx) * h * w + (by * ph + y) * w + bx * pw + x)] = inv;
    return p;
}

}  // namespace detail

/// One differentiable reward: either a frozen two-layer scorer over pooled
/// patch features (image-only for "smooth", condition-aware for "pref") or
/// the JPEG compressibility reward R = -||img - C(img)||^2.
struct RewardTask {
    RewardKind kind = RewardKind::Compress;
    std::string name = "compress";
    bool higher_is_better = true;
    double scale = 1.0;
    JpegConfig jpeg;

    // Frozen scorer parameters; unused for the compress reward.
    Tensor pool;  // 16 x pixels
    Tensor w1, b1, w2, b2;

    /// Unscaled reward value; differentiable w.r.t. the image.
    Tensor value(const Tensor& img, const Condition& cond) const {
        switch (kind) {
            case RewardKind::Compress: {
                Tensor recon = diff_jpeg(img, jpeg);
                return scalar_mul(sq_norm(img, recon), -1.0);
            }
            case RewardKind::Smooth: {
                Tensor phi = matmul(pool, reshape(img, {static_cast<int>(img.numel())}));
                Tensor h = silu(add(matmul(w1, phi), b1));
                return sum(add(matmul(w2, h), b2));
            }
            default: {
                Tensor phi = matmul(pool, reshape(img, {static_cast<int>(img.numel())}));
                Tensor joined = concat({phi, cond.embedding_tensor()});
                Tensor h = silu(add(matmul(w1, joined), b1));
                return sum(add(matmul(w2, h), b2));
            }
        }
    }

    /// Reward as used in training objectives: scale * value.
    Tensor training_value(const Tensor& img, const Condition& cond) const {
        return scalar_mul(value(img, cond), scale);
    }
};

struct RewardSet {
    RewardTask smooth;
    RewardTask pref;
    RewardTask compress;

    const RewardTask& by_kind(RewardKind k) const {
        switch (k) {
            case RewardKind::Smooth: return smooth;
            case RewardKind::Pref: return pref;
            default: return compress;
        }
    }
    RewardTask& by_kind(RewardKind k) {
        switch (k) {
            case RewardKind::Smooth: return smooth;
            case RewardKind::Pref: return pref;
            default: return compress;
        }
    }
};

namespace detail {

inline RewardTask make_scorer(RewardKind kind, int img_h, int img_w, int cond_dim,
                              uint64_t scorer_seed) {
    RewardTask t;
    t.kind = kind;
    t.name = reward_name(kind);
    t.pool = patch_pool_matrix(img_h, img_w);
    const int in_dim = kind == RewardKind::Pref ? 16 + cond_dim : 16;
    const int hidden = 32;
    rng::Stream s = rng::Stream::named(scorer_seed, std::string("scorer-") + t.name);
    t.w1 = Tensor::zeros({hidden, in_dim});
    for (auto& v : t.w1.mut()) v = s.gaussian() / std::sqrt(static_cast<double>(in_dim));
    t.b1 = Tensor::zeros({hidden});
    for (auto& v : t.b1.mut()) v = 0.1 * s.gaussian();
    t.w2 = Tensor::zeros({1, hidden});
    for (auto& v : t.w2.mut()) v = s.gaussian() / std::sqrt(static_cast<double>(hidden));
    t.b2 = Tensor::zeros({1});
    return t;
}

}  // namespace detail

/// Builds the three frozen reward tasks. The scorer seed fixes the entire
/// reward landscape; the JPEG config applies to the compress reward.
inline RewardSet make_reward_set(uint64_t scorer_seed, const JpegConfig& jpeg_cfg, int img_h = 16,
                                 int img_w = 16, int cond_dim = 16) {
    RewardSet set;
    set.smooth = detail::make_scorer(RewardKind::Smooth, img_h, img_w, cond_dim, scorer_seed);
    set.pref = detail::make_scorer(RewardKind::Pref, img_h, img_w, cond_dim, scorer_seed);
    set.compress.kind = RewardKind::Compress;
    set.compress.name = "compress";
    set.compress.jpeg = jpeg_cfg;
    return set;
}

}  // namespace rid
