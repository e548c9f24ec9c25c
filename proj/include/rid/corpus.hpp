// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rid/errors.hpp"
#include "rid/linalg.hpp"
#include "rid/rng.hpp"
#include "rid/tensor.hpp"

namespace rid {

/// A generation condition: texture class plus a continuous style knob. The
/// embedding is a pure function of (class_id, style) and the corpus seed.
struct Condition {
    int class_id = 0;
    double style = 0.0;
    std::vector<double> embedding;

    Tensor embedding_tensor() const {
        return Tensor({static_cast<int>(embedding.size())}, embedding);
    }
};

/// Hand-computed image statistics used by the frozen alignment head:
/// 4x4 patch means, 4x4 patch stds, and mean absolute x/y gradients.
inline std::vector<double> align_features(const Tensor& img) {
    const int h = img.shape[0], w = img.shape[1];
    const auto& p = img.vec();
    std::vector<double> f;
    const int ph = h / 4, pw = w / 4;
    std::vector<double> means(16, 0.0);
    for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx) {
            double m = 0.0;
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) m += p[(by * ph + y) * w + bx * pw + x];
            means[by * 4 + bx] = m / (ph * pw);
        }
    for (double m : means) f.push_back(m);
    for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx) {
            double v = 0.0;
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) {
                    const double d = p[(by * ph + y) * w + bx * pw + x] - means[by * 4 + bx];
                    v += d * d;
                }
            f.push_back(std::sqrt(v / (ph * pw)));
        }
    double gx = 0.0, gy = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) gx += std::abs(p[y * w + x + 1] - p[y * w + x]);
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x) gy += std::abs(p[(y + 1) * w + x] - p[y * w + x]);
    f.push_back(gx / (h * (w - 1)));
    f.push_back(gy / ((h - 1) * w));
    f.push_back(1.0);  // bias
    return f;
}

/// Deterministic synthetic dataset: procedural texture families per class,
/// disjoint train/test style splits, and the frozen evaluation heads that are
/// calibrated once at generation time.
struct Corpus {
    static constexpr int kFdDim = 8;

    uint64_t seed = 0;
    int classes = 0;
    int styles_per_class = 0;
    int images_per_condition = 0;
    double test_fraction = 0.0;
    int img_h = 16, img_w = 16;
    int cond_dim = 16;

    std::vector<Condition> train_conditions;
    std::vector<Condition> test_conditions;
    std::vector<std::vector<Tensor>> train_images;  // parallel to train_conditions
    std::vector<std::vector<Tensor>> test_images;   // parallel to test_conditions

    // Frozen heads, calibrated on the training images at generation time.
    linalg::Matrix align_head;  // cond_dim x n_align_features
    linalg::Matrix fd_proj;     // kFdDim x (img_h*img_w)

    int64_t train_image_count() const {
        int64_t n = 0;
        for (const auto& v : train_images) n += static_cast<int64_t>(v.size());
        return n;
    }
};

namespace detail {

inline std::vector<double> condition_embedding(int class_id, double style, int dim,
                                               uint64_t seed) {
    rng::Stream s = rng::Stream::named(seed, "embed-class-" + std::to_string(class_id));
    std::vector<double> omega(dim), phase(dim);
    for (auto& v : omega) v = s.gaussian() * 2.0;
    for (auto& v : phase) v = s.uniform(0.0, 6.283185307179586);
    std::vector<double> e(dim);
    double norm = 0.0;
    for (int j = 0; j < dim; ++j) {
        e[j] = std::sin(omega[j] * (2.0 * style - 1.0) + phase[j]);
        norm += e[j] * e[j];
    }
    norm = std::sqrt(norm);
    if (norm > 0)
        for (auto& v : e) v /= norm;
    return e;
}

inline Tensor render_texture(int class_id, double style, int h, int w, rng::Stream& s) {
    Tensor img = Tensor::zeros({h, w});
    auto& p = img.mut();
    const int family = class_id % 4;
    switch (family) {
        case 0: {  // oriented gradient
            const double theta = 3.14159265358979323846 * style;
            const double jitter = s.uniform(-0.05, 0.05);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double u = static_cast<double>(x) / (w - 1) - 0.5;
                    const double v = static_cast<double>(y) / (h - 1) - 0.5;
                    const double g = u * std::cos(theta) + v * std::sin(theta);
                    p[y * w + x] = 0.5 + 0.6 * g + jitter;
                }
            break;
        }
        case 1: {  // stripes, style controls frequency
            const double freq = 2.0 + 5.0 * style;
            const double phase = s.uniform(-0.1, 0.1);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double u = static_cast<double>(x) / w;
                    p[y * w + x] = 0.5 + 0.35 * std::sin(6.283185307179586 * (freq * u + phase));
                }
            break;
        }
        case 2: {  // checkers, style controls cell size; deterministic grid
            const int cell = 1 + static_cast<int>(std::floor(style * 2.0 + 0.5));
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const bool on = ((x / cell) + (y / cell)) % 2 == 0;
                    p[y * w + x] = on ? 0.85 : 0.15;
                }
            break;
        }
        default: {  // radial blob, style controls width
            const double sigma = 2.0 + 4.0 * style;
            const double cx = w / 2.0 + s.uniform(-2.0, 2.0);
            const double cy = h / 2.0 + s.uniform(-2.0, 2.0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    p[y * w + x] = 0.15 + 0.7 * std::exp(-r2 / (2.0 * sigma * sigma));
                }
            break;
        }
    }
    for (auto& v : p) {
        v += 0.02 * s.gaussian();
        v = std::min(1.0, std::max(0.0, v));
    }
    return img;
}

}  // namespace detail

inline Corpus generate_corpus(uint64_t seed, int classes, int styles_per_class,
                              int images_per_condition, double test_fraction) {
    if (classes < 2) throw contract_error("corpus: need at least 2 classes");
    if (styles_per_class < 2 || images_per_condition < 1)
        throw contract_error("corpus: counts must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw contract_error("corpus: test_fraction must be in (0,1)");

    Corpus c;
    c.seed = seed;
    c.classes = classes;
    c.styles_per_class = styles_per_class;
    c.images_per_condition = images_per_condition;
    c.test_fraction = test_fraction;

    int n_test = static_cast<int>(std::lround(styles_per_class * test_fraction));
    n_test = std::max(1, std::min(styles_per_class - 1, n_test));

    // Held-out styles spread evenly through the style range.
    std::vector<bool> is_test(styles_per_class, false);
    for (int i = 0; i < n_test; ++i) {
        int idx = static_cast<int>((i + 0.5) * styles_per_class / n_test);
        idx = std::min(styles_per_class - 1, idx);
        while (is_test[idx]) idx = (idx + 1) % styles_per_class;
        is_test[idx] = true;
    }

    for (int k = 0; k < classes; ++k)
        for (int si = 0; si < styles_per_class; ++si) {
            const double style = styles_per_class == 1
                                     ? 0.5
                                     : static_cast<double>(si) / (styles_per_class - 1);
            Condition cond;
            cond.class_id = k;
            cond.style = style;
            cond.embedding = detail::condition_embedding(k, style, c.cond_dim, seed);

            rng::Stream img_stream = rng::Stream::named(
                seed, "img-c" + std::to_string(k) + "-s" + std::to_string(si));
            std::vector<Tensor> imgs;
            imgs.reserve(static_cast<size_t>(images_per_condition));
            for (int i = 0; i < images_per_condition; ++i)
                imgs.push_back(detail::render_texture(k, style, c.img_h, c.img_w, img_stream));

            if (is_test[si]) {
                c.test_conditions.push_back(std::move(cond));
                c.test_images.push_back(std::move(imgs));
            } else {
                c.train_conditions.push_back(std::move(cond));
                c.train_images.push_back(std::move(imgs));
            }
        }

    // Frozen random projection for the feature-space Frechet distance.
    {
        rng::Stream s = rng::Stream::named(seed, "fd-proj");
        const int d = c.img_h * c.img_w;
        c.fd_proj = linalg::zeros(Corpus::kFdDim, static_cast<size_t>(d));
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (int i = 0; i < Corpus::kFdDim; ++i)
            for (int j = 0; j < d; ++j) c.fd_proj[static_cast<size_t>(i)][static_cast<size_t>(j)] = scale * s.gaussian();
    }

    // Alignment head: ridge least squares from image statistics to condition
    // embeddings, fitted once on the training images and frozen.
    {
        const size_t nf = align_features(c.train_images[0][0]).size();
        linalg::Matrix gram = linalg::zeros(nf, nf);
        linalg::Matrix cross = linalg::zeros(nf, static_cast<size_t>(c.cond_dim));
        for (size_t ci = 0; ci < c.train_conditions.size(); ++ci) {
            const auto& e = c.train_conditions[ci].embedding;
            for (const Tensor& img : c.train_images[ci]) {
                const auto f = align_features(img);
                for (size_t a = 0; a < nf; ++a) {
                    for (size_t b = 0; b < nf; ++b) gram[a][b] += f[a] * f[b];
                    for (int j = 0; j < c.cond_dim; ++j) cross[a][static_cast<size_t>(j)] += f[a] * e[static_cast<size_t>(j)];
                }
            }
        }
        for (size_t a = 0; a < nf; ++a) gram[a][a] += 1e-6;
        linalg::Matrix head_t = linalg::solve(gram, cross);  // nf x cond_dim
        c.align_head = linalg::zeros(static_cast<size_t>(c.cond_dim), nf);
        for (size_t a = 0; a < nf; ++a)
            for (int j = 0; j < c.cond_dim; ++j) c.align_head[static_cast<size_t>(j)][a] = head_t[a][static_cast<size_t>(j)];
    }
    return c;
}

}  // namespace rid
