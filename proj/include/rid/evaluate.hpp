// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rid/corpus.hpp"
#include "rid/denoiser.hpp"
#include "rid/errors.hpp"
#include "rid/jpeg.hpp"
#include "rid/linalg.hpp"
#include "rid/rewards.hpp"
#include "rid/rng.hpp"
#include "rid/sampler.hpp"
#include "rid/schedule.hpp"
#include "rid/tensor.hpp"

namespace rid {

// ---------------------------------------------------------------------------
// Individual metrics.
// ---------------------------------------------------------------------------

/// Compressed length of the 8-bit quantized image under a fixed-parameter
/// deflate codec. A stand-in for "PNG size" at desk scale.
inline int lossless_bytes(const Tensor& img) {
    std::vector<unsigned char> raw(static_cast<size_t>(img.numel()));
    for (int i = 0; i < img.numel(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.at(static_cast<size_t>(i))));
        raw[static_cast<size_t>(i)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    uLongf out_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> out(out_len);
    const int rc = compress2(out.data(), &out_len, raw.data(), static_cast<uLong>(raw.size()), 6);
    if (rc != Z_OK) throw numeric_error("lossless_bytes: deflate failed");
    return static_cast<int>(out_len);
}

/// Deterministic JPEG-size proxy: header constant plus bytes-per-coefficient
/// times the hard-quantized nonzero coefficient count at the given quality.
inline int lossy_bytes(const Tensor& img, int quality = 80) {
    constexpr int kHeaderBytes = 64;
    constexpr int kBytesPerCoefficient = 2;
    return kHeaderBytes + kBytesPerCoefficient * count_nonzero_coefficients(img, quality);
}

/// Cosine similarity between the frozen alignment head's projection of the
/// image and the condition embedding.
inline double align_score(const Corpus& corpus, const Tensor& img, const Condition& cond) {
    const auto f = align_features(img);
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t j = 0; j < corpus.align_head.size(); ++j) {
        double u = 0.0;
        for (size_t a = 0; a < f.size(); ++a) u += corpus.align_head[j][a] * f[a];
        dot += u * cond.embedding[j];
        nu += u * u;
        nv += cond.embedding[j] * cond.embedding[j];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace detail {

inline std::vector<double> project_features(const linalg::Matrix& proj, const Tensor& img) {
    std::vector<double> f(proj.size(), 0.0);
    for (size_t i = 0; i < proj.size(); ++i) {
        double s = 0.0;
        for (size_t j = 0; j < proj[i].size(); ++j) s += proj[i][j] * img.at(j);
        f[i] = s;
    }
    return f;
}

struct Gaussian {
    std::vector<double> mean;
    linalg::Matrix cov;
};

inline Gaussian fit_gaussian(const linalg::Matrix& proj, const std::vector<Tensor>& images) {
    const size_t d = proj.size(), n = images.size();
    Gaussian g;
    g.mean.assign(d, 0.0);
    g.cov = linalg::zeros(d, d);
    std::vector<std::vector<double>> feats;
    feats.reserve(n);
    for (const auto& img : images) feats.push_back(project_features(proj, img));
    for (const auto& f : feats)
        for (size_t i = 0; i < d; ++i) g.mean[i] += f[i];
    for (auto& m : g.mean) m /= static_cast<double>(n);
    for (const auto& f : feats)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j) g.cov[i][j] += (f[i] - g.mean[i]) * (f[j] - g.mean[j]);
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j < d; ++j) g.cov[i][j] /= denom;
    for (size_t i = 0; i < d; ++i) g.cov[i][i] += 1e-6;  // regularize near-singular fits
    return g;
}

}  // namespace detail

/// Frechet distance between Gaussian fits of frozen random-projection
/// features: ||m1-m2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}).
inline double feat_fd(const linalg::Matrix& proj, const std::vector<Tensor>& generated,
                      const std::vector<Tensor>& reference) {
    if (generated.empty() || reference.empty())
        throw contract_error("feat_fd: both image sets must be nonempty");
    const auto g1 = detail::fit_gaussian(proj, generated);
    const auto g2 = detail::fit_gaussian(proj, reference);
    const size_t d = proj.size();

    double mean_term = 0.0;
    for (size_t i = 0; i < d; ++i) {
        const double diff = g1.mean[i] - g2.mean[i];
        mean_term += diff * diff;
    }

    // tr((S1 S2)^{1/2}) via the symmetric form sqrt(S1) S2 sqrt(S1).
    linalg::Matrix s1_half = linalg::sym_sqrt(g1.cov);
    linalg::Matrix inner = linalg::matmul(linalg::matmul(s1_half, g2.cov), s1_half);
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i + 1; j < d; ++j) {
            const double avg = 0.5 * (inner[i][j] + inner[j][i]);
            inner[i][j] = inner[j][i] = avg;
        }
    std::vector<double> evals;
    linalg::jacobi_eig(inner, evals);
    double tr_sqrt = 0.0;
    for (double e : evals) tr_sqrt += std::sqrt(std::max(e, 0.0));

    double trace_term = -2.0 * tr_sqrt;
    for (size_t i = 0; i < d; ++i) trace_term += g1.cov[i][i] + g2.cov[i][i];
    return mean_term + trace_term;
}

// ---------------------------------------------------------------------------
// Records, history, and the forgetting measure.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"smooth_score",   "pref_score",
                                                   "lossless_bytes", "lossy_bytes",
                                                   "align_score",    "feat_fd"};
    return names;
}

struct MetricsRecord {
    int task_index = 0;
    double smooth_score = 0.0;
    double pref_score = 0.0;
    double lossless_bytes = 0.0;
    double lossy_bytes = 0.0;
    double align_score = 0.0;
    double feat_fd = 0.0;
    int n_samples = 0;
    uint64_t seed = 0;
    uint64_t noise_hash = 0;

    double value(const std::string& name) const {
        if (name == "smooth_score") return smooth_score;
        if (name == "pref_score") return pref_score;
        if (name == "lossless_bytes") return lossless_bytes;
        if (name == "lossy_bytes") return lossy_bytes;
        if (name == "align_score") return align_score;
        if (name == "feat_fd") return feat_fd;
        throw contract_error("metrics: unknown metric '" + name + "'");
    }
};

struct MetricInfo {
    std::string name;
    bool higher_is_better = true;
    int active_from = -1;  // -1: target metric whose task never ran; 0: general
};

/// Ordered per-checkpoint records, starting with the pretrained model at
/// task 0, plus each metric's direction and activation task.
struct MetricsHistory {
    std::vector<MetricsRecord> records;
    std::vector<MetricInfo> metrics;

    MetricsHistory() {
        metrics = {{"smooth_score", true, -1}, {"pref_score", true, -1},
                   {"lossless_bytes", false, -1}, {"lossy_bytes", false, -1},
                   {"align_score", true, 0},   {"feat_fd", false, 0}};
    }

    const MetricInfo& info(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return m;
        throw contract_error("metrics: unknown metric '" + name + "'");
    }

    /// Marks a target metric active from the given task (first activation wins).
    void activate(const std::string& name, int task_index) {
        for (auto& m : metrics)
            if (m.name == name && m.active_from < 0) m.active_from = task_index;
    }

    void activate_for_reward(RewardKind kind, int task_index) {
        switch (kind) {
            case RewardKind::Smooth: activate("smooth_score", task_index); break;
            case RewardKind::Pref: activate("pref_score", task_index); break;
            case RewardKind::Compress:
                activate("lossless_bytes", task_index);
                activate("lossy_bytes", task_index);
                break;
        }
    }
};

/// The maximum performance drop from any eligible checkpoint to the final
/// one. Direction-aware; the i=T term forces a nonnegative result.
inline double forgetting_value(const std::vector<double>& values, bool higher_is_better,
                               int active_from) {
    if (values.empty() || active_from < 0 || active_from >= static_cast<int>(values.size()))
        throw contract_error("forgetting: no eligible checkpoints");
    const double final_v = values.back();
    double f = 0.0;
    for (size_t i = static_cast<size_t>(active_from); i < values.size(); ++i) {
        const double drop = higher_is_better ? values[i] - final_v : final_v - values[i];
        f = std::max(f, drop);
    }
    return f;
}

/// Forgetting for one metric of a history; absent when the metric never
/// became active (the "(-)" table cells).
inline std::optional<double> forgetting(const MetricsHistory& h, const std::string& metric) {
    const MetricInfo& info = h.info(metric);
    if (info.active_from < 0 || info.active_from >= static_cast<int>(h.records.size()))
        return std::nullopt;
    std::vector<double> values;
    values.reserve(h.records.size());
    for (const auto& r : h.records) values.push_back(r.value(metric));
    return forgetting_value(values, info.higher_is_better, info.active_from);
}

// ---------------------------------------------------------------------------
// Evaluator: fixed conditions and noise across every checkpoint of a run.
// ---------------------------------------------------------------------------

struct EvalOutput {
    MetricsRecord record;
    std::vector<Tensor> images;  // one per (condition, sample), condition-major
};

class Evaluator {
public:
    Evaluator(const Corpus& corpus, const RewardSet& rewards, const NoiseSchedule& sched,
              uint64_t eval_seed, int samples_per_condition = 16, int jpeg_quality = 80,
              int threads = 1)
        : corpus_(corpus),
          rewards_(rewards),
          sched_(sched),
          eval_seed_(eval_seed),
          samples_per_condition_(samples_per_condition),
          jpeg_quality_(jpeg_quality),
          threads_(std::max(1, threads)) {
        if (corpus_.test_conditions.empty()) throw contract_error("evaluator: no test conditions");
        // Fixed reference sample from the pretraining corpus for feat_fd.
        rng::Stream ref = rng::Stream::named(corpus_.seed, "fd-reference");
        const int target = 128;
        for (int i = 0; i < target; ++i) {
            const size_t ci = static_cast<size_t>(ref.below(corpus_.train_images.size()));
            const size_t ii = static_cast<size_t>(ref.below(corpus_.train_images[ci].size()));
            reference_.push_back(corpus_.train_images[ci][ii]);
        }
    }

    const std::vector<Tensor>& reference_images() const { return reference_; }

    EvalOutput evaluate(const Denoiser& model, int task_index) const {
        const int pixels = corpus_.img_h * corpus_.img_w;
        const size_t n_cond = corpus_.test_conditions.size();
        const size_t total = n_cond * static_cast<size_t>(samples_per_condition_);

        // Identical (condition, z_N) pairs for every checkpoint of a run.
        rng::Stream noise = rng::Stream::named(eval_seed_, "eval-noise");
        std::vector<Tensor> inits;
        inits.reserve(total);
        uint64_t hash = 0xcbf29ce484222325ULL;
        for (size_t c = 0; c < n_cond; ++c)
            for (int s = 0; s < samples_per_condition_; ++s) {
                Tensor z({corpus_.img_h, corpus_.img_w}, noise.gaussians(static_cast<size_t>(pixels)));
                hash = rng::fnv1a_bytes(z.vec().data(), z.vec().size() * sizeof(double), hash);
                inits.push_back(std::move(z));
            }

        std::vector<Tensor> images(total);
        auto worker = [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                const size_t ci = i / static_cast<size_t>(samples_per_condition_);
                SampleTrace t = ddim_sample(model, inits[i], corpus_.test_conditions[ci], sched_,
                                            GradMode::None);
                images[i] = std::move(t.image);
            }
        };
        if (threads_ <= 1) {
            worker(0, total);
        } else {
            std::vector<std::thread> pool;
            const size_t chunk = (total + static_cast<size_t>(threads_) - 1) / static_cast<size_t>(threads_);
            for (int t = 0; t < threads_; ++t) {
                const size_t b = static_cast<size_t>(t) * chunk;
                if (b >= total) break;
                pool.emplace_back(worker, b, std::min(total, b + chunk));
            }
            for (auto& th : pool) th.join();
        }

        EvalOutput out;
        out.record.task_index = task_index;
        out.record.n_samples = static_cast<int>(total);
        out.record.seed = eval_seed_;
        out.record.noise_hash = hash;

        double smooth = 0, pref = 0, lossless = 0, lossy = 0, align = 0;
        Condition dummy;  // smooth reward ignores the condition
        dummy.embedding.assign(static_cast<size_t>(corpus_.cond_dim), 0.0);
        for (size_t i = 0; i < total; ++i) {
            const size_t ci = i / static_cast<size_t>(samples_per_condition_);
            const Condition& cond = corpus_.test_conditions[ci];
            const Tensor& img = images[i];
            smooth += rewards_.smooth.value(img, dummy).item();
            pref += rewards_.pref.value(img, cond).item();
            lossless += lossless_bytes(img);
            lossy += lossy_bytes(img, jpeg_quality_);
            align += align_score(corpus_, img, cond);
            if (!std::isfinite(smooth + pref + align))
                throw numeric_error("evaluate: non-finite score metric");
        }
        const double inv = 1.0 / static_cast<double>(total);
        out.record.smooth_score = smooth * inv;
        out.record.pref_score = pref * inv;
        out.record.lossless_bytes = lossless * inv;
        out.record.lossy_bytes = lossy * inv;
        out.record.align_score = align * inv;
        out.record.feat_fd = feat_fd(corpus_.fd_proj, images, reference_);
        if (!std::isfinite(out.record.feat_fd)) throw numeric_error("evaluate: non-finite feat_fd");
        out.images = std::move(images);
        return out;
    }

private:
    const Corpus& corpus_;
    const RewardSet& rewards_;
    NoiseSchedule sched_;
    uint64_t eval_seed_;
    int samples_per_condition_;
    int jpeg_quality_;
    int threads_;
    std::vector<Tensor> reference_;
};

}  // namespace rid
