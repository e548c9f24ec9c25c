// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rid/errors.hpp"
#include "rid/rng.hpp"
#include "rid/tensor.hpp"

namespace rid {

/// One task's low-rank pair: A (d_out x r) expands, B (r x d_in) reduces.
/// Frozen pairs are never updated again.
struct LoraPair {
    Tensor A;
    Tensor B;
    int task_id = 0;
    bool frozen = false;
};

/// A host weight with its ordered group of task adapters. The host weight is
/// frozen after pretraining; each arriving task appends one pair and freezes
/// the previous ones.
struct LoraGroup {
    Tensor weight;  // d_out x d_in
    std::vector<LoraPair> pairs;

    int d_out() const { return weight.shape[0]; }
    int d_in() const { return weight.shape[1]; }

    LoraGroup deep_copy() const {
        LoraGroup g;
        g.weight = weight.deep_copy();
        for (const auto& p : pairs) g.pairs.push_back({p.A.deep_copy(), p.B.deep_copy(), p.task_id, p.frozen});
        return g;
    }
};

/// Appends a fresh pair for the next task: B starts at zero so the layer
/// output is unchanged, A is uniform in [-sqrt(6/r), sqrt(6/r)]. All prior
/// pairs are frozen.
inline void expand_group(LoraGroup& group, int rank, rng::Stream& init) {
    if (rank < 1) throw contract_error("expand_group: rank must be >= 1");
    for (auto& p : group.pairs) p.frozen = true;

    LoraPair pair;
    pair.task_id = group.pairs.empty() ? 1 : group.pairs.back().task_id + 1;
    pair.frozen = false;
    pair.A = Tensor::zeros({group.d_out(), rank});
    pair.B = Tensor::zeros({rank, group.d_in()});
    const double bound = std::sqrt(6.0 / static_cast<double>(rank));
    for (auto& v : pair.A.mut()) v = init.uniform(-bound, bound);
    group.pairs.push_back(std::move(pair));
}

/// Layer forward: W x + sum_i A_i (B_i x). Accepts x as a vector [d_in] or a
/// matrix [d_in, n]. Gradients flow into whatever pairs are tracked.
inline Tensor lora_forward(const LoraGroup& group, const Tensor& x) {
    Tensor out = matmul(group.weight, x);
    for (const auto& p : group.pairs) out = add(out, matmul(p.A, matmul(p.B, x)));
    return out;
}

/// Collapses the group to a single dense matrix W + sum_i A_i B_i.
inline Tensor merge_dense(const LoraGroup& group) {
    Tensor merged = group.weight.deep_copy();
    const int dout = group.d_out(), din = group.d_in();
    for (const auto& p : group.pairs) {
        const int r = p.A.shape[1];
        const auto& a = p.A.vec();
        const auto& b = p.B.vec();
        auto& m = merged.mut();
        for (int i = 0; i < dout; ++i)
            for (int k = 0; k < r; ++k) {
                const double av = a[static_cast<size_t>(i) * r + k];
                if (av == 0.0) continue;
                for (int j = 0; j < din; ++j) m[static_cast<size_t>(i) * din + j] += av * b[static_cast<size_t>(k) * din + j];
            }
    }
    return merged;
}

}  // namespace rid
