// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rid/errors.hpp"

namespace rid {

class Tape;

/// Dense row-major tensor of 64-bit floats. Copies share the underlying
/// buffer; use deep_copy() to detach storage. When `node >= 0` the tensor is
/// tracked on `tape` and participates in the reverse pass.
struct Tensor {
    std::vector<int> shape;
    std::shared_ptr<std::vector<double>> buf;
    Tape* tape = nullptr;
    int node = -1;

    Tensor() = default;

    Tensor(std::vector<int> s, std::vector<double> values) : shape(std::move(s)) {
        if (numel_of(shape) != static_cast<int64_t>(values.size()))
            throw dim_error("tensor: shape " + shape_str(shape) + " does not match " +
                            std::to_string(values.size()) + " values");
        buf = std::make_shared<std::vector<double>>(std::move(values));
    }

    static Tensor zeros(std::vector<int> s) {
        Tensor t;
        t.shape = std::move(s);
        t.buf = std::make_shared<std::vector<double>>(static_cast<size_t>(numel_of(t.shape)), 0.0);
        return t;
    }

    static Tensor full(std::vector<int> s, double v) {
        Tensor t = zeros(std::move(s));
        for (auto& x : *t.buf) x = v;
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    int64_t numel() const { return numel_of(shape); }

    const std::vector<double>& vec() const { return *buf; }
    std::vector<double>& mut() { return *buf; }

    double at(size_t i) const { return (*buf)[i]; }

    /// Value of a one-element tensor.
    double item() const {
        if (numel() != 1) throw contract_error("tensor: item() on non-scalar of shape " + shape_str(shape));
        return (*buf)[0];
    }

    bool tracked() const { return tape != nullptr && node >= 0; }

    /// Untracked copy with its own storage.
    Tensor deep_copy() const {
        Tensor t;
        t.shape = shape;
        t.buf = std::make_shared<std::vector<double>>(*buf);
        return t;
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d <= 0) throw dim_error("tensor: non-positive dimension in shape " + shape_str(s));
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& s) {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
        os << "]";
        return os.str();
    }
};

/// Gradients of one reverse pass, keyed by leaf node id. Untracked tensors
/// have no entry.
class GradMap {
public:
    bool contains(const Tensor& t) const { return t.node >= 0 && g_.count(t.node) > 0; }

    const std::vector<double>& at(const Tensor& t) const {
        if (!contains(t)) throw contract_error("grad: no adjoint recorded for this tensor");
        return g_.at(t.node);
    }

    Tensor grad_tensor(const Tensor& leaf) const { return Tensor(leaf.shape, at(leaf)); }

    size_t size() const { return g_.size(); }

    void insert(int node, std::vector<double> g) { g_[node] = std::move(g); }

private:
    std::unordered_map<int, std::vector<double>> g_;
};

/// Records the operations of one forward computation so that backward() can
/// replay them in exact reverse order. A tape is confined to a single thread
/// and supports a single reverse pass; intermediates captured by an operation
/// are released as soon as its backward step has run.
class Tape {
public:
    using Adjoints = std::vector<std::vector<double>>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    ~Tape() {
        for (Tensor* t : watched_)
            if (t != nullptr) {
                t->tape = nullptr;
                t->node = -1;
            }
    }

    /// Registers `t` as a tracked leaf. The pointer must stay valid until the
    /// tape is destroyed.
    int watch(Tensor& t) {
        t.tape = this;
        t.node = new_node();
        watched_.push_back(&t);
        leaves_.push_back(t.node);
        return t.node;
    }

    bool recording() const { return pause_depth_ == 0 && !used_; }

    int new_node() { return next_node_++; }

    void record(int out_node, std::function<void(Adjoints&)> back) {
        ops_.push_back(Op{out_node, std::move(back)});
    }

    size_t op_count() const { return ops_.size(); }

    /// Reverse pass from a tracked scalar loss. Returns adjoints for every
    /// watched leaf (zeros where no gradient reached the leaf).
    GradMap backward(const Tensor& loss) {
        if (!loss.tracked() || loss.tape != this)
            throw contract_error("backward: loss is not tracked on this record");
        if (loss.numel() != 1) throw contract_error("backward: loss must be scalar");
        if (used_) throw contract_error("backward: record already consumed");
        used_ = true;

        Adjoints adj(static_cast<size_t>(next_node_));
        adj[static_cast<size_t>(loss.node)] = {1.0};

        for (size_t i = ops_.size(); i-- > 0;) {
            Op& op = ops_[i];
            auto& gout = adj[static_cast<size_t>(op.out_node)];
            if (!gout.empty()) op.back(adj);
            // Free the consumed adjoint and the captured intermediates.
            gout.clear();
            gout.shrink_to_fit();
            op.back = nullptr;
        }
        ops_.clear();

        GradMap result;
        for (size_t k = 0; k < leaves_.size(); ++k) {
            const int id = leaves_[k];
            auto& g = adj[static_cast<size_t>(id)];
            if (g.empty()) g.assign(watched_[k]->numel(), 0.0);
            result.insert(id, std::move(g));
        }
        return result;
    }

    static void accumulate(Adjoints& adj, int node, size_t n, const double* g) {
        auto& slot = adj[static_cast<size_t>(node)];
        if (slot.empty()) slot.assign(n, 0.0);
        for (size_t i = 0; i < n; ++i) slot[i] += g[i];
    }

private:
    struct Op {
        int out_node;
        std::function<void(Adjoints&)> back;
    };

    friend class NoGrad;

    std::vector<Op> ops_;
    std::vector<Tensor*> watched_;
    std::vector<int> leaves_;
    int next_node_ = 0;
    int pause_depth_ = 0;
    bool used_ = false;
};

/// Scope guard that suspends recording on a tape. Operations executed inside
/// the scope produce untracked outputs even when their inputs are tracked.
class NoGrad {
public:
    explicit NoGrad(Tape* tape) : tape_(tape) {
        if (tape_ != nullptr) ++tape_->pause_depth_;
    }
    explicit NoGrad(Tape& tape) : NoGrad(&tape) {}
    ~NoGrad() {
        if (tape_ != nullptr) --tape_->pause_depth_;
    }
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

private:
    Tape* tape_;
};

namespace detail {

inline Tape* op_tape(std::initializer_list<const Tensor*> inputs) {
    Tape* tape = nullptr;
    for (const Tensor* t : inputs) {
        if (!t->tracked()) continue;
        if (tape != nullptr && tape != t->tape)
            throw contract_error("op: inputs belong to different computation records");
        tape = t->tape;
    }
    if (tape == nullptr || !tape->recording()) return nullptr;
    return tape;
}

inline void check_same_or_scalar(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape == b.shape || a.numel() == 1 || b.numel() == 1) return;
    throw dim_error(std::string(op) + ": shapes " + Tensor::shape_str(a.shape) + " and " +
                    Tensor::shape_str(b.shape) + " do not match");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary operations (same shape, or one side a scalar).
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_or_scalar("add", a, b);
    const bool as = a.numel() == 1, bs = b.numel() == 1;
    Tensor out = Tensor::zeros(as && !bs ? b.shape : a.shape);
    const size_t n = static_cast<size_t>(out.numel());
    for (size_t i = 0; i < n; ++i) out.mut()[i] = a.at(as ? 0 : i) + b.at(bs ? 0 : i);

    if (Tape* tape = detail::op_tape({&a, &b})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, bn = b.node, on = out.node;
        const size_t na = static_cast<size_t>(a.numel()), nb = static_cast<size_t>(b.numel());
        tape->record(on, [an, bn, on, n, na, nb](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            if (an >= 0) {
                if (na == n) {
                    Tape::accumulate(adj, an, n, g.data());
                } else {
                    double s = 0;
                    for (size_t i = 0; i < n; ++i) s += g[i];
                    Tape::accumulate(adj, an, 1, &s);
                }
            }
            if (bn >= 0) {
                if (nb == n) {
                    Tape::accumulate(adj, bn, n, g.data());
                } else {
                    double s = 0;
                    for (size_t i = 0; i < n; ++i) s += g[i];
                    Tape::accumulate(adj, bn, 1, &s);
                }
            }
        });
    }
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_or_scalar("sub", a, b);
    const bool as = a.numel() == 1, bs = b.numel() == 1;
    Tensor out = Tensor::zeros(as && !bs ? b.shape : a.shape);
    const size_t n = static_cast<size_t>(out.numel());
    for (size_t i = 0; i < n; ++i) out.mut()[i] = a.at(as ? 0 : i) - b.at(bs ? 0 : i);

    if (Tape* tape = detail::op_tape({&a, &b})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, bn = b.node, on = out.node;
        const size_t na = static_cast<size_t>(a.numel()), nb = static_cast<size_t>(b.numel());
        tape->record(on, [an, bn, on, n, na, nb](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            if (an >= 0) {
                if (na == n) {
                    Tape::accumulate(adj, an, n, g.data());
                } else {
                    double s = 0;
                    for (size_t i = 0; i < n; ++i) s += g[i];
                    Tape::accumulate(adj, an, 1, &s);
                }
            }
            if (bn >= 0) {
                std::vector<double> neg(nb == n ? n : 1, 0.0);
                if (nb == n) {
                    for (size_t i = 0; i < n; ++i) neg[i] = -g[i];
                } else {
                    for (size_t i = 0; i < n; ++i) neg[0] -= g[i];
                }
                Tape::accumulate(adj, bn, neg.size(), neg.data());
            }
        });
    }
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::check_same_or_scalar("mul", a, b);
    const bool as = a.numel() == 1, bs = b.numel() == 1;
    Tensor out = Tensor::zeros(as && !bs ? b.shape : a.shape);
    const size_t n = static_cast<size_t>(out.numel());
    for (size_t i = 0; i < n; ++i) out.mut()[i] = a.at(as ? 0 : i) * b.at(bs ? 0 : i);

    if (Tape* tape = detail::op_tape({&a, &b})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, bn = b.node, on = out.node;
        auto abuf = a.buf, bbuf = b.buf;
        const size_t na = static_cast<size_t>(a.numel()), nb = static_cast<size_t>(b.numel());
        tape->record(on, [an, bn, on, n, na, nb, abuf, bbuf](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            if (an >= 0) {
                std::vector<double> ga(na, 0.0);
                for (size_t i = 0; i < n; ++i) ga[na == n ? i : 0] += g[i] * (*bbuf)[nb == n ? i : 0];
                Tape::accumulate(adj, an, na, ga.data());
            }
            if (bn >= 0) {
                std::vector<double> gb(nb, 0.0);
                for (size_t i = 0; i < n; ++i) gb[nb == n ? i : 0] += g[i] * (*abuf)[na == n ? i : 0];
                Tape::accumulate(adj, bn, nb, gb.data());
            }
        });
    }
    return out;
}

inline Tensor scalar_mul(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape);
    const size_t n = static_cast<size_t>(a.numel());
    for (size_t i = 0; i < n; ++i) out.mut()[i] = c * a.at(i);

    if (Tape* tape = detail::op_tape({&a})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, on = out.node;
        tape->record(on, [an, on, n, c](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            std::vector<double> ga(n);
            for (size_t i = 0; i < n; ++i) ga[i] = c * g[i];
            Tape::accumulate(adj, an, n, ga.data());
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix multiply: [m,k] x [k,n] -> [m,n], or [m,k] x [k] -> [m].
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape.size() != 2 || (b.shape.size() != 2 && b.shape.size() != 1))
        throw dim_error("matmul: expected [m,k] x [k,n] or [m,k] x [k], got " +
                        Tensor::shape_str(a.shape) + " x " + Tensor::shape_str(b.shape));
    const int m = a.shape[0], k = a.shape[1];
    const bool vec = b.shape.size() == 1;
    const int k2 = b.shape[0];
    const int n = vec ? 1 : b.shape[1];
    if (k != k2)
        throw dim_error("matmul: inner dimensions of " + Tensor::shape_str(a.shape) + " x " +
                        Tensor::shape_str(b.shape) + " do not match");

    Tensor out = Tensor::zeros(vec ? std::vector<int>{m} : std::vector<int>{m, n});
    {
        const double* pa = a.buf->data();
        const double* pb = b.buf->data();
        double* po = out.buf->data();
        for (int i = 0; i < m; ++i)
            for (int p = 0; p < k; ++p) {
                const double av = pa[i * k + p];
                if (av == 0.0) continue;
                for (int j = 0; j < n; ++j) po[i * n + j] += av * pb[p * n + j];
            }
    }

    if (Tape* tape = detail::op_tape({&a, &b})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, bn = b.node, on = out.node;
        auto abuf = a.buf, bbuf = b.buf;
        tape->record(on, [an, bn, on, m, k, n, abuf, bbuf](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            if (an >= 0) {
                std::vector<double> ga(static_cast<size_t>(m) * k, 0.0);
                const double* pb = bbuf->data();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double gv = g[static_cast<size_t>(i) * n + j];
                        for (int p = 0; p < k; ++p) ga[static_cast<size_t>(i) * k + p] += gv * pb[p * n + j];
                    }
                Tape::accumulate(adj, an, ga.size(), ga.data());
            }
            if (bn >= 0) {
                std::vector<double> gb(static_cast<size_t>(k) * n, 0.0);
                const double* pa = abuf->data();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double av = pa[static_cast<size_t>(i) * k + p];
                        for (int j = 0; j < n; ++j) gb[static_cast<size_t>(p) * n + j] += av * g[static_cast<size_t>(i) * n + j];
                    }
                Tape::accumulate(adj, bn, gb.size(), gb.data());
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities.
// ---------------------------------------------------------------------------

namespace detail {

inline double sigmoid_stable(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

template <typename Fwd, typename Back>
Tensor elementwise(const char* /*name*/, const Tensor& a, Fwd fwd, Back back_fn) {
    Tensor out = Tensor::zeros(a.shape);
    const size_t n = static_cast<size_t>(a.numel());
    for (size_t i = 0; i < n; ++i) out.mut()[i] = fwd(a.at(i));

    if (Tape* tape = op_tape({&a})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, on = out.node;
        auto abuf = a.buf;
        tape->record(on, [an, on, n, abuf, back_fn](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            std::vector<double> ga(n);
            for (size_t i = 0; i < n; ++i) ga[i] = g[i] * back_fn((*abuf)[i]);
            Tape::accumulate(adj, an, n, ga.data());
        });
    }
    return out;
}

}  // namespace detail

inline Tensor silu(const Tensor& a) {
    return detail::elementwise(
        "silu", a, [](double x) { return x * detail::sigmoid_stable(x); },
        [](double x) {
            const double s = detail::sigmoid_stable(x);
            return s * (1.0 + x * (1.0 - s));
        });
}

inline Tensor relu(const Tensor& a) {
    return detail::elementwise(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::elementwise(
        "sigmoid", a, [](double x) { return detail::sigmoid_stable(x); },
        [](double x) {
            const double s = detail::sigmoid_stable(x);
            return s * (1.0 - s);
        });
}

inline Tensor sin(const Tensor& a) {
    return detail::elementwise(
        "sin", a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

// ---------------------------------------------------------------------------
// Reductions, reshape, concat, mse.
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& a) {
    double s = 0.0;
    const size_t n = static_cast<size_t>(a.numel());
    for (size_t i = 0; i < n; ++i) s += a.at(i);
    Tensor out = Tensor::scalar(s);

    if (Tape* tape = detail::op_tape({&a})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, on = out.node;
        tape->record(on, [an, on, n](Tape::Adjoints& adj) {
            const double g = adj[static_cast<size_t>(on)][0];
            std::vector<double> ga(n, g);
            Tape::accumulate(adj, an, n, ga.data());
        });
    }
    return out;
}

inline Tensor mean(const Tensor& a) {
    const size_t n = static_cast<size_t>(a.numel());
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a.at(i);
    Tensor out = Tensor::scalar(s / static_cast<double>(n));

    if (Tape* tape = detail::op_tape({&a})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, on = out.node;
        tape->record(on, [an, on, n](Tape::Adjoints& adj) {
            const double g = adj[static_cast<size_t>(on)][0] / static_cast<double>(n);
            std::vector<double> ga(n, g);
            Tape::accumulate(adj, an, n, ga.data());
        });
    }
    return out;
}

inline Tensor reshape(const Tensor& a, std::vector<int> new_shape) {
    if (Tensor::numel_of(new_shape) != a.numel())
        throw dim_error("reshape: cannot view " + Tensor::shape_str(a.shape) + " as " +
                        Tensor::shape_str(new_shape));
    Tensor out(std::move(new_shape), *a.buf);

    if (Tape* tape = detail::op_tape({&a})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, on = out.node;
        const size_t n = static_cast<size_t>(a.numel());
        tape->record(on, [an, on, n](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            Tape::accumulate(adj, an, n, g.data());
        });
    }
    return out;
}

/// Concatenates rank-1 tensors into one rank-1 tensor.
inline Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw contract_error("concat: no inputs");
    size_t total = 0;
    for (const auto& p : parts) {
        if (p.shape.size() != 1)
            throw dim_error("concat: expected rank-1 inputs, got " + Tensor::shape_str(p.shape));
        total += static_cast<size_t>(p.numel());
    }
    Tensor out = Tensor::zeros({static_cast<int>(total)});
    size_t off = 0;
    for (const auto& p : parts) {
        const size_t n = static_cast<size_t>(p.numel());
        for (size_t i = 0; i < n; ++i) out.mut()[off + i] = p.at(i);
        off += n;
    }

    std::vector<const Tensor*> ptrs;
    for (const auto& p : parts) ptrs.push_back(&p);
    Tape* tape = nullptr;
    for (const Tensor* t : ptrs) {
        if (!t->tracked()) continue;
        if (tape != nullptr && tape != t->tape)
            throw contract_error("concat: inputs belong to different computation records");
        tape = t->tape;
    }
    if (tape != nullptr && tape->recording()) {
        out.tape = tape;
        out.node = tape->new_node();
        std::vector<std::pair<int, size_t>> segs;  // (node, length), in order
        for (const auto& p : parts) segs.emplace_back(p.node, static_cast<size_t>(p.numel()));
        const int on = out.node;
        tape->record(on, [segs, on](Tape::Adjoints& adj) {
            const auto& g = adj[static_cast<size_t>(on)];
            size_t off2 = 0;
            for (const auto& [node, len] : segs) {
                if (node >= 0) Tape::accumulate(adj, node, len, g.data() + off2);
                off2 += len;
            }
        });
    }
    return out;
}

/// Mean squared error between two same-shaped tensors; returns a scalar.
inline Tensor mse(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape)
        throw dim_error("mse: shapes " + Tensor::shape_str(a.shape) + " and " +
                        Tensor::shape_str(b.shape) + " do not match");
    const size_t n = static_cast<size_t>(a.numel());
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = a.at(i) - b.at(i);
        s += d * d;
    }
    Tensor out = Tensor::scalar(s / static_cast<double>(n));

    if (Tape* tape = detail::op_tape({&a, &b})) {
        out.tape = tape;
        out.node = tape->new_node();
        const int an = a.node, bn = b.node, on = out.node;
        auto abuf = a.buf, bbuf = b.buf;
        tape->record(on, [an, bn, on, n, abuf, bbuf](Tape::Adjoints& adj) {
            const double g = adj[static_cast<size_t>(on)][0];
            const double c = 2.0 * g / static_cast<double>(n);
            if (an >= 0) {
                std::vector<double> ga(n);
                for (size_t i = 0; i < n; ++i) ga[i] = c * ((*abuf)[i] - (*bbuf)[i]);
                Tape::accumulate(adj, an, n, ga.data());
            }
            if (bn >= 0) {
                std::vector<double> gb(n);
                for (size_t i = 0; i < n; ++i) gb[i] = c * ((*bbuf)[i] - (*abuf)[i]);
                Tape::accumulate(adj, bn, n, gb.data());
            }
        });
    }
    return out;
}

/// Value-identical tensor through which no adjoint flows.
inline Tensor stop_gradient(const Tensor& t) {
    Tensor out;
    out.shape = t.shape;
    out.buf = t.buf;
    return out;
}

/// Sum of squared differences (the pixel-wise squared l2 norm).
inline Tensor sq_norm(const Tensor& a, const Tensor& b) {
    Tensor d = sub(a, b);
    return sum(mul(d, d));
}

/// Compares the reverse-pass gradient of `f` at `x` against central finite
/// differences. Returns the max over coordinates of
/// |analytic - numeric| / max(1, |analytic|).
inline double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                double eps) {
    if (eps <= 0.0) throw contract_error("finite_diff_check: eps must be positive");

    std::vector<double> analytic;
    {
        Tape tape;
        Tensor xt = x.deep_copy();
        tape.watch(xt);
        Tensor loss = f(xt);
        if (loss.numel() != 1) throw contract_error("finite_diff_check: f must return a scalar");
        if (!std::isfinite(loss.item()))
            throw numeric_error("finite_diff_check: non-finite value from f");
        GradMap g = tape.backward(loss);
        analytic = g.at(xt);
    }

    const size_t n = static_cast<size_t>(x.numel());
    double max_err = 0.0;
    for (size_t i = 0; i < n; ++i) {
        Tensor xp = x.deep_copy();
        xp.mut()[i] += eps;
        const double fp = f(xp).item();
        Tensor xm = x.deep_copy();
        xm.mut()[i] -= eps;
        const double fm = f(xm).item();
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw numeric_error("finite_diff_check: non-finite value from f");
        const double numeric = (fp - fm) / (2.0 * eps);
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace rid
