// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "rid/errors.hpp"
#include "rid/tensor.hpp"

namespace rid {

/// Differentiable JPEG pipeline settings. Block size is fixed at 8; the
/// soft-round temperature tau blends between identity (0) and a full
/// sinusoidal pull toward integers (1).
struct JpegConfig {
    int quality = 80;
    double tau = 1.0;
};

namespace jpeg {

constexpr int kBlock = 8;

/// Standard JPEG luminance quantization table (Annex K).
inline const std::array<int, 64>& base_luminance_table() {
    static const std::array<int, 64> t = {
        16, 11, 10, 16, 24,  40,  51,  61,   //
        12, 12, 14, 19, 26,  58,  60,  55,   //
        14, 13, 16, 24, 40,  57,  69,  56,   //
        14, 17, 22, 29, 51,  87,  80,  62,   //
        18, 22, 37, 56, 68,  109, 103, 77,   //
        24, 35, 55, 64, 81,  104, 113, 92,   //
        49, 64, 78, 87, 103, 121, 120, 101,  //
        72, 92, 95, 98, 112, 100, 103, 99};
    return t;
}

/// IJG quality mapping: scale = 5000/q below 50, else 200 - 2q; entries are
/// floor((base*scale + 50)/100) clamped to [1, 255].
inline std::array<int, 64> scaled_table(int quality) {
    if (quality < 1 || quality > 100) throw contract_error("jpeg: quality must be in [1,100]");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> out{};
    const auto& base = base_luminance_table();
    for (int i = 0; i < 64; ++i) {
        int v = (base[static_cast<size_t>(i)] * scale + 50) / 100;
        out[static_cast<size_t>(i)] = std::min(255, std::max(1, v));
    }
    return out;
}

/// Orthonormal 8x8 DCT-II matrix.
inline const std::vector<double>& dct_matrix() {
    static const std::vector<double> d = [] {
        std::vector<double> m(64);
        const double pi = 3.14159265358979323846;
        for (int k = 0; k < 8; ++k) {
            const double c = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n) m[static_cast<size_t>(k * 8 + n)] = c * std::cos(pi * (2 * n + 1) * k / 16.0);
        }
        return m;
    }();
    return d;
}

}  // namespace jpeg

/// Differentiable JPEG reconstruction of a [0,1] image whose sides are
/// multiples of 8. Per block: center and scale to pixel units, 2-D DCT,
/// divide by the quality-scaled table, soft-round
/// x - tau*sin(2*pi*x)/(2*pi), multiply back, inverse DCT, undo the scaling.
inline Tensor diff_jpeg(const Tensor& img, const JpegConfig& cfg) {
    const int h = img.shape.size() == 2 ? img.shape[0] : 0;
    const int w = img.shape.size() == 2 ? img.shape[1] : 0;
    if (h == 0 || h % jpeg::kBlock != 0 || w % jpeg::kBlock != 0)
        throw contract_error("diff_jpeg: image dims " + Tensor::shape_str(img.shape) +
                             " must be multiples of 8");

    const auto table = jpeg::scaled_table(cfg.quality);
    Tensor recip_q = Tensor::zeros({8, 8});
    Tensor q = Tensor::zeros({8, 8});
    for (int i = 0; i < 64; ++i) {
        q.mut()[static_cast<size_t>(i)] = static_cast<double>(table[static_cast<size_t>(i)]);
        recip_q.mut()[static_cast<size_t>(i)] = 1.0 / table[static_cast<size_t>(i)];
    }
    Tensor dct({8, 8}, jpeg::dct_matrix());
    Tensor dct_t = Tensor::zeros({8, 8});
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) dct_t.mut()[static_cast<size_t>(j * 8 + i)] = dct.at(static_cast<size_t>(i * 8 + j));

    // Center to [-0.5, 0.5] and scale to 8-bit pixel units so the standard
    // table applies.
    Tensor y = scalar_mul(add(img, Tensor::scalar(-0.5)), 255.0);

    const double pi2 = 2.0 * 3.14159265358979323846;
    Tensor out;  // accumulated reconstruction in pixel units
    for (int by = 0; by < h / 8; ++by)
        for (int bx = 0; bx < w / 8; ++bx) {
            Tensor rows = Tensor::zeros({8, h});  // selects the block's rows
            for (int r = 0; r < 8; ++r) rows.mut()[static_cast<size_t>(r * h + by * 8 + r)] = 1.0;
            Tensor cols = Tensor::zeros({w, 8});  // selects the block's columns
            for (int r = 0; r < 8; ++r) cols.mut()[static_cast<size_t>((bx * 8 + r) * 8 + r)] = 1.0;

            Tensor block = matmul(matmul(rows, y), cols);
            Tensor coef = matmul(matmul(dct, block), dct_t);
            Tensor u = mul(coef, recip_q);
            Tensor soft = add(u, scalar_mul(sin(scalar_mul(u, pi2)), -cfg.tau / pi2));
            Tensor deq = mul(soft, q);
            Tensor rec = matmul(matmul(dct_t, deq), dct);

            Tensor rows_t = Tensor::zeros({h, 8});
            for (int r = 0; r < 8; ++r) rows_t.mut()[static_cast<size_t>((by * 8 + r) * 8 + r)] = 1.0;
            Tensor cols_t = Tensor::zeros({8, w});
            for (int r = 0; r < 8; ++r) cols_t.mut()[static_cast<size_t>(r * w + bx * 8 + r)] = 1.0;
            Tensor placed = matmul(matmul(rows_t, rec), cols_t);
            out = (by == 0 && bx == 0) ? placed : add(out, placed);
        }

    return add(scalar_mul(out, 1.0 / 255.0), Tensor::scalar(0.5));
}

/// Hard-rounding coefficient census at the given quality: how many quantized
/// DCT coefficients survive as nonzero. Drives the lossy size proxy.
inline int count_nonzero_coefficients(const Tensor& img, int quality) {
    const int h = img.shape[0], w = img.shape[1];
    if (h % jpeg::kBlock != 0 || w % jpeg::kBlock != 0)
        throw contract_error("jpeg census: image dims must be multiples of 8");
    const auto table = jpeg::scaled_table(quality);
    const auto& d = jpeg::dct_matrix();

    int count = 0;
    for (int by = 0; by < h / 8; ++by)
        for (int bx = 0; bx < w / 8; ++bx) {
            double block[64];
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    block[r * 8 + c] = (img.at(static_cast<size_t>((by * 8 + r) * w + bx * 8 + c)) - 0.5) * 255.0;
            double tmp[64];
            for (int k = 0; k < 8; ++k)
                for (int c = 0; c < 8; ++c) {
                    double s = 0;
                    for (int n = 0; n < 8; ++n) s += d[static_cast<size_t>(k * 8 + n)] * block[n * 8 + c];
                    tmp[k * 8 + c] = s;
                }
            for (int k = 0; k < 8; ++k)
                for (int l = 0; l < 8; ++l) {
                    double s = 0;
                    for (int c = 0; c < 8; ++c) s += tmp[k * 8 + c] * d[static_cast<size_t>(l * 8 + c)];
                    if (std::lround(s / table[static_cast<size_t>(k * 8 + l)]) != 0) ++count;
                }
        }
    return count;
}

}  // namespace rid
