// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only as test oracles. Kept independent of
// the library code paths they check: the DCT here is the direct O(n^2)
// summation formula, rounding is the real thing.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "rid/tensor.hpp"

namespace oracle {

inline std::array<int, 64> jpeg_table(int quality) {
    static const int base[64] = {
        16, 11, 10, 16, 24,  40,  51,  61,   //
        12, 12, 14, 19, 26,  58,  60,  55,   //
        14, 13, 16, 24, 40,  57,  69,  56,   //
        14, 17, 22, 29, 51,  87,  80,  62,   //
        18, 22, 37, 56, 68,  109, 103, 77,   //
        24, 35, 55, 64, 81,  104, 113, 92,   //
        49, 64, 78, 87, 103, 121, 120, 101,  //
        72, 92, 95, 98, 112, 100, 103, 99};
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> t{};
    for (int i = 0; i < 64; ++i) t[static_cast<size_t>(i)] = std::min(255, std::max(1, (base[i] * scale + 50) / 100));
    return t;
}

/// Hard-rounding JPEG round trip of a [0,1] image (luminance only, no
/// entropy coding). Returns the reconstructed pixels.
inline std::vector<double> jpeg_reconstruct(const rid::Tensor& img, int quality) {
    const int h = img.shape[0], w = img.shape[1];
    const auto table = jpeg_table(quality);
    const double pi = 3.14159265358979323846;
    std::vector<double> out(static_cast<size_t>(h) * w, 0.0);

    for (int by = 0; by < h / 8; ++by)
        for (int bx = 0; bx < w / 8; ++bx) {
            double block[8][8];
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    block[r][c] = (img.at(static_cast<size_t>((by * 8 + r) * w + bx * 8 + c)) - 0.5) * 255.0;

            double coef[8][8];
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double s = 0.0;
                    for (int r = 0; r < 8; ++r)
                        for (int c = 0; c < 8; ++c)
                            s += block[r][c] * std::cos((2 * r + 1) * u * pi / 16.0) *
                                 std::cos((2 * c + 1) * v * pi / 16.0);
                    const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                    const double cv = v == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                    const double q = table[static_cast<size_t>(u * 8 + v)];
                    coef[u][v] = q * std::lround(cu * cv * s / q);
                }

            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c) {
                    double s = 0.0;
                    for (int u = 0; u < 8; ++u)
                        for (int v = 0; v < 8; ++v) {
                            const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                            const double cv = v == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                            s += cu * cv * coef[u][v] * std::cos((2 * r + 1) * u * pi / 16.0) *
                                 std::cos((2 * c + 1) * v * pi / 16.0);
                        }
                    out[static_cast<size_t>((by * 8 + r) * w + bx * 8 + c)] = s / 255.0 + 0.5;
                }
        }
    return out;
}

/// Count of nonzero hard-quantized coefficients, same pipeline as above.
inline int jpeg_nonzero_count(const rid::Tensor& img, int quality) {
    const int h = img.shape[0], w = img.shape[1];
    const auto table = jpeg_table(quality);
    const double pi = 3.14159265358979323846;
    int count = 0;
    for (int by = 0; by < h / 8; ++by)
        for (int bx = 0; bx < w / 8; ++bx)
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double s = 0.0;
                    for (int r = 0; r < 8; ++r)
                        for (int c = 0; c < 8; ++c)
                            s += ((img.at(static_cast<size_t>((by * 8 + r) * w + bx * 8 + c)) - 0.5) * 255.0) *
                                 std::cos((2 * r + 1) * u * pi / 16.0) *
                                 std::cos((2 * c + 1) * v * pi / 16.0);
                    const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                    const double cv = v == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
                    if (std::lround(cu * cv * s / table[static_cast<size_t>(u * 8 + v)]) != 0) ++count;
                }
    return count;
}

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace oracle
