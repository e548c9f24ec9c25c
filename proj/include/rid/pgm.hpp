// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rid/errors.hpp"
#include "rid/tensor.hpp"

namespace rid {

/// Writes a [0,1] grayscale image as binary PGM (P5).
inline void write_pgm(const std::string& path, const Tensor& img) {
    const int h = img.shape[0], w = img.shape[1];
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("pgm: cannot open " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    for (int i = 0; i < h * w; ++i) {
        const double v = std::min(1.0, std::max(0.0, img.at(static_cast<size_t>(i))));
        const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
        out.put(static_cast<char>(b));
    }
    if (!out) throw io_error("pgm: write failed for " + path);
}

/// Tiles same-sized images into a rows x cols grid (row-major) and writes P5.
inline void write_pgm_grid(const std::string& path, const std::vector<Tensor>& images, int rows,
                           int cols) {
    if (images.empty() || rows * cols < static_cast<int>(images.size()))
        throw contract_error("pgm grid: grid smaller than image count");
    const int h = images[0].shape[0], w = images[0].shape[1];
    Tensor grid = Tensor::zeros({rows * h, cols * w});
    for (size_t idx = 0; idx < images.size(); ++idx) {
        const int r = static_cast<int>(idx) / cols, c = static_cast<int>(idx) % cols;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                grid.mut()[(r * h + y) * (cols * w) + c * w + x] = images[idx].at(static_cast<size_t>(y * w + x));
    }
    write_pgm(path, grid);
}

}  // namespace rid
