// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "rid/errors.hpp"

namespace rid::linalg {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(size_t rows, size_t cols) {
    return Matrix(rows, std::vector<double>(cols, 0.0));
}

/// Solves A X = B in place via Gaussian elimination with partial pivoting.
/// A is n x n, B is n x m; returns X (n x m).
inline Matrix solve(Matrix a, Matrix b) {
    const size_t n = a.size();
    if (b.size() != n) throw dim_error("linalg::solve: rhs row count mismatch");
    const size_t m = b.empty() ? 0 : b[0].size();

    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-14)
            throw numeric_error("linalg::solve: singular system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);

        const double inv = 1.0 / a[col][col];
        for (size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] * inv;
            if (f == 0.0) continue;
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            for (size_t c = 0; c < m; ++c) b[r][c] -= f * b[col][c];
        }
    }
    Matrix x = zeros(n, m);
    for (size_t row = n; row-- > 0;) {
        for (size_t c = 0; c < m; ++c) {
            double s = b[row][c];
            for (size_t k = row + 1; k < n; ++k) s -= a[row][k] * x[k][c];
            x[row][c] = s / a[row][row];
        }
    }
    return x;
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// `evals` and orthonormal eigenvectors as columns of the returned matrix.
inline Matrix jacobi_eig(Matrix s, std::vector<double>& evals, int max_sweeps = 64) {
    const size_t n = s.size();
    Matrix v = zeros(n, n);
    for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off += s[p][q] * s[p][q];
        if (off < 1e-26) break;

        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) {
                if (std::abs(s[p][q]) < 1e-300) continue;
                const double theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (size_t k = 0; k < n; ++k) {
                    const double skp = s[k][p], skq = s[k][q];
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double spk = s[p][k], sqk = s[q][k];
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - sn * vkq;
                    v[k][q] = sn * vkp + c * vkq;
                }
            }
    }
    evals.resize(n);
    for (size_t i = 0; i < n; ++i) evals[i] = s[i][i];
    return v;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    const size_t m = a.size(), k = a.empty() ? 0 : a[0].size(), n = b.empty() ? 0 : b[0].size();
    if (b.size() != k) throw dim_error("linalg::matmul: inner dimension mismatch");
    Matrix out = zeros(m, n);
    for (size_t i = 0; i < m; ++i)
        for (size_t p = 0; p < k; ++p) {
            const double av = a[i][p];
            if (av == 0.0) continue;
            for (size_t j = 0; j < n; ++j) out[i][j] += av * b[p][j];
        }
    return out;
}

/// Symmetric positive-semidefinite square root via eigen-decomposition with
/// eigenvalue clamping at zero.
inline Matrix sym_sqrt(const Matrix& s) {
    std::vector<double> evals;
    Matrix v = jacobi_eig(s, evals);
    const size_t n = s.size();
    Matrix out = zeros(n, n);
    for (size_t k = 0; k < n; ++k) {
        const double r = std::sqrt(std::max(evals[k], 0.0));
        if (r == 0.0) continue;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) out[i][j] += r * v[i][k] * v[j][k];
    }
    return out;
}

}  // namespace rid::linalg
