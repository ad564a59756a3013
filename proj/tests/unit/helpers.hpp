#pragma once

#include "lrcov/discretize.hpp"
#include "lrcov/lowrank.hpp"

#include <random>

namespace testutil {

using lrcov::Index;
using lrcov::Matrix;
using lrcov::Vector;

inline Matrix randn(Index r, Index c, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = nd(rng);
    return m;
}

inline Vector randn(Index n, std::mt19937_64& rng) { return randn(n, 1, rng).col(0); }

inline lrcov::LowRankMat random_lr(Index n_x, Index n_t, Index r, std::mt19937_64& rng)
{
    return lrcov::LowRankMat(randn(n_x, r, rng), randn(n_t, r, rng));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Dense all-at-once matrix: diagonal blocks h^2 (I + tau L), subdiagonal -h^2 I.
inline Matrix dense_k(const Matrix& L, double m, double tau, Index n_t)
{
    const Index n = L.rows();
    Matrix K = Matrix::Zero(n * n_t, n * n_t);
    for (Index k = 0; k < n_t; ++k) {
        K.block(k * n, k * n, n, n) = m * (Matrix::Identity(n, n) + tau * L);
        if (k > 0) K.block(k * n, (k - 1) * n, n, n) = -m * Matrix::Identity(n, n);
    }
    return K;
}

inline Vector vec(const Matrix& X) { return Eigen::Map<const Vector>(X.data(), X.size()); }

} // namespace testutil
