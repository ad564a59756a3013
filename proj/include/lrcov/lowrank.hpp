#pragma once

#include "lrcov/discretize.hpp"

#include <optional>

namespace lrcov {

/// Truncation tolerance for low-rank recompression.
struct TruncationPolicy {
    double eps0 = 1e-8;                 // relative Frobenius tolerance
    std::optional<Index> r_max;         // hard rank cap

    void validate() const;
};

/// Space-time field Y = W1 * W2^T with Y in R^{n_x x n_t}.
///
/// After lr_truncate the factors are in canonical form: W1 has orthonormal
/// columns, W2 = Q * diag(sigma) with sigma nonincreasing and positive, and the
/// largest-magnitude entry of every W1 column is positive.
class LowRankMat {
public:
    LowRankMat() = default;
    LowRankMat(Index n_x, Index n_t) : w1_(n_x, 0), w2_(n_t, 0) {}
    LowRankMat(Matrix w1, Matrix w2);

    static LowRankMat zero(Index n_x, Index n_t) { return LowRankMat(n_x, n_t); }
    /// Rank-1 field u * v^T.
    static LowRankMat outer(const Vector& u, const Vector& v);

    Index rows() const { return w1_.rows(); }
    Index cols() const { return w2_.rows(); }
    Index rank() const { return w1_.cols(); }

    const Matrix& w1() const { return w1_; }
    const Matrix& w2() const { return w2_; }
    Matrix& w1() { return w1_; }
    Matrix& w2() { return w2_; }

private:
    Matrix w1_;
    Matrix w2_;
};

LowRankMat lr_truncate(const LowRankMat& A, const TruncationPolicy& pol);
/// Exact sum by factor concatenation; the caller truncates.
LowRankMat lr_add(const LowRankMat& A, const LowRankMat& B);
/// A + c * B, exact.
LowRankMat lr_axpy(const LowRankMat& A, double c, const LowRankMat& B);
double lr_dot(const LowRankMat& A, const LowRankMat& B);
double lr_norm(const LowRankMat& A);
LowRankMat lr_scale(const LowRankMat& A, double c);
Matrix lr_to_dense(const LowRankMat& A);
LowRankMat lr_from_dense(const Matrix& X, const TruncationPolicy& pol);

/// Singular values of the represented matrix (via the small core), descending.
Vector lr_singular_values(const LowRankMat& A);

/// vec() in column-major order (time blocks stacked), and its inverse.
Vector lr_vec(const LowRankMat& A);
Matrix unvec(const Vector& v, Index n_x, Index n_t);

} // namespace lrcov
