#include "lrcov/lowrank.hpp"
#include "lrcov/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lrcov {

namespace {

constexpr double kNoiseFloor = 1e-15;
constexpr double kCancelFloor = 1e-14;

void require_same_shape(const LowRankMat& A, const LowRankMat& B, const char* op)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw ConfigError(std::string(op) + ": dimension mismatch");
}

struct ThinQR {
    Matrix Q;  // rows x k
    Matrix R;  // k x cols
};

ThinQR thin_qr(const Matrix& X)
{
    const Index k = std::min(X.rows(), X.cols());
    Eigen::HouseholderQR<Matrix> qr(X);
    ThinQR out;
    out.Q = qr.householderQ() * Matrix::Identity(X.rows(), k);
    out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

// Smallest rank whose discarded tail satisfies the relative Frobenius bound.
// `magnitude` bounds the norm of the uncancelled terms; singular values below
// kCancelFloor * magnitude are rounding residue of cancellation.
Index cut_rank(const Vector& sigma, const TruncationPolicy& pol, double magnitude = 0.0)
{
    const Index n = sigma.size();
    if (n == 0 || sigma(0) <= 0.0 || sigma(0) <= kCancelFloor * magnitude) return 0;
    const double total = sigma.squaredNorm();
    const double budget = pol.eps0 * pol.eps0 * total;
    Index r = n;
    double tail = 0.0;
    while (r > 0) {
        const double next = tail + sigma(r - 1) * sigma(r - 1);
        if (next > budget) break;
        tail = next;
        --r;
    }
    while (r > 0 && (sigma(r - 1) < kNoiseFloor * sigma(0) || sigma(r - 1) <= kCancelFloor * magnitude)) --r;
    if (pol.r_max) r = std::min(r, *pol.r_max);
    return r;
}

void canonical_signs(Matrix& u, Matrix& v)
{
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) {
            u.col(c) *= -1.0;
            v.col(c) *= -1.0;
        }
    }
}

} // namespace

void TruncationPolicy::validate() const
{
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ConfigError("eps0 must lie in (0, 1)");
    if (r_max && *r_max < 0) throw ConfigError("r_max must be nonnegative");
}

LowRankMat::LowRankMat(Matrix w1, Matrix w2) : w1_(std::move(w1)), w2_(std::move(w2))
{
    if (w1_.cols() != w2_.cols()) throw ConfigError("LowRankMat: factor ranks differ");
}

LowRankMat LowRankMat::outer(const Vector& u, const Vector& v)
{
    return LowRankMat(Matrix(u), Matrix(v));
}

LowRankMat lr_truncate(const LowRankMat& A, const TruncationPolicy& pol)
{
    const Index n_x = A.rows();
    const Index n_t = A.cols();
    if (A.rank() == 0) return LowRankMat::zero(n_x, n_t);

    const ThinQR q1 = thin_qr(A.w1());
    const ThinQR q2 = thin_qr(A.w2());
    const Matrix core = q1.R * q2.R.transpose();
    Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    const Index r = cut_rank(sigma, pol, q1.R.norm() * q2.R.norm());
    if (r == 0) return LowRankMat::zero(n_x, n_t);

    Matrix u = q1.Q * svd.matrixU().leftCols(r);
    Matrix v = q2.Q * svd.matrixV().leftCols(r);
    canonical_signs(u, v);
    v = v * sigma.head(r).asDiagonal();
    return LowRankMat(std::move(u), std::move(v));
}

LowRankMat lr_add(const LowRankMat& A, const LowRankMat& B)
{
    return lr_axpy(A, 1.0, B);
}

LowRankMat lr_axpy(const LowRankMat& A, double c, const LowRankMat& B)
{
    require_same_shape(A, B, "lr_add");
    Matrix w1(A.rows(), A.rank() + B.rank());
    Matrix w2(A.cols(), A.rank() + B.rank());
    w1 << A.w1(), c * B.w1();
    w2 << A.w2(), B.w2();
    return LowRankMat(std::move(w1), std::move(w2));
}

double lr_dot(const LowRankMat& A, const LowRankMat& B)
{
    require_same_shape(A, B, "lr_dot");
    if (A.rank() == 0 || B.rank() == 0) return 0.0;
    const Matrix g1 = A.w1().transpose() * B.w1();
    const Matrix g2 = A.w2().transpose() * B.w2();
    return g1.cwiseProduct(g2).sum();
}

double lr_norm(const LowRankMat& A)
{
    return std::sqrt(std::max(0.0, lr_dot(A, A)));
}

LowRankMat lr_scale(const LowRankMat& A, double c)
{
    if (c == 0.0) return LowRankMat::zero(A.rows(), A.cols());
    return LowRankMat(c * A.w1(), A.w2());
}

Matrix lr_to_dense(const LowRankMat& A)
{
    if (A.rank() == 0) return Matrix::Zero(A.rows(), A.cols());
    return A.w1() * A.w2().transpose();
}

LowRankMat lr_from_dense(const Matrix& X, const TruncationPolicy& pol)
{
    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const Index r = cut_rank(sigma, pol);
    if (r == 0) return LowRankMat::zero(X.rows(), X.cols());
    Matrix u = svd.matrixU().leftCols(r);
    Matrix v = svd.matrixV().leftCols(r);
    canonical_signs(u, v);
    v = v * sigma.head(r).asDiagonal();
    return LowRankMat(std::move(u), std::move(v));
}

Vector lr_singular_values(const LowRankMat& A)
{
    if (A.rank() == 0) return Vector();
    const ThinQR q1 = thin_qr(A.w1());
    const ThinQR q2 = thin_qr(A.w2());
    const Matrix core = q1.R * q2.R.transpose();
    return Eigen::JacobiSVD<Matrix>(core).singularValues();
}

Vector lr_vec(const LowRankMat& A)
{
    const Matrix D = lr_to_dense(A);
    return Eigen::Map<const Vector>(D.data(), D.size());
}

Matrix unvec(const Vector& v, Index n_x, Index n_t)
{
    if (v.size() != n_x * n_t) throw ConfigError("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), n_x, n_t);
}

} // namespace lrcov
