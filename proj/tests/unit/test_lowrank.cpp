#include "helpers.hpp"
#include "lrcov/lowrank.hpp"

#include <doctest.h>

using namespace lrcov;
using namespace testutil;

TEST_CASE("truncate keeps a rank-1 field")
{
    std::mt19937_64 rng(1);
    const Vector u = randn(20, rng), v = randn(15, rng);
    const LowRankMat A = LowRankMat::outer(u, v);
    const LowRankMat T = lr_truncate(A, {});
    CHECK(T.rank() == 1);
    CHECK((lr_to_dense(T) - u * v.transpose()).norm() <= 1e-14 * (u * v.transpose()).norm());
}

TEST_CASE("truncate drops a 1e-12 component")
{
    Vector u = Vector::Zero(10), p = Vector::Zero(10), v = Vector::Zero(8), q = Vector::Zero(8);
    u(0) = 1;
    p(3) = 1;
    v(1) = 1;
    q(5) = 1;
    const LowRankMat A = lr_add(LowRankMat::outer(u, v), LowRankMat::outer(1e-12 * p, q));
    const LowRankMat T = lr_truncate(A, {});
    CHECK(T.rank() == 1);
    CHECK((lr_to_dense(T) - lr_to_dense(A)).norm() == doctest::Approx(1e-12).epsilon(1e-6));
}

TEST_CASE("recompression of a random rank-20 matrix")
{
    std::mt19937_64 rng(2);
    const LowRankMat A = random_lr(50, 40, 20, rng);
    const Matrix X = lr_to_dense(A);
    const LowRankMat T = lr_truncate(A, {});
    CHECK(T.rank() == 20);
    CHECK((lr_to_dense(T) - X).norm() <= 1e-8 * X.norm());
    CHECK(T.rank() <= std::min<Index>(50, 40));
}

TEST_CASE("truncation contract and canonical form")
{
    std::mt19937_64 rng(3);
    for (double eps : {1e-1, 1e-3, 1e-8}) {
        // Geometric singular values so every tolerance cuts somewhere.
        Matrix U = Eigen::HouseholderQR<Matrix>(randn(60, 12, rng)).householderQ() * Matrix::Identity(60, 12);
        Matrix V = Eigen::HouseholderQR<Matrix>(randn(30, 12, rng)).householderQ() * Matrix::Identity(30, 12);
        Vector s(12);
        for (Index i = 0; i < 12; ++i) s(i) = std::pow(10.0, -0.7 * static_cast<double>(i));
        const LowRankMat A(U * s.asDiagonal(), V);
        const Matrix X = lr_to_dense(A);
        TruncationPolicy pol;
        pol.eps0 = eps;
        const LowRankMat T = lr_truncate(A, pol);
        CHECK((lr_to_dense(T) - X).norm() <= eps * X.norm());
        // Smallest admissible rank: dropping one more column would violate the bound.
        if (T.rank() > 0) {
            const Vector sv = lr_singular_values(A);
            CHECK(sv.tail(sv.size() - T.rank() + 1).norm() > eps * X.norm());
        }
        // Canonical: orthonormal W1, W2 columns orthogonal with nonincreasing norms.
        const Matrix G1 = T.w1().transpose() * T.w1();
        CHECK((G1 - Matrix::Identity(T.rank(), T.rank())).cwiseAbs().maxCoeff() < 1e-13);
        const Matrix G2 = T.w2().transpose() * T.w2();
        for (Index i = 0; i < T.rank(); ++i)
            for (Index j = 0; j < T.rank(); ++j)
                if (i != j) CHECK(std::abs(G2(i, j)) < 1e-13 * G2(0, 0));
        for (Index i = 1; i < T.rank(); ++i) CHECK(G2(i, i) <= G2(i - 1, i - 1));

        const LowRankMat TT = lr_truncate(T, pol);
        CHECK(TT.rank() == T.rank());
        CHECK((TT.w1() - T.w1()).cwiseAbs().maxCoeff() <= 1e-14 * 10);
        CHECK((TT.w2() - T.w2()).cwiseAbs().maxCoeff() <= 1e-14 * 10 * T.w2().cwiseAbs().maxCoeff());
    }
}

TEST_CASE("rank cap")
{
    std::mt19937_64 rng(4);
    TruncationPolicy pol;
    pol.r_max = 3;
    CHECK(lr_truncate(random_lr(20, 10, 6, rng), pol).rank() == 3);
    TruncationPolicy bad;
    bad.eps0 = 1.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("addition")
{
    std::mt19937_64 rng(5);
    const LowRankMat A = random_lr(12, 9, 3, rng);
    CHECK(lr_truncate(lr_axpy(A, -1.0, A), {}).rank() == 0);
    CHECK(lr_add(A, A).rank() == 6);

    const Vector u = randn(12, rng);
    const LowRankMat s = lr_add(LowRankMat::outer(u, randn(9, rng)), LowRankMat::outer(u, randn(9, rng)));
    CHECK(lr_truncate(s, {}).rank() == 1);

    const LowRankMat B = random_lr(12, 9, 3, rng);
    const Matrix sum = lr_to_dense(lr_add(A, B));
    CHECK((sum - (lr_to_dense(A) + lr_to_dense(B))).norm() <= 1e-14 * sum.norm() * 10);

    CHECK_THROWS(lr_add(A, random_lr(11, 9, 1, rng)));
    CHECK_THROWS(lr_dot(A, random_lr(12, 8, 1, rng)));
}

TEST_CASE("dot products")
{
    Vector e1 = Vector::Zero(4), e2 = Vector::Zero(4), f1 = Vector::Zero(3);
    e1(0) = 1;
    e2(1) = 1;
    f1(0) = 1;
    CHECK(lr_dot(LowRankMat::outer(e1, f1), LowRankMat::outer(e1, f1)) == 1.0);
    CHECK(lr_dot(LowRankMat::outer(e1, f1), LowRankMat::outer(e2, f1)) == 0.0);

    std::mt19937_64 rng(6);
    for (int t = 0; t < 5; ++t) {
        const LowRankMat A = random_lr(30, 20, 2, rng), B = random_lr(30, 20, 2, rng), C = random_lr(30, 20, 2, rng);
        const double dense = vec(lr_to_dense(A)).dot(vec(lr_to_dense(B)));
        CHECK(rel(lr_dot(A, B), dense) <= 1e-13);
        CHECK(rel(lr_dot(B, A), lr_dot(A, B)) <= 1e-13);
        const double lhs = lr_dot(lr_axpy(A, 2.5, C), B);
        CHECK(rel(lhs, lr_dot(A, B) + 2.5 * lr_dot(C, B)) <= 1e-12);
    }
}

TEST_CASE("norm, scale, dense round trip, vec")
{
    std::mt19937_64 rng(7);
    CHECK(lr_norm(LowRankMat::zero(5, 4)) == 0.0);
    const LowRankMat A = random_lr(15, 7, 3, rng);
    CHECK(lr_scale(A, 0.0).rank() == 0);
    CHECK(rel(lr_norm(A), lr_to_dense(A).norm()) <= 1e-13);

    const LowRankMat R = lr_from_dense(lr_to_dense(A), {});
    CHECK(R.rank() == 3);
    CHECK((lr_to_dense(R) - lr_to_dense(A)).norm() <= 1e-8 * lr_norm(A));

    const Vector v = lr_vec(A);
    CHECK((v - vec(lr_to_dense(A))).norm() == 0.0);
    CHECK((unvec(v, 15, 7) - lr_to_dense(A)).norm() == 0.0);
    CHECK(lr_truncate(LowRankMat::zero(6, 5), {}).rank() == 0);
}
