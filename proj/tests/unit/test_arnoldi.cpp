#include "helpers.hpp"
#include "lrcov/arnoldi.hpp"
#include "lrcov/hessian.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace lrcov;
using namespace testutil;

TEST_CASE("identity operator breaks down after one step")
{
    std::mt19937_64 rng(31);
    StopRule stop;
    const auto res = lr_arnoldi([](const Vector& v) { return v; }, randn(10, rng), TruncationPolicy{}, stop);
    CHECK(res.iterations == 1);
    CHECK(res.invariant_subspace);
    CHECK(res.reason == StopReason::Breakdown);
    CHECK(res.H(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    REQUIRE(res.ritz.size() == 1);
    CHECK(res.ritz[0].value.real() == doctest::Approx(1.0));
}

TEST_CASE("diagonal operator from the all-ones start")
{
    const Index n = 8;
    Vector d(n);
    for (Index i = 0; i < n; ++i) d(i) = static_cast<double>(n - i);
    StopRule stop;
    stop.m_a = n;
    const auto res = lr_arnoldi([&d](const Vector& v) { return Vector(d.cwiseProduct(v)); },
                                Vector(Vector::Ones(n)), TruncationPolicy{}, stop);
    REQUIRE(res.ritz.size() >= 3);
    CHECK(std::abs(res.ritz[0].value.real() - 8.0) <= 1e-10);
    CHECK(std::abs(res.ritz[1].value.real() - 7.0) <= 1e-10);
    CHECK(std::abs(res.ritz[2].value.real() - 6.0) <= 1e-10);
    // Hessenberg structure and orthonormality.
    for (Index j = 0; j < res.H.cols(); ++j)
        for (Index i = j + 2; i < res.H.rows(); ++i) CHECK(res.H(i, j) == 0.0);
    for (std::size_t i = 0; i < res.basis.size(); ++i)
        for (std::size_t j = 0; j < res.basis.size(); ++j)
            CHECK(std::abs(res.basis[i].dot(res.basis[j]) - (i == j ? 1.0 : 0.0)) <= 1e-12);
}

TEST_CASE("restart on breakdown reaches a second eigenspace")
{
    // Start vector inside one eigenspace: plain Arnoldi stops, restart continues.
    Vector d(6);
    d << 5, 4, 3, 2, 1, 0.5;
    Vector v1 = Vector::Zero(6);
    v1(1) = 1.0;
    auto op = [&d](const Vector& v) { return Vector(d.cwiseProduct(v)); };
    StopRule plain;
    const auto a = lr_arnoldi(op, v1, TruncationPolicy{}, plain);
    CHECK(a.iterations == 1);
    StopRule rs;
    rs.restart_on_breakdown = true;
    const auto b = lr_arnoldi(op, v1, TruncationPolicy{}, rs);
    CHECK(b.restarts >= 1);
    CHECK(b.ritz[0].value.real() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("Ritz extraction")
{
    Matrix H = Matrix::Zero(2, 1);
    H(0, 0) = 2.5;
    H(1, 0) = 0.3;
    const RitzValues rv = ritz_values(H, 1, true);
    REQUIRE(rv.values.size() == 1);
    CHECK(rv.values[0].real() == 2.5);
    CHECK(rv.residual_estimates[0] == doctest::Approx(0.3));

    // Symmetric tridiagonal leading block: real Ritz values.
    Matrix T = Matrix::Zero(6, 5);
    for (Index i = 0; i < 5; ++i) {
        T(i, i) = 2.0 + static_cast<double>(i);
        if (i + 1 < 6) T(i + 1, i) = 0.5;
        if (i > 0) T(i - 1, i) = 0.5;
    }
    const RitzValues rt = ritz_values(T, 5, false);
    for (const auto& z : rt.values) CHECK(std::abs(z.imag()) <= 1e-15 * 10);
    for (std::size_t i = 1; i < rt.values.size(); ++i) CHECK(rt.values[i].real() <= rt.values[i - 1].real());

    // ritz_pairs with m = 1 returns the first basis vector.
    std::vector<Vector> basis{Vector::Unit(3, 0), Vector::Unit(3, 1)};
    const auto pairs = ritz_pairs(H, 1, basis, TruncationPolicy{});
    REQUIRE(pairs.size() == 1);
    CHECK((pairs[0].vector - Vector::Unit(3, 0)).norm() <= 1e-15);
}

TEST_CASE("low-rank basis on the distributed-source Hessian")
{
    auto K = std::make_shared<SpaceTimeOperator>(assemble_heat(build_grid(15)), build_time_grid(10));
    const Grid g = K->grid();
    HessianContext ctx(K, make_sensor_layout_3x3(g), CovarianceSpec::scalar_prior(10, 1e4, g), {},
                       HessianMode::DistributedSource);
    std::mt19937_64 rng(32);
    StopRule stop;
    stop.m_a = 25;
    stop.check_every = 100;
    const LowRankMat v1 = VectorOps<LowRankMat>::random_like(LowRankMat::zero(g.n_x(), 10), rng);
    const auto res = lr_arnoldi([&ctx](const LowRankMat& v) { return misfit_apply_st(v, ctx); }, v1,
                                ctx.policy(), stop, {});
    double worst = 0.0, norm_dev = 0.0;
    for (std::size_t i = 0; i < res.basis.size(); ++i) {
        norm_dev = std::max(norm_dev, std::abs(lr_norm(res.basis[i]) - 1.0));
        for (std::size_t j = 0; j < i; ++j) worst = std::max(worst, std::abs(lr_dot(res.basis[i], res.basis[j])));
    }
    CHECK(worst <= 1e-6);
    CHECK(norm_dev <= 1e-8);
    for (const auto& p : res.ritz)
        CHECK(std::abs(p.value.imag()) <= 1e-8 * std::abs(res.ritz.front().value.real()));

    // Arnoldi relation, measured densely.
    const Index m = res.iterations;
    Matrix Vm(g.n_x() * 10, m + 1);
    for (Index j = 0; j <= m; ++j) Vm.col(j) = lr_vec(res.basis[static_cast<std::size_t>(j)]);
    for (Index j = 0; j < m; ++j) {
        const Vector Av = lr_vec(misfit_apply_st(res.basis[static_cast<std::size_t>(j)], ctx));
        const Vector rel_col = Av - Vm * res.H.col(j);
        CHECK(rel_col.norm() <= 10 * 1e-8 * res.H.norm());
    }
}

TEST_CASE("largest Ritz value is nondecreasing")
{
    auto K = std::make_shared<SpaceTimeOperator>(assemble_heat(build_grid(15)), build_time_grid(10));
    const Grid g = K->grid();
    HessianContext ctx(K, make_sensor_layout_3x3(g), CovarianceSpec::scalar_prior(10, 1e4, g), {},
                       HessianMode::InitialCondition);
    std::mt19937_64 rng(33);
    StopRule stop;
    stop.m_a = 30;
    stop.check_every = 100;
    const auto res = lr_arnoldi([&ctx](const Vector& v) { return misfit_apply_ic(v, ctx); }, randn(g.n_x(), rng),
                                ctx.policy(), stop);
    double prev = 0.0;
    for (Index m = 1; m <= res.iterations; ++m) {
        const double top = ritz_values(res.H, m, false).values.front().real();
        CHECK(top >= prev * (1.0 - 10 * 1e-8));
        prev = top;
    }
}

TEST_CASE("separation rank")
{
    const Grid g = build_grid(15);
    const Vector s = analytic_separable_eigvec(2, 3, g).dense();
    const SeparationRank r1 = rank_one_check(s, g);
    CHECK(r1.rank == 1);
    CHECK(r1.tail_ratio <= 1e-6);

    const Vector two = analytic_separable_eigvec(1, 1, g).dense() + analytic_separable_eigvec(2, 3, g).dense();
    CHECK(rank_one_check(two, g).rank == 2);

    std::mt19937_64 rng(34);
    CHECK(rank_one_check(randn(g.n_x(), rng), g).rank >= 14);

    CHECK(rank_one_check(LowRankMat::outer(randn(20, rng), randn(6, rng))).rank == 1);
}

TEST_CASE("stop rule validation")
{
    StopRule s;
    s.m_a = 0;
    CHECK_THROWS(s.validate());
    StopRule e;
    e.eps_eig = 0.0;
    CHECK_THROWS(e.validate());
}
