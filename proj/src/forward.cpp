#include "lrcov/forward.hpp"
#include "lrcov/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace lrcov {

struct SpaceTimeOperator::Factorization {
    // Heat: one LDLT (A symmetric). ConvDiff: LU of A and of A^T.
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    Eigen::SparseLU<SparseMatrix> lu;
    Eigen::SparseLU<SparseMatrix> lu_t;
    bool symmetric = true;
};

SpaceTimeOperator::SpaceTimeOperator(SpatialOperator spatial, TimeGrid time)
    : spatial_(std::move(spatial)), time_(time), fact_(std::make_unique<Factorization>())
{
    if (time_.n_t < 1 || !(time_.tau > 0.0)) throw ConfigError("invalid time grid");
    const Index n = spatial_.L.rows();
    SparseMatrix I(n, n);
    I.setIdentity();
    step_ = spatial_.m_scale * (I + time_.tau * spatial_.L);
    step_.makeCompressed();

    fact_->symmetric = spatial_.symmetric();
    if (fact_->symmetric) {
        fact_->ldlt.compute(step_);
        if (fact_->ldlt.info() != Eigen::Success)
            throw NumericalError("LDLT factorization of the step matrix failed");
    } else {
        fact_->lu.analyzePattern(step_);
        fact_->lu.factorize(step_);
        if (fact_->lu.info() != Eigen::Success)
            throw NumericalError("LU factorization of the step matrix failed: " +
                                 fact_->lu.lastErrorMessage());
        const SparseMatrix st = step_.transpose();
        fact_->lu_t.analyzePattern(st);
        fact_->lu_t.factorize(st);
        if (fact_->lu_t.info() != Eigen::Success)
            throw NumericalError("LU factorization of the transposed step matrix failed");
    }
}

SpaceTimeOperator::~SpaceTimeOperator() = default;
SpaceTimeOperator::SpaceTimeOperator(SpaceTimeOperator&&) noexcept = default;
SpaceTimeOperator& SpaceTimeOperator::operator=(SpaceTimeOperator&&) noexcept = default;

Matrix SpaceTimeOperator::solve_step(const Matrix& B) const
{
    if (B.cols() == 0) return B;
    Matrix X = fact_->symmetric ? Matrix(fact_->ldlt.solve(B)) : Matrix(fact_->lu.solve(B));
    return X;
}

Matrix SpaceTimeOperator::solve_step_transpose(const Matrix& B) const
{
    if (B.cols() == 0) return B;
    Matrix X = fact_->symmetric ? Matrix(fact_->ldlt.solve(B)) : Matrix(fact_->lu_t.solve(B));
    return X;
}

namespace {

// Row k of the result is row k-1 of W (down-shift in time), row 0 is zero.
Matrix shift_down(const Matrix& W)
{
    Matrix S = Matrix::Zero(W.rows(), W.cols());
    if (W.rows() > 1) S.bottomRows(W.rows() - 1) = W.topRows(W.rows() - 1);
    return S;
}

Matrix shift_up(const Matrix& W)
{
    Matrix S = Matrix::Zero(W.rows(), W.cols());
    if (W.rows() > 1) S.topRows(W.rows() - 1) = W.bottomRows(W.rows() - 1);
    return S;
}

void require_shape(const SpaceTimeOperator& K, Index rows, Index cols)
{
    if (rows != K.n_x() || cols != K.n_t())
        throw ConfigError("space-time field shape does not match the operator");
}

// Accumulates solution columns and recompresses every `cadence` pushes.
class PaneAccumulator {
public:
    PaneAccumulator(Index n_x, Index n_t, const TruncationPolicy& pol, Index cadence)
        : pane_(n_x, n_t), pol_(pol), cadence_(cadence < 1 ? 1 : cadence),
          buffer_(n_x, cadence_), times_(static_cast<std::size_t>(cadence_))
    {}

    void push(Index k, const Vector& y)
    {
        buffer_.col(fill_) = y;
        times_[static_cast<std::size_t>(fill_)] = k;
        if (++fill_ == cadence_) flush();
    }

    LowRankMat finish(SolveStats* stats)
    {
        flush();
        if (stats) stats->max_rank = std::max(stats->max_rank, max_rank_);
        return std::move(pane_);
    }

private:
    void flush()
    {
        if (fill_ == 0) return;
        const Index r = pane_.rank();
        Matrix w1(pane_.rows(), r + fill_);
        Matrix w2 = Matrix::Zero(pane_.cols(), r + fill_);
        w1 << pane_.w1(), buffer_.leftCols(fill_);
        w2.leftCols(r) = pane_.w2();
        for (Index c = 0; c < fill_; ++c) w2(times_[static_cast<std::size_t>(c)], r + c) = 1.0;
        pane_ = lr_truncate(LowRankMat(std::move(w1), std::move(w2)), pol_);
        max_rank_ = std::max(max_rank_, pane_.rank());
        fill_ = 0;
    }

    LowRankMat pane_;
    TruncationPolicy pol_;
    Index cadence_;
    Matrix buffer_;
    std::vector<Index> times_;
    Index fill_ = 0;
    Index max_rank_ = 0;
};

LowRankMat forward_sweep(const SpaceTimeOperator& K, const LowRankMat* rhs, const Vector* init,
                         const TruncationPolicy& pol, SolveStats* stats, Index cadence)
{
    const Index n_x = K.n_x();
    const Index n_t = K.n_t();
    const double m = K.m_scale();
    PaneAccumulator pane(n_x, n_t, pol, cadence);
    Vector y = Vector::Zero(n_x);
    for (Index k = 0; k < n_t; ++k) {
        Vector b = m * y;
        if (k == 0 && init) b += m * (*init);
        if (rhs && rhs->rank() > 0) b += rhs->w1() * rhs->w2().row(k).transpose();
        y = K.solve_step(b);
        if (!y.allFinite()) throw NumericalError("non-finite value in forward sweep");
        pane.push(k, y);
    }
    if (stats) stats->iterations = n_t;
    return pane.finish(stats);
}

} // namespace

LowRankMat SpaceTimeOperator::apply(const LowRankMat& Y) const
{
    require_shape(*this, Y.rows(), Y.cols());
    if (Y.rank() == 0) return Y;
    const Matrix aw = step_ * Y.w1();
    return lr_axpy(LowRankMat(aw, Y.w2()), -m_scale(), LowRankMat(Y.w1(), shift_down(Y.w2())));
}

LowRankMat SpaceTimeOperator::apply_transpose(const LowRankMat& Y) const
{
    require_shape(*this, Y.rows(), Y.cols());
    if (Y.rank() == 0) return Y;
    const Matrix aw = step_.transpose() * Y.w1();
    return lr_axpy(LowRankMat(aw, Y.w2()), -m_scale(), LowRankMat(Y.w1(), shift_up(Y.w2())));
}

Matrix SpaceTimeOperator::apply_dense(const Matrix& Y) const
{
    require_shape(*this, Y.rows(), Y.cols());
    Matrix out = step_ * Y;
    out.rightCols(n_t() - 1) -= m_scale() * Y.leftCols(n_t() - 1);
    return out;
}

Matrix SpaceTimeOperator::apply_transpose_dense(const Matrix& Y) const
{
    require_shape(*this, Y.rows(), Y.cols());
    Matrix out = step_.transpose() * Y;
    out.leftCols(n_t() - 1) -= m_scale() * Y.rightCols(n_t() - 1);
    return out;
}

Vector extract_init(const SpaceTimeOperator& K, const LowRankMat& P)
{
    require_shape(K, P.rows(), P.cols());
    if (P.rank() == 0) return Vector::Zero(K.n_x());
    return K.m_scale() * (P.w1() * P.w2().row(0).transpose());
}

LowRankMat st_solve_sweep(const SpaceTimeOperator& K, const LowRankMat& rhs,
                          const TruncationPolicy& pol, SolveStats* stats, Index cadence)
{
    require_shape(K, rhs.rows(), rhs.cols());
    return forward_sweep(K, &rhs, nullptr, pol, stats, cadence);
}

LowRankMat st_solve_sweep(const SpaceTimeOperator& K, const InitInjection& rhs,
                          const TruncationPolicy& pol, SolveStats* stats, Index cadence)
{
    if (rhs.u.size() != K.n_x()) throw ConfigError("initial vector length does not match n_x");
    return forward_sweep(K, nullptr, &rhs.u, pol, stats, cadence);
}

LowRankMat st_solve_adjoint_sweep(const SpaceTimeOperator& K, const LowRankMat& rhs,
                                  const TruncationPolicy& pol, SolveStats* stats, Index cadence)
{
    require_shape(K, rhs.rows(), rhs.cols());
    const Index n_x = K.n_x();
    const Index n_t = K.n_t();
    const double m = K.m_scale();
    PaneAccumulator pane(n_x, n_t, pol, cadence);
    Vector p = Vector::Zero(n_x);
    for (Index k = n_t - 1; k >= 0; --k) {
        Vector b = m * p;
        if (rhs.rank() > 0) b += rhs.w1() * rhs.w2().row(k).transpose();
        p = K.solve_step_transpose(b);
        if (!p.allFinite()) throw NumericalError("non-finite value in adjoint sweep");
        pane.push(k, p);
    }
    if (stats) stats->iterations = n_t;
    return pane.finish(stats);
}

LowRankMat BlockDiagPreconditioner::apply_inverse(const LowRankMat& Y) const
{
    if (Y.rank() == 0) return Y;
    return LowRankMat(K_->solve_step(Y.w1()), Y.w2());
}

double st_relative_residual(const SpaceTimeOperator& K, const LowRankMat& Y, const LowRankMat& rhs)
{
    const double bnorm = lr_singular_values(rhs).norm();
    const double rnorm = lr_singular_values(lr_axpy(K.apply(Y), -1.0, rhs)).norm();
    return bnorm > 0.0 ? rnorm / bnorm : rnorm;
}

KrylovReport st_solve_krylov(const SpaceTimeOperator& K, const LowRankMat& rhs,
                             const TruncationPolicy& pol, const BlockDiagPreconditioner& pre,
                             const KrylovOptions& opts)
{
    require_shape(K, rhs.rows(), rhs.cols());
    const Index max_it = opts.max_iterations > 0 ? opts.max_iterations : 2 * K.n_t() + 10;
    KrylovReport report;
    report.solution = LowRankMat::zero(K.n_x(), K.n_t());
    const double rhs_norm = lr_norm(rhs);
    if (rhs_norm == 0.0) return report;

    auto precond_op = [&](const LowRankMat& x) {
        // P^{-1} K x = x - (A^{-1} M W1)(shift W2)^T
        const Matrix aw = K.solve_step(K.m_scale() * x.w1());
        return lr_axpy(x, -1.0, LowRankMat(aw, shift_down(x.w2())));
    };

    // One GMRES cycle on the preconditioned residual equation; returns the correction.
    auto cycle = [&](const LowRankMat& r, Index budget, Index& used) {
        const LowRankMat r0 = lr_truncate(pre.apply_inverse(r), pol);
        const double beta = lr_norm(r0);
        used = 0;
        if (beta == 0.0) return LowRankMat::zero(K.n_x(), K.n_t());
        std::vector<LowRankMat> basis{lr_scale(r0, 1.0 / beta)};
        Matrix H = Matrix::Zero(budget + 1, budget);
        Vector cs = Vector::Zero(budget), sn = Vector::Zero(budget);
        Vector g = Vector::Zero(budget + 1);
        g(0) = beta;
        Index j = 0;
        for (; j < budget; ++j) {
            LowRankMat w = lr_truncate(precond_op(basis[static_cast<std::size_t>(j)]), pol);
            for (Index i = 0; i <= j; ++i) {
                const LowRankMat& vi = basis[static_cast<std::size_t>(i)];
                const double hij = lr_dot(w, vi);
                H(i, j) = hij;
                w = lr_truncate(lr_axpy(w, -hij, vi), pol);
            }
            const double hnext = lr_norm(w);
            H(j + 1, j) = hnext;
            report.stats.rank_trace.push_back(w.rank());
            report.stats.max_rank = std::max(report.stats.max_rank, w.rank());

            for (Index i = 0; i < j; ++i) {
                const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
                H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            cs(j) = H(j, j) / denom;
            sn(j) = H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);
            // Inner target a decade below the outer one; the outer loop checks the true residual.
            if (std::abs(g(j + 1)) <= 0.1 * opts.tol * beta || hnext <= 1e-14 * beta) {
                ++j;
                break;
            }
            basis.push_back(lr_scale(w, 1.0 / hnext));
        }
        used = j;
        const Vector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        LowRankMat dx = LowRankMat::zero(K.n_x(), K.n_t());
        for (Index i = 0; i < j; ++i)
            dx = lr_truncate(lr_axpy(dx, y(i), basis[static_cast<std::size_t>(i)]), pol);
        return dx;
    };

    LowRankMat x = LowRankMat::zero(K.n_x(), K.n_t());
    LowRankMat r = rhs;
    double res = 1.0;
    Index total = 0;
    while (total < max_it) {
        Index used = 0;
        const LowRankMat dx = cycle(r, max_it - total, used);
        total += used;
        x = lr_truncate(lr_add(x, dx), pol);
        const double prev = res;
        r = lr_truncate(lr_axpy(rhs, -1.0, K.apply(x)), pol);
        res = lr_norm(r) / rhs_norm;
        if (res <= opts.tol || used == 0 || res >= 0.5 * prev) break;
    }
    report.solution = std::move(x);
    report.stats.iterations = total;
    report.stats.residual = st_relative_residual(K, report.solution, rhs);
    report.stats.converged = report.stats.residual <= opts.tol;
    return report;
}

} // namespace lrcov
