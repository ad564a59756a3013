#pragma once

#include "lrcov/discretize.hpp"
#include "lrcov/lowrank.hpp"

#include <memory>
#include <vector>

namespace lrcov {

/// All-at-once implicit Euler operator on n_t time blocks.
///
/// Block k of K vec(Y) is A y_k - M y_{k-1} with y_0 := 0, where
/// A = M (I + tau L) is the step matrix and M = h^d I the lumped mass.
/// The step matrix is factorized once at construction and reused by every solve.
class SpaceTimeOperator {
public:
    SpaceTimeOperator(SpatialOperator spatial, TimeGrid time);
    ~SpaceTimeOperator();
    SpaceTimeOperator(SpaceTimeOperator&&) noexcept;
    SpaceTimeOperator& operator=(SpaceTimeOperator&&) noexcept;
    SpaceTimeOperator(const SpaceTimeOperator&) = delete;
    SpaceTimeOperator& operator=(const SpaceTimeOperator&) = delete;

    const SpatialOperator& spatial() const { return spatial_; }
    const TimeGrid& time() const { return time_; }
    const Grid& grid() const { return spatial_.grid; }
    Index n_x() const { return spatial_.L.rows(); }
    Index n_t() const { return time_.n_t; }
    double m_scale() const { return spatial_.m_scale; }
    const SparseMatrix& step_matrix() const { return step_; }

    /// A^{-1} B and A^{-T} B, columnwise.
    Matrix solve_step(const Matrix& B) const;
    Matrix solve_step_transpose(const Matrix& B) const;

    /// Exact K Y and K^T Y in factored form (rank doubles).
    LowRankMat apply(const LowRankMat& Y) const;
    LowRankMat apply_transpose(const LowRankMat& Y) const;
    Matrix apply_dense(const Matrix& Y) const;
    Matrix apply_transpose_dense(const Matrix& Y) const;

private:
    struct Factorization;

    SpatialOperator spatial_;
    TimeGrid time_;
    SparseMatrix step_;
    std::unique_ptr<Factorization> fact_;
};

/// Initial-condition injection u -> rhs with block 1 = M u, other blocks 0.
struct InitInjection {
    Vector u;
};

/// Adjoint of the injection: M * (block 1) of a space-time field.
Vector extract_init(const SpaceTimeOperator& K, const LowRankMat& P);

struct SolveStats {
    Index max_rank = 0;     // largest pane rank seen during the solve
    Index iterations = 0;   // time steps or Krylov iterations
    double residual = 0.0;  // relative residual, when measured
    bool converged = true;
    std::vector<Index> rank_trace;
};

/// Default compression cadence of the sweep solvers (time steps).
inline constexpr Index kSweepCadence = 4;

/// Forward substitution in time with low-rank compression of the solution
/// pane every `cadence` steps.
LowRankMat st_solve_sweep(const SpaceTimeOperator& K, const LowRankMat& rhs,
                          const TruncationPolicy& pol, SolveStats* stats = nullptr,
                          Index cadence = kSweepCadence);
LowRankMat st_solve_sweep(const SpaceTimeOperator& K, const InitInjection& rhs,
                          const TruncationPolicy& pol, SolveStats* stats = nullptr,
                          Index cadence = kSweepCadence);

/// Backward substitution with K^T.
LowRankMat st_solve_adjoint_sweep(const SpaceTimeOperator& K, const LowRankMat& rhs,
                                  const TruncationPolicy& pol, SolveStats* stats = nullptr,
                                  Index cadence = kSweepCadence);

/// Block-diagonal part of K: I_{n_t} (x) A.
class BlockDiagPreconditioner {
public:
    explicit BlockDiagPreconditioner(const SpaceTimeOperator& K) : K_(&K) {}
    LowRankMat apply_inverse(const LowRankMat& Y) const;

private:
    const SpaceTimeOperator* K_;
};

struct KrylovOptions {
    double tol = 1e-8;
    Index max_iterations = 0;  // 0: 2 n_t + 10
};

struct KrylovReport {
    LowRankMat solution;
    SolveStats stats;
};

/// Left-preconditioned GMRES on K vec(X) = vec(rhs) with truncation of every
/// basis update. Does not throw on non-convergence; see stats.converged.
KrylovReport st_solve_krylov(const SpaceTimeOperator& K, const LowRankMat& rhs,
                             const TruncationPolicy& pol, const BlockDiagPreconditioner& pre,
                             const KrylovOptions& opts = {});

/// ||K vec(Y) - vec(rhs)|| / ||vec(rhs)|| computed in factored form.
double st_relative_residual(const SpaceTimeOperator& K, const LowRankMat& Y,
                            const LowRankMat& rhs);

} // namespace lrcov
