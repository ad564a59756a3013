#pragma once

#include "lrcov/discretize.hpp"
#include "lrcov/hessian.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lrcov {

/// Default cap on the dense parameter dimension.
inline constexpr Index kOracleCap = 2000;

struct DenseMisfit {
    Matrix H;              // symmetrized (H + H^T) / 2
    double asymmetry = 0;  // ||H - H^T||_max / ||H||_max before symmetrization
};

/// Explicit prior-preconditioned misfit Hessian built from the spatial operator
/// with dense arithmetic only (explicit all-at-once K, injection, observation).
DenseMisfit dense_misfit(const HessianContext& ctx, Index cap = kOracleCap);

struct DenseEigen {
    Vector values;   // descending
    Matrix vectors;  // matching columns
};

/// Top-k eigenpairs of a symmetric matrix (tridiagonalization + implicit QL).
DenseEigen dense_eig_top(const Matrix& Hd, Index k);

/// diag of (H/gamma + I/gamma)^{-1} for the prior-preconditioned H.
Vector dense_posterior_diag(const Matrix& Hd, double gamma_prior);

/// Eigen-information from one route, in a common dense format.
struct SpectralSnapshot {
    Vector values;       // descending real parts
    Vector imag;         // imaginary parts (zero for the dense route)
    Matrix vectors;      // columns, may have fewer columns than values
    Vector variance;     // optional, empty when not compared
};

struct OracleTolerances {
    double eig_rel = 1e-6;
    double angle = 1e-4;
    double variance_rel = 1e-4;
    double matvec_rel = 1e-8;
    double cluster_rel = 1e-3;  // eigenvalues closer than this form one cluster
};

struct OracleReport {
    Index k = 0;
    std::vector<double> eig_rel_errors;
    std::vector<double> cluster_angles;  // max principal angle per cluster
    double max_eig_rel_error = 0.0;
    double max_angle = 0.0;
    double variance_rel_error = 0.0;
    double max_residual = 0.0;  // ||Hd x - theta x|| / ||Hd|| over compared Ritz pairs
    double matvec_rel_error = 0.0;
    double max_imag_ratio = 0.0;
    double symmetry_defect = 0.0;
    bool has_variance = false;
    bool pass = false;
    OracleTolerances tol;

    /// Recomputes `pass` from the metrics and tolerances.
    void evaluate();
    void write(std::ostream& out) const;
};

/// Largest principal angle between the column spans of A and B.
double max_principal_angle(const Matrix& A, const Matrix& B);

/// Compares the top-k pairs of `lowrank` against `dense`. When `Hd` is non-empty
/// the Ritz residuals are measured against it.
OracleReport compare(const SpectralSnapshot& lowrank, const SpectralSnapshot& dense, Index k,
                     const OracleTolerances& tol = {}, const Matrix& Hd = Matrix());

/// Max relative difference between Hd v and the matrix-free application for
/// `count` seeded random vectors.
double matvec_check(HessianContext& ctx, const Matrix& Hd, int count, std::uint64_t seed);

} // namespace lrcov
