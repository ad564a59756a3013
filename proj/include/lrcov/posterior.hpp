#pragma once

#include "lrcov/arnoldi.hpp"
#include "lrcov/discretize.hpp"

#include <iosfwd>
#include <vector>

namespace lrcov {

/// Low-rank posterior covariance gamma * (I - V diag(lambda_tilde) V^T).
struct PosteriorSummary {
    Vector eigenvalues;     // lambda_i, descending
    Vector filter_factors;  // lambda_i / (lambda_i + 1)
    Matrix basis;           // columns: retained eigenvectors, orthonormalized
    double gamma_prior = 1.0;
    Vector variance_field;  // diag of the approximate posterior covariance

    Index retained() const { return eigenvalues.size(); }
};

/// lam / (lam + 1); negative input signals a non-PSD artifact upstream.
double lambda_tilde(double lam);

/// Orthonormalize columns with two passes of modified Gram-Schmidt.
Matrix orthonormalize_columns(const Matrix& V);

/// gamma * (1 - sum_i lambda_tilde_i V(., i)^2), after re-orthonormalizing V.
Vector variance_diag(const Vector& eigenvalues, const Matrix& V, double gamma_prior);

/// Retains Ritz pairs with real part >= eps_eig (dense spatial vectors).
PosteriorSummary build_posterior(const std::vector<RitzPair<Vector>>& ritz, double eps_eig,
                                 double gamma_prior);
PosteriorSummary build_posterior(const Vector& eigenvalues, const Matrix& V, double gamma_prior);

/// gamma * (v - V (lambda_tilde o V^T v)).
Vector posterior_apply(const Vector& v, const PosteriorSummary& summary);

/// n_side x n_side grid, row = x2 index, column = x1 index.
void write_variance_csv(std::ostream& out, const Vector& field, const Grid& grid);
/// Plain P2 PGM: field minimum -> 0, gamma -> 255.
void write_variance_pgm(std::ostream& out, const Vector& field, const Grid& grid, double gamma_prior);

} // namespace lrcov
