#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

namespace lrcov {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Uniform lattice of interior points on the unit square, zero Dirichlet boundary.
///
/// Dofs are numbered lexicographically with x1 running fastest:
/// dof = i + j * n_side, x1 = (i+1) h, x2 = (j+1) h.
struct Grid {
    Index n_side = 0;
    double h = 0.0;
    int d = 2;

    Index n_x() const { return n_side * n_side; }
    Index dof(Index i, Index j) const { return i + j * n_side; }
    std::pair<Index, Index> lattice(Index dof) const { return {dof % n_side, dof / n_side}; }
    double coord(Index i) const { return static_cast<double>(i + 1) * h; }
    /// Lumped mass coefficient h^d.
    double mass_scale() const { return h * h; }
};

struct TimeGrid {
    Index n_t = 0;
    double tau = 0.0;
    double T = 1.0;
};

enum class OperatorKind { Heat, ConvDiff };

struct SpatialOperator {
    OperatorKind kind = OperatorKind::Heat;
    double nu = 1.0;
    std::array<double, 2> wind{0.0, 0.0};
    SparseMatrix L;
    double m_scale = 0.0;
    Grid grid;

    bool symmetric() const { return kind == OperatorKind::Heat; }
};

Grid build_grid(Index n_side);
TimeGrid build_time_grid(Index n_t, double T = 1.0);

/// 5-point finite-difference Laplacian (-Δ), diagonal 4/h^2.
SpatialOperator assemble_heat(const Grid& grid);

/// nu * (5-point Laplacian) + first-order upwind wind·∇.
SpatialOperator assemble_convdiff(const Grid& grid, double nu, std::array<double, 2> wind);

/// Continuous Dirichlet eigenvalue π²[(m/a)² + (n/b)²] on [0,a]×[0,b].
double analytic_poisson_eig(int m, int n, double a = 1.0, double b = 1.0);

/// Exact eigenvalue of the assembled 5-point Laplacian for mode (m, n).
double discrete_fd_eig(int m, int n, const Grid& grid);

/// Separable eigenvector sin(mπx1) sin(nπx2) on the lattice, as its two 1-D
/// factors. The Kronecker product of the factors has unit Euclidean norm.
struct SeparableVector {
    Vector f1;  // depends on x1
    Vector f2;  // depends on x2

    /// Lexicographic dense vector f1(i) * f2(j).
    Vector dense() const;
};

SeparableVector analytic_separable_eigvec(int m, int n, const Grid& grid);

/// Smallest k discrete Laplacian eigenvalues with their (m, n) labels, ascending.
/// Ties are ordered by m then n.
struct ModeLabel {
    int m;
    int n;
    double lambda;
};
std::vector<ModeLabel> smallest_fd_modes(const Grid& grid, std::size_t k);

/// Coordinate-format export: one "row col value" line per stored entry.
void write_coo(std::ostream& out, const SparseMatrix& A);

} // namespace lrcov
