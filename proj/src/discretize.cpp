#include "lrcov/discretize.hpp"
#include "lrcov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace lrcov {

namespace {

using Triplet = Eigen::Triplet<double>;

void add_laplacian(const Grid& g, double coeff, std::vector<Triplet>& t)
{
    const double c = coeff / (g.h * g.h);
    for (Index j = 0; j < g.n_side; ++j) {
        for (Index i = 0; i < g.n_side; ++i) {
            const Index row = g.dof(i, j);
            t.emplace_back(row, row, 4.0 * c);
            if (i > 0) t.emplace_back(row, g.dof(i - 1, j), -c);
            if (i + 1 < g.n_side) t.emplace_back(row, g.dof(i + 1, j), -c);
            if (j > 0) t.emplace_back(row, g.dof(i, j - 1), -c);
            if (j + 1 < g.n_side) t.emplace_back(row, g.dof(i, j + 1), -c);
        }
    }
}

// Upwind difference of w * d/dx_axis. The upstream neighbour is dropped when it
// lies on the (zero) Dirichlet boundary.
void add_upwind(const Grid& g, double w, int axis, std::vector<Triplet>& t)
{
    if (w == 0.0) return;
    const double c = std::abs(w) / g.h;
    const Index step = w > 0 ? -1 : 1;
    for (Index j = 0; j < g.n_side; ++j) {
        for (Index i = 0; i < g.n_side; ++i) {
            const Index row = g.dof(i, j);
            t.emplace_back(row, row, c);
            const Index ui = axis == 0 ? i + step : i;
            const Index uj = axis == 1 ? j + step : j;
            if (ui >= 0 && ui < g.n_side && uj >= 0 && uj < g.n_side)
                t.emplace_back(row, g.dof(ui, uj), -c);
        }
    }
}

SparseMatrix from_triplets(Index n, const std::vector<Triplet>& t)
{
    SparseMatrix A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

Vector sine_vector(int m, const Grid& g)
{
    Vector v(g.n_side);
    for (Index i = 0; i < g.n_side; ++i)
        v(i) = std::sin(m * std::numbers::pi * g.coord(i));
    return v.normalized();
}

} // namespace

Grid build_grid(Index n_side)
{
    if (n_side < 2)
        throw ConfigError("n_side must be >= 2, got " + std::to_string(n_side));
    Grid g;
    g.n_side = n_side;
    g.h = 1.0 / static_cast<double>(n_side + 1);
    return g;
}

TimeGrid build_time_grid(Index n_t, double T)
{
    if (n_t < 1) throw ConfigError("n_t must be >= 1");
    if (!(T > 0.0)) throw ConfigError("final time must be positive");
    return TimeGrid{n_t, T / static_cast<double>(n_t), T};
}

SpatialOperator assemble_heat(const Grid& grid)
{
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5 * grid.n_x()));
    add_laplacian(grid, 1.0, t);
    SpatialOperator op;
    op.kind = OperatorKind::Heat;
    op.L = from_triplets(grid.n_x(), t);
    op.m_scale = grid.mass_scale();
    op.grid = grid;
    return op;
}

SpatialOperator assemble_convdiff(const Grid& grid, double nu, std::array<double, 2> wind)
{
    if (!(nu > 0.0)) throw ConfigError("convection-diffusion requires nu > 0");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(9 * grid.n_x()));
    add_laplacian(grid, nu, t);
    add_upwind(grid, wind[0], 0, t);
    add_upwind(grid, wind[1], 1, t);
    SpatialOperator op;
    op.kind = OperatorKind::ConvDiff;
    op.nu = nu;
    op.wind = wind;
    op.L = from_triplets(grid.n_x(), t);
    op.m_scale = grid.mass_scale();
    op.grid = grid;
    return op;
}

double analytic_poisson_eig(int m, int n, double a, double b)
{
    if (m < 1 || n < 1) throw ConfigError("mode indices start at 1");
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("domain extents must be positive");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return pi2 * ((m / a) * (m / a) + (n / b) * (n / b));
}

double discrete_fd_eig(int m, int n, const Grid& grid)
{
    if (m < 1 || n < 1 || m > grid.n_side || n > grid.n_side)
        throw ConfigError("mode index out of range for grid");
    const double sm = std::sin(m * std::numbers::pi * grid.h / 2.0);
    const double sn = std::sin(n * std::numbers::pi * grid.h / 2.0);
    return 4.0 / (grid.h * grid.h) * (sm * sm + sn * sn);
}

Vector SeparableVector::dense() const
{
    Vector v(f1.size() * f2.size());
    for (Index j = 0; j < f2.size(); ++j)
        v.segment(j * f1.size(), f1.size()) = f2(j) * f1;
    return v;
}

SeparableVector analytic_separable_eigvec(int m, int n, const Grid& grid)
{
    if (m < 1 || n < 1 || m > grid.n_side || n > grid.n_side)
        throw ConfigError("mode index out of range for grid");
    return SeparableVector{sine_vector(m, grid), sine_vector(n, grid)};
}

std::vector<ModeLabel> smallest_fd_modes(const Grid& grid, std::size_t k)
{
    std::vector<ModeLabel> modes;
    const int n = static_cast<int>(grid.n_side);
    modes.reserve(static_cast<std::size_t>(n) * n);
    for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b)
            modes.push_back({a, b, discrete_fd_eig(a, b, grid)});
    std::stable_sort(modes.begin(), modes.end(),
                     [](const ModeLabel& x, const ModeLabel& y) { return x.lambda < y.lambda; });
    if (modes.size() > k) modes.resize(k);
    return modes;
}

void write_coo(std::ostream& out, const SparseMatrix& A)
{
    const auto old = out.precision(17);
    for (Index col = 0; col < A.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(A, col); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    out.precision(old);
}

} // namespace lrcov
