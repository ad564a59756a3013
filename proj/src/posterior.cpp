#include "lrcov/posterior.hpp"
#include "lrcov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace lrcov {

double lambda_tilde(double lam)
{
    if (lam < 0.0 || std::isnan(lam))
        throw NumericalError("negative eigenvalue passed to the SMW filter");
    if (std::isinf(lam)) return 1.0;
    return lam / (lam + 1.0);
}

Matrix orthonormalize_columns(const Matrix& V)
{
    Matrix Q = V;
    for (Index c = 0; c < Q.cols(); ++c) {
        for (int pass = 0; pass < 2; ++pass)
            for (Index p = 0; p < c; ++p) Q.col(c) -= Q.col(p).dot(Q.col(c)) * Q.col(p);
        const double n = Q.col(c).norm();
        if (!(n > 0.0)) throw NumericalError("retained eigenvectors are linearly dependent");
        Q.col(c) /= n;
    }
    return Q;
}

Vector variance_diag(const Vector& eigenvalues, const Matrix& V, double gamma_prior)
{
    if (eigenvalues.size() != V.cols()) throw ConfigError("eigenvalue count does not match basis");
    Vector acc = Vector::Zero(V.rows());
    if (V.cols() > 0) {
        const Matrix Q = orthonormalize_columns(V);
        for (Index i = 0; i < Q.cols(); ++i)
            acc += lambda_tilde(eigenvalues(i)) * Q.col(i).cwiseAbs2();
    }
    return gamma_prior * (Vector::Ones(V.rows()) - acc);
}

PosteriorSummary build_posterior(const Vector& eigenvalues, const Matrix& V, double gamma_prior)
{
    if (!(gamma_prior > 0.0)) throw ConfigError("gamma_prior must be positive");
    PosteriorSummary s;
    s.gamma_prior = gamma_prior;
    s.eigenvalues = eigenvalues;
    s.filter_factors = eigenvalues.unaryExpr([](double l) { return lambda_tilde(l); });
    s.basis = V.cols() > 0 ? orthonormalize_columns(V) : V;
    s.variance_field = variance_diag(eigenvalues, V, gamma_prior);
    return s;
}

PosteriorSummary build_posterior(const std::vector<RitzPair<Vector>>& ritz, double eps_eig,
                                 double gamma_prior)
{
    std::vector<const RitzPair<Vector>*> kept;
    for (const auto& p : ritz)
        if (p.value.real() >= eps_eig) {
            if (!p.has_vector) throw ConfigError("retained Ritz pair has no vector");
            kept.push_back(&p);
        }
    if (ritz.empty()) throw ConfigError("no Ritz pairs");
    const Index n = ritz.front().vector.size();
    Vector lam(static_cast<Index>(kept.size()));
    Matrix V(n, static_cast<Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        lam(static_cast<Index>(i)) = kept[i]->value.real();
        V.col(static_cast<Index>(i)) = kept[i]->vector;
    }
    return build_posterior(lam, V, gamma_prior);
}

Vector posterior_apply(const Vector& v, const PosteriorSummary& summary)
{
    if (summary.retained() == 0) return summary.gamma_prior * v;
    if (v.size() != summary.basis.rows()) throw ConfigError("vector length does not match basis");
    const Vector coeff = summary.filter_factors.cwiseProduct(summary.basis.transpose() * v);
    return summary.gamma_prior * (v - summary.basis * coeff);
}

void write_variance_csv(std::ostream& out, const Vector& field, const Grid& grid)
{
    if (field.size() != grid.n_x()) throw ConfigError("field length does not match grid");
    const auto old = out.precision(17);
    for (Index i = 0; i < grid.n_side; ++i) out << (i ? "," : "") << "x1_" << i;
    out << '\n';
    for (Index j = 0; j < grid.n_side; ++j) {
        for (Index i = 0; i < grid.n_side; ++i) out << (i ? "," : "") << field(grid.dof(i, j));
        out << '\n';
    }
    out.precision(old);
}

void write_variance_pgm(std::ostream& out, const Vector& field, const Grid& grid, double gamma_prior)
{
    if (field.size() != grid.n_x()) throw ConfigError("field length does not match grid");
    const double lo = field.minCoeff();
    const double span = gamma_prior - lo;
    out << "P2\n" << grid.n_side << ' ' << grid.n_side << "\n255\n";
    // Top image row is the largest x2.
    for (Index j = grid.n_side - 1; j >= 0; --j) {
        for (Index i = 0; i < grid.n_side; ++i) {
            const double t = span > 0.0 ? (field(grid.dof(i, j)) - lo) / span : 1.0;
            const int px = static_cast<int>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
            out << (i ? " " : "") << px;
        }
        out << '\n';
    }
}

} // namespace lrcov
