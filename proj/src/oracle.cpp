#include "lrcov/oracle.hpp"
#include "lrcov/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

namespace lrcov {

namespace {

// Explicit block lower-bidiagonal K: diagonal blocks h^d (I + tau L), subdiagonal -h^d I.
Matrix dense_space_time(const Matrix& L, double m, double tau, Index n_t)
{
    const Index n = L.rows();
    const Matrix A = m * (Matrix::Identity(n, n) + tau * L);
    Matrix K = Matrix::Zero(n * n_t, n * n_t);
    for (Index k = 0; k < n_t; ++k) {
        K.block(k * n, k * n, n, n) = A;
        if (k > 0) K.block(k * n, (k - 1) * n, n, n) = -m * Matrix::Identity(n, n);
    }
    return K;
}

} // namespace

DenseMisfit dense_misfit(const HessianContext& ctx, Index cap)
{
    const Index dim_state = ctx.mode() == HessianMode::SteadyPoisson
                                ? ctx.spatial().L.rows()
                                : ctx.op().n_x() * ctx.op().n_t();
    if (dim_state > cap)
        throw ConfigError("dense oracle refused: dimension " + std::to_string(dim_state) +
                          " exceeds cap " + std::to_string(cap));

    const Matrix L = Matrix(ctx.spatial().L);
    const Index n = L.rows();
    const CovarianceSpec& cov = ctx.cov();
    DenseMisfit out;

    if (ctx.mode() == HessianMode::SteadyPoisson) {
        const Matrix Linv = L.partialPivLu().inverse();
        out.H = (cov.beta_prior / cov.beta_noise) * Linv * Linv;
    } else {
        const Grid& g = ctx.grid();
        const double m = g.h * g.h;
        const double tau = ctx.op().time().tau;
        const Index n_t = ctx.op().n_t();
        const Matrix K = dense_space_time(L, m, tau, n_t);
        const Eigen::PartialPivLU<Matrix> lu(K);

        // Injection: initial condition enters block 1 as M u; a distributed source as tau M u.
        const Index p = ctx.mode() == HessianMode::InitialCondition ? n : n * n_t;
        Matrix C = Matrix::Zero(n * n_t, p);
        if (ctx.mode() == HessianMode::InitialCondition)
            C.topRows(n) = m * Matrix::Identity(n, n);
        else
            C = tau * m * Matrix::Identity(n * n_t, n * n_t);

        Vector w(n * n_t);
        for (Index k = 0; k < n_t; ++k)
            w.segment(k * n, n) = cov.beta_noise * tau * m * ctx.layout().mask;

        const Matrix X = lu.solve(C);                           // K^{-1} C
        out.H = cov.gamma_prior * (X.transpose() * w.asDiagonal() * X);
    }

    const double scale = out.H.cwiseAbs().maxCoeff();
    out.asymmetry = scale > 0.0 ? (out.H - out.H.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    out.H = 0.5 * (out.H + out.H.transpose()).eval();
    return out;
}

DenseEigen dense_eig_top(const Matrix& Hd, Index k)
{
    if (Hd.rows() != Hd.cols()) throw ConfigError("dense_eig_top needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(Hd);
    if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolve did not converge");
    const Index n = Hd.rows();
    k = std::min(k, n);
    DenseEigen out;
    out.values.resize(k);
    out.vectors.resize(n, k);
    for (Index i = 0; i < k; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    const double hn = Hd.norm();
    for (Index i = 0; i < k; ++i) {
        const double r = (Hd * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm();
        if (r > 1e-10 * std::max(hn, 1e-300)) throw NumericalError("dense eigenpair residual too large");
    }
    return out;
}

Vector dense_posterior_diag(const Matrix& Hd, double gamma_prior)
{
    const Index n = Hd.rows();
    const Matrix A = Hd / gamma_prior + Matrix::Identity(n, n) / gamma_prior;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is not positive definite");
    return llt.solve(Matrix::Identity(n, n)).diagonal();
}

double max_principal_angle(const Matrix& A, const Matrix& B)
{
    if (A.cols() == 0 || B.cols() == 0) return 0.0;
    const Matrix QA = Eigen::HouseholderQR<Matrix>(A).householderQ() * Matrix::Identity(A.rows(), A.cols());
    const Matrix QB = Eigen::HouseholderQR<Matrix>(B).householderQ() * Matrix::Identity(B.rows(), B.cols());
    // sin of the largest angle: spectral norm of the part of QA outside span(QB).
    const Matrix resid = QA - QB * (QB.transpose() * QA);
    const double s = Eigen::JacobiSVD<Matrix>(resid).singularValues()(0);
    return std::asin(std::clamp(s, 0.0, 1.0));
}

OracleReport compare(const SpectralSnapshot& lowrank, const SpectralSnapshot& dense, Index k,
                     const OracleTolerances& tol, const Matrix& Hd)
{
    if (lowrank.values.size() < k || dense.values.size() < k)
        throw ConfigError("compare: fewer than k eigenvalues available");
    if (lowrank.vectors.cols() > 0 && dense.vectors.cols() > 0 &&
        lowrank.vectors.rows() != dense.vectors.rows())
        throw ConfigError("compare: eigenvector dimensions differ");
    if (!lowrank.variance.size() != !dense.variance.size() ||
        lowrank.variance.size() != dense.variance.size())
        throw ConfigError("compare: variance fields differ in shape");

    OracleReport rep;
    rep.k = k;
    rep.tol = tol;
    for (Index i = 0; i < k; ++i) {
        const double ref = dense.values(i);
        const double e = std::abs(lowrank.values(i) - ref) / std::max(std::abs(ref), 1e-300);
        rep.eig_rel_errors.push_back(e);
        rep.max_eig_rel_error = std::max(rep.max_eig_rel_error, e);
    }
    const double top = std::max(std::abs(dense.values(0)), 1e-300);
    for (Index i = 0; i < std::min<Index>(k, lowrank.imag.size()); ++i)
        rep.max_imag_ratio = std::max(rep.max_imag_ratio, std::abs(lowrank.imag(i)) / top);

    // Principal angles per eigenvalue cluster; a cluster straddling k is taken whole.
    const Index avail = std::min(lowrank.vectors.cols(), dense.vectors.cols());
    Index start = 0;
    while (start < k && avail > 0) {
        Index end = start + 1;
        while (end < avail && end < dense.values.size() &&
               std::abs(dense.values(end) - dense.values(end - 1)) <=
                   tol.cluster_rel * std::abs(dense.values(end - 1)))
            ++end;
        if (end > avail) break;
        const double ang = max_principal_angle(lowrank.vectors.middleCols(start, end - start),
                                               dense.vectors.middleCols(start, end - start));
        rep.cluster_angles.push_back(ang);
        rep.max_angle = std::max(rep.max_angle, ang);
        start = end;
    }

    if (Hd.size() > 0 && lowrank.vectors.cols() > 0) {
        const double hn = Hd.norm();
        for (Index i = 0; i < std::min(k, lowrank.vectors.cols()); ++i) {
            const Vector x = lowrank.vectors.col(i);
            const double r = (Hd * x - lowrank.values(i) * x).norm() / std::max(hn, 1e-300);
            rep.max_residual = std::max(rep.max_residual, r);
        }
    }

    if (dense.variance.size() > 0) {
        rep.has_variance = true;
        rep.variance_rel_error =
            ((lowrank.variance - dense.variance).cwiseAbs().array() / dense.variance.cwiseAbs().array())
                .maxCoeff();
    }

    rep.evaluate();
    return rep;
}

double matvec_check(HessianContext& ctx, const Matrix& Hd, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int c = 0; c < count; ++c) {
        Vector v(Hd.cols());
        for (Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
        Vector hv;
        switch (ctx.mode()) {
        case HessianMode::InitialCondition: hv = misfit_apply_ic(v, ctx); break;
        case HessianMode::SteadyPoisson: hv = steady_poisson_apply(v, ctx); break;
        case HessianMode::DistributedSource: {
            const LowRankMat lv = lr_from_dense(unvec(v, ctx.op().n_x(), ctx.op().n_t()), ctx.policy());
            hv = lr_vec(misfit_apply_st(lv, ctx));
            break;
        }
        }
        const Vector ref = Hd * v;
        const double denom = std::max(ref.norm(), 1e-300);
        worst = std::max(worst, (hv - ref).norm() / denom);
    }
    return worst;
}

void OracleReport::evaluate()
{
    pass = max_eig_rel_error <= tol.eig_rel && max_angle <= tol.angle &&
           (!has_variance || variance_rel_error <= tol.variance_rel) &&
           matvec_rel_error <= tol.matvec_rel;
}

void OracleReport::write(std::ostream& out) const
{
    const auto old = out.precision(17);
    out << "k=" << k << '\n'
        << "max_eig_rel_error=" << max_eig_rel_error << '\n'
        << "max_principal_angle=" << max_angle << '\n'
        << "variance_rel_error=" << (has_variance ? variance_rel_error : 0.0) << '\n'
        << "max_ritz_residual=" << max_residual << '\n'
        << "matvec_rel_error=" << matvec_rel_error << '\n'
        << "max_imag_ratio=" << max_imag_ratio << '\n'
        << "symmetry_defect=" << symmetry_defect << '\n'
        << "tol_eig_rel=" << tol.eig_rel << '\n'
        << "tol_angle=" << tol.angle << '\n'
        << "tol_variance_rel=" << tol.variance_rel << '\n'
        << "tol_matvec_rel=" << tol.matvec_rel << '\n';
    for (std::size_t i = 0; i < eig_rel_errors.size(); ++i)
        out << "eig_rel_error_" << i + 1 << '=' << eig_rel_errors[i] << '\n';
    for (std::size_t i = 0; i < cluster_angles.size(); ++i)
        out << "cluster_angle_" << i + 1 << '=' << cluster_angles[i] << '\n';
    out << "result=" << (pass ? "PASS" : "FAIL") << '\n';
    out.precision(old);
}

} // namespace lrcov
