#include "lrcov/arnoldi.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lrcov {

void StopRule::validate() const
{
    if (m_a < 1) throw ConfigError("m_a must be >= 1");
    if (!(eps_eig > 0.0)) throw ConfigError("eps_eig must be > 0");
    if (check_every < 1) throw ConfigError("check_every must be >= 1");
    if (!(stability_tol > 0.0)) throw ConfigError("stability_tol must be > 0");
    if (nev < 0) throw ConfigError("nev must be >= 0");
}

RitzValues ritz_values(const Matrix& H, Index m, bool with_vectors)
{
    RitzValues out;
    if (m == 0) return out;
    const Matrix block = H.topLeftCorner(m, m);
    Eigen::EigenSolver<Matrix> es(block, with_vectors);
    if (es.info() != Eigen::Success) throw NumericalError("Hessenberg eigensolve failed");

    const Eigen::VectorXcd vals = es.eigenvalues();
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (vals(a).real() != vals(b).real()) return vals(a).real() > vals(b).real();
        return vals(a).imag() > vals(b).imag();
    });

    const double beta = H.rows() > m ? std::abs(H(m, m - 1)) : 0.0;
    Eigen::MatrixXcd vecs;
    if (with_vectors) {
        vecs = es.eigenvectors();
        out.vectors.resize(m, m);
    }
    for (Index k = 0; k < m; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.values.push_back(vals(src));
        if (with_vectors) {
            Eigen::VectorXcd y = vecs.col(src);
            const double yn = y.norm();
            if (yn > 0.0) y /= yn;
            out.vectors.col(k) = y;
            out.residual_estimates.push_back(beta * std::abs(y(m - 1)));
        } else {
            out.residual_estimates.push_back(0.0);
        }
    }
    return out;
}

namespace detail {

namespace {

std::size_t tracked_count(const RitzValues& rv, const StopRule& stop)
{
    if (stop.nev > 0) return std::min<std::size_t>(static_cast<std::size_t>(stop.nev), rv.values.size());
    std::size_t n = 0;
    while (n < rv.values.size() && rv.values[n].real() >= stop.eps_eig) ++n;
    return n;
}

} // namespace

Index count_converged(const RitzValues& rv, const StopRule& stop)
{
    const std::size_t n = tracked_count(rv, stop);
    Index c = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (rv.residual_estimates[i] <= stop.stability_tol * std::abs(rv.values[i])) ++c;
    return c;
}

bool check_stop(const RitzValues& rv, const StopRule& stop, StopTracker& tracker, Index& converged)
{
    const std::size_t n = tracked_count(rv, stop);
    std::vector<std::complex<double>> current(rv.values.begin(),
                                              rv.values.begin() + static_cast<std::ptrdiff_t>(n));
    bool ok = tracker.have_previous && tracker.previous.size() == n;
    if (stop.nev > 0 && n < static_cast<std::size_t>(stop.nev)) ok = false;
    Index conv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::abs(current[i]);
        const bool stable = tracker.have_previous && i < tracker.previous.size() &&
                            std::abs(current[i] - tracker.previous[i]) <= stop.stability_tol * scale;
        const bool small_res = rv.residual_estimates[i] <= stop.stability_tol * scale;
        if (stable && small_res) ++conv;
        else ok = false;
    }
    // With nothing above the threshold, stop once the leading value has settled.
    if (ok && n == 0 && !rv.values.empty()) {
        const auto& prev = tracker.previous_top;
        ok = tracker.have_top &&
             std::abs(rv.values.front() - prev) <= stop.stability_tol * std::abs(rv.values.front());
    }
    converged = conv;
    tracker.previous = std::move(current);
    tracker.have_previous = true;
    if (!rv.values.empty()) {
        tracker.previous_top = rv.values.front();
        tracker.have_top = true;
    }
    return ok;
}

} // namespace detail

SeparationRank rank_one_check(const Matrix& reshaped, double tol)
{
    SeparationRank out;
    const Vector sigma = Eigen::JacobiSVD<Matrix>(reshaped).singularValues();
    if (sigma.size() == 0 || sigma(0) == 0.0) return out;
    const double total = sigma.norm();
    Index r = sigma.size();
    double tail = 0.0;
    while (r > 0) {
        const double next = tail + sigma(r - 1) * sigma(r - 1);
        if (std::sqrt(next) > tol * total) break;
        tail = next;
        --r;
    }
    out.rank = r;
    out.tail_ratio = sigma.size() > 1 ? sigma(1) / sigma(0) : 0.0;
    return out;
}

SeparationRank rank_one_check(const Vector& spatial, const Grid& grid, double tol)
{
    if (spatial.size() != grid.n_x()) throw ConfigError("vector length does not match grid");
    return rank_one_check(unvec(spatial, grid.n_side, grid.n_side), tol);
}

SeparationRank rank_one_check(const LowRankMat& field, double tol)
{
    SeparationRank out;
    const Vector sigma = lr_singular_values(field);
    if (sigma.size() == 0 || sigma(0) == 0.0) return out;
    Matrix diag = sigma.asDiagonal();
    return rank_one_check(diag, tol);
}

} // namespace lrcov
