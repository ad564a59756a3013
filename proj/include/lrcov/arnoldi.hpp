#pragma once

#include "lrcov/discretize.hpp"
#include "lrcov/errors.hpp"
#include "lrcov/lowrank.hpp"

#include <chrono>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace lrcov {

/// Stopping controls for lr_arnoldi.
///
/// Ritz values are refreshed every `check_every` iterations. The tracked set is
/// the top `nev` Ritz values when nev > 0, otherwise every Ritz value whose real
/// part is at least eps_eig. The run stops once the tracked set has the same size
/// as at the previous refresh and every tracked value moved by at most
/// stability_tol relative and has a residual estimate below stability_tol * |value|.
struct StopRule {
    Index m_a = 200;
    double eps_eig = 1e-1;
    Index check_every = 10;
    double stability_tol = 1e-3;
    Index nev = 0;
    bool restart_on_breakdown = false;
    std::uint64_t seed = 0;

    void validate() const;
};

template <class V>
struct RitzPair {
    std::complex<double> value;
    double residual_estimate = 0.0;
    bool has_vector = false;
    V vector;
};

/// Per-iteration diagnostics record.
struct IterationRecord {
    Index j = 0;
    double subdiagonal = 0.0;
    Index max_rank = 0;
    double wall_seconds = 0.0;
    bool restarted = false;
};

enum class StopReason { MaxIterations, Converged, Breakdown, Exhausted };

template <class V>
struct ArnoldiResult {
    Matrix H;                          // (m+1) x m upper Hessenberg
    std::vector<V> basis;              // m or m+1 orthonormal vectors
    std::vector<Index> rank_trace;     // per-iteration max intermediate rank
    std::vector<IterationRecord> records;
    std::vector<RitzPair<V>> ritz;     // sorted by descending real part
    Index iterations = 0;
    Index converged_count = 0;
    Index restarts = 0;
    bool invariant_subspace = false;
    StopReason reason = StopReason::MaxIterations;
};

/// Optional callbacks: rank_probe reports the max intermediate rank of the most
/// recent operator application; on_iteration receives each diagnostics record.
struct ArnoldiHooks {
    std::function<Index()> rank_probe;
    std::function<void(const IterationRecord&)> on_iteration;
    Index ritz_vectors = -1;  // number of leading Ritz vectors to form; -1 = all
};

/// Vector-space operations used by the Arnoldi iteration.
template <class V>
struct VectorOps;

template <>
struct VectorOps<Vector> {
    static double dot(const Vector& a, const Vector& b) { return a.dot(b); }
    static double norm(const Vector& a) { return a.norm(); }
    static Vector axpy(const Vector& a, double c, const Vector& b, const TruncationPolicy&)
    {
        return a + c * b;
    }
    static Vector scale(const Vector& a, double c) { return c * a; }
    static Vector truncate(const Vector& a, const TruncationPolicy&) { return a; }
    static Index rank(const Vector&) { return 1; }
    static Index dim(const Vector& a) { return a.size(); }
    static Vector random_like(const Vector& proto, std::mt19937_64& rng)
    {
        std::normal_distribution<double> nd;
        Vector v(proto.size());
        for (Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
        return v;
    }
    static Vector combine(const std::vector<Vector>& basis, const Vector& coeff,
                          const TruncationPolicy&)
    {
        Vector out = Vector::Zero(basis.front().size());
        for (Index i = 0; i < coeff.size(); ++i) out += coeff(i) * basis[static_cast<std::size_t>(i)];
        return out;
    }
};

template <>
struct VectorOps<LowRankMat> {
    static double dot(const LowRankMat& a, const LowRankMat& b) { return lr_dot(a, b); }
    static double norm(const LowRankMat& a) { return lr_norm(a); }
    static LowRankMat axpy(const LowRankMat& a, double c, const LowRankMat& b,
                           const TruncationPolicy& pol)
    {
        return lr_truncate(lr_axpy(a, c, b), pol);
    }
    static LowRankMat scale(const LowRankMat& a, double c) { return lr_scale(a, c); }
    static LowRankMat truncate(const LowRankMat& a, const TruncationPolicy& pol)
    {
        return lr_truncate(a, pol);
    }
    static Index rank(const LowRankMat& a) { return a.rank(); }
    static Index dim(const LowRankMat& a) { return a.rows() * a.cols(); }
    static LowRankMat random_like(const LowRankMat& proto, std::mt19937_64& rng)
    {
        std::normal_distribution<double> nd;
        Vector u(proto.rows()), w(proto.cols());
        for (Index i = 0; i < u.size(); ++i) u(i) = nd(rng);
        for (Index i = 0; i < w.size(); ++i) w(i) = nd(rng);
        return LowRankMat::outer(u, w);
    }
    static LowRankMat combine(const std::vector<LowRankMat>& basis, const Vector& coeff,
                              const TruncationPolicy& pol)
    {
        LowRankMat out = LowRankMat::zero(basis.front().rows(), basis.front().cols());
        for (Index i = 0; i < coeff.size(); ++i)
            if (coeff(i) != 0.0) out = lr_truncate(lr_axpy(out, coeff(i), basis[static_cast<std::size_t>(i)]), pol);
        return out;
    }
};

/// Eigenvalues of the leading m x m block of H and residual estimates
/// |H(m, m-1) * y_i(m-1)|, sorted by descending real part.
struct RitzValues {
    std::vector<std::complex<double>> values;
    std::vector<double> residual_estimates;
    Eigen::MatrixXcd vectors;  // columns: eigenvectors of the block, same order
};
RitzValues ritz_values(const Matrix& H, Index m, bool with_vectors);

/// Ritz pairs from the leading m x m block of H and the first m basis vectors.
/// Vectors are formed for the first `n_vectors` pairs (-1: all) from the real
/// part of the block eigenvector; imaginary parts of the values are kept.
template <class V>
std::vector<RitzPair<V>> ritz_pairs(const Matrix& H, Index m, const std::vector<V>& basis,
                                    const TruncationPolicy& pol, Index n_vectors = -1)
{
    const RitzValues rv = ritz_values(H, m, true);
    std::vector<RitzPair<V>> out(rv.values.size());
    const Index nv = n_vectors < 0 ? m : std::min<Index>(n_vectors, m);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].value = rv.values[i];
        out[i].residual_estimate = rv.residual_estimates[i];
        if (static_cast<Index>(i) < nv) {
            Vector coeff = rv.vectors.col(static_cast<Index>(i)).real();
            const double cn = coeff.norm();
            if (cn > 0.0) coeff /= cn;
            V x = VectorOps<V>::combine(basis, coeff, pol);
            const double xn = VectorOps<V>::norm(x);
            if (xn > 0.0) x = VectorOps<V>::scale(x, 1.0 / xn);
            out[i].vector = std::move(x);
            out[i].has_vector = true;
        }
    }
    return out;
}

namespace detail {

// Two passes of modified Gram-Schmidt; coefficients are accumulated into h.
template <class V>
V orthogonalize(V w, const std::vector<V>& basis, std::size_t count, Vector* h,
                const TruncationPolicy& pol)
{
    using Ops = VectorOps<V>;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < count; ++i) {
            const double c = Ops::dot(w, basis[i]);
            if (h) (*h)(static_cast<Index>(i)) += c;
            w = Ops::axpy(w, -c, basis[i], pol);
        }
    }
    return w;
}

struct StopTracker {
    std::vector<std::complex<double>> previous;
    bool have_previous = false;
    std::complex<double> previous_top;
    bool have_top = false;
};

// Tracked Ritz values whose residual estimate is below stability_tol * |value|.
Index count_converged(const RitzValues& rv, const StopRule& stop);

// Returns true when the stop rule is met and sets the converged count.
bool check_stop(const RitzValues& rv, const StopRule& stop, StopTracker& tracker, Index& converged);

} // namespace detail

/// Low-rank Arnoldi with full reorthogonalization (MGS, two passes).
///
/// `apply` returns the operator applied to a basis vector; in low-rank mode
/// its output and every orthogonalized vector are truncated to `pol`.
template <class V, class Apply>
ArnoldiResult<V> lr_arnoldi(Apply&& apply, const V& v1, const TruncationPolicy& pol,
                            const StopRule& stop, const ArnoldiHooks& hooks = {})
{
    using Ops = VectorOps<V>;
    using Clock = std::chrono::steady_clock;
    stop.validate();
    pol.validate();

    ArnoldiResult<V> res;
    const Index dim = Ops::dim(v1);
    const Index m_a = std::min(stop.m_a, dim);
    res.H = Matrix::Zero(m_a + 1, m_a);
    std::mt19937_64 rng(stop.seed ^ 0x9e3779b97f4a7c15ULL);

    V start = Ops::truncate(v1, pol);
    const double n0 = Ops::norm(start);
    if (!(n0 > 0.0)) throw ConfigError("Arnoldi start vector is zero");
    res.basis.push_back(Ops::scale(start, 1.0 / n0));

    detail::StopTracker tracker;
    const auto t0 = Clock::now();
    Index j = 0;
    for (; j < m_a; ++j) {
        V w = Ops::truncate(apply(res.basis[static_cast<std::size_t>(j)]), pol);
        const double wnorm = Ops::norm(w);
        Vector h = Vector::Zero(j + 1);
        w = detail::orthogonalize(std::move(w), res.basis, static_cast<std::size_t>(j + 1), &h, pol);
        res.H.col(j).head(j + 1) = h;
        double hnext = Ops::norm(w);

        IterationRecord rec;
        rec.j = j + 1;
        rec.max_rank = hooks.rank_probe ? hooks.rank_probe() : Ops::rank(w);

        const bool breakdown = !(hnext > 1e-14 * wnorm) || wnorm == 0.0;
        bool finished = false;
        if (!breakdown) {
            res.H(j + 1, j) = hnext;
            res.basis.push_back(Ops::truncate(Ops::scale(w, 1.0 / hnext), pol));
        } else {
            res.H(j + 1, j) = 0.0;
            hnext = 0.0;
            if (!stop.restart_on_breakdown || j + 1 >= m_a) {
                res.invariant_subspace = true;
                res.reason = StopReason::Breakdown;
                finished = true;
            } else {
                V fresh = detail::orthogonalize(Ops::random_like(v1, rng), res.basis,
                                                res.basis.size(), nullptr, pol);
                const double fn = Ops::norm(fresh);
                if (!(fn > 1e-10)) {
                    res.invariant_subspace = true;
                    res.reason = StopReason::Exhausted;
                    finished = true;
                } else {
                    res.basis.push_back(Ops::truncate(Ops::scale(fresh, 1.0 / fn), pol));
                    ++res.restarts;
                    rec.restarted = true;
                }
            }
        }
        rec.subdiagonal = hnext;
        rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        res.rank_trace.push_back(rec.max_rank);
        res.records.push_back(rec);
        if (hooks.on_iteration) hooks.on_iteration(rec);
        res.iterations = j + 1;
        if (finished) break;

        if (res.iterations % stop.check_every == 0 && res.iterations < m_a) {
            const RitzValues rv = ritz_values(res.H, res.iterations, true);
            if (detail::check_stop(rv, stop, tracker, res.converged_count)) {
                res.reason = StopReason::Converged;
                break;
            }
        }
    }

    const Index m = res.iterations;
    res.H.conservativeResize(m + 1, m);
    res.ritz = ritz_pairs(res.H, m, res.basis, pol, hooks.ritz_vectors);
    if (res.reason != StopReason::Converged)
        res.converged_count = detail::count_converged(ritz_values(res.H, m, true), stop);
    return res;
}

/// Numerical separation rank of a 2-way array: smallest r whose singular-value
/// tail is at most `tol` relative to the Frobenius norm, and sigma_2 / sigma_1.
struct SeparationRank {
    Index rank = 0;
    double tail_ratio = 0.0;
};
SeparationRank rank_one_check(const Matrix& reshaped, double tol = 1e-6);
/// Spatial vector reshaped to x1 x x2.
SeparationRank rank_one_check(const Vector& spatial, const Grid& grid, double tol = 1e-6);
/// Space-time vector in factored form (space x time).
SeparationRank rank_one_check(const LowRankMat& field, double tol = 1e-6);

} // namespace lrcov
