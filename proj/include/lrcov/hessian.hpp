#pragma once

#include "lrcov/discretize.hpp"
#include "lrcov/forward.hpp"
#include "lrcov/lowrank.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace lrcov {

/// Axis-aligned square sensor patch in the unit square.
struct SensorPatch {
    double cx = 0.5;
    double cy = 0.5;
    double side = 1.0 / 16.0;
};

/// Sensor patches and the boolean dof mask they induce (1.0 observed, 0.0 not).
struct SensorLayout {
    std::vector<SensorPatch> patches;
    Vector mask;
    bool full = false;

    Index observed() const;
};

/// Nine patches of side 1/16 centred at (i/4, j/4), i, j in {1,2,3}.
/// Requires n_side >= 15 so every patch covers at least one dof.
SensorLayout make_sensor_layout_3x3(const Grid& grid);
SensorLayout make_sensor_layout_full(const Grid& grid);
SensorLayout make_sensor_layout_empty(const Grid& grid);
SensorLayout make_sensor_layout(const Grid& grid, std::vector<SensorPatch> patches);

/// Noise and prior scalars. Prior covariance is gamma_prior * I.
struct CovarianceSpec {
    double beta_noise = 1e4;
    double beta_prior = 1.0;
    double gamma_prior = 10.0;

    void validate() const;
    double ratio() const { return beta_noise / beta_prior; }

    /// gamma given; beta_prior = 1 / (gamma h^d), beta_noise = ratio * beta_prior.
    static CovarianceSpec scalar_prior(double gamma, double ratio, const Grid& grid);
    /// beta_prior given; gamma = 1 / (beta_prior h^d).
    static CovarianceSpec beta_prior_preset(double beta_prior, double ratio, const Grid& grid);
};

enum class HessianMode { InitialCondition, DistributedSource, SteadyPoisson };

/// Max ranks of the forward and adjoint space-time intermediates of one application.
struct ApplyRecord {
    Index forward_rank = 0;
    Index adjoint_rank = 0;
    Index max() const { return std::max(forward_rank, adjoint_rank); }
};

/// Everything needed to apply the prior-preconditioned misfit Hessian.
///
/// Application mutates the rank trace, so at most one application may be in
/// flight per context.
class HessianContext {
public:
    HessianContext(std::shared_ptr<const SpaceTimeOperator> op, SensorLayout layout,
                   CovarianceSpec cov, TruncationPolicy pol, HessianMode mode);

    /// Steady-Poisson context: only the spatial operator is used.
    HessianContext(const SpatialOperator& heat, CovarianceSpec cov);

    HessianMode mode() const { return mode_; }
    const SpaceTimeOperator& op() const { return *op_; }
    std::shared_ptr<const SpaceTimeOperator> op_ptr() const { return op_; }
    const SpatialOperator& spatial() const { return spatial_; }
    const Grid& grid() const { return spatial_.grid; }
    const SensorLayout& layout() const { return layout_; }
    const CovarianceSpec& cov() const { return cov_; }
    const TruncationPolicy& policy() const { return pol_; }
    void set_policy(const TruncationPolicy& pol) { pol_ = pol; }

    /// Parameter dimension: n_x for spatial modes, n_x * n_t for the distributed source.
    Index param_dim() const;

    const std::vector<ApplyRecord>& rank_trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }
    void record(ApplyRecord r) { trace_.push_back(r); }

    /// L^{-1} b for the steady-Poisson mode.
    Vector poisson_solve(const Vector& b) const;

private:
    std::shared_ptr<const SpaceTimeOperator> op_;
    SpatialOperator spatial_;
    SensorLayout layout_;
    CovarianceSpec cov_;
    TruncationPolicy pol_;
    HessianMode mode_;
    std::vector<ApplyRecord> trace_;
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> poisson_;
};

/// beta_noise * tau * M * (mask o Y); the mask acts on the rows of W1.
LowRankMat apply_obs_weight(const LowRankMat& Y, const SensorLayout& layout,
                            const CovarianceSpec& cov, const TimeGrid& time, double m_scale);

/// H v for the initial-condition parameter:
/// scale -> inject -> forward sweep -> observe/weight -> adjoint sweep -> extract -> scale.
Vector misfit_apply_ic(const Vector& v, HessianContext& ctx);

/// H vec(v) for a distributed space-time source, injected as tau * M * u per block.
LowRankMat misfit_apply_st(const LowRankMat& v, HessianContext& ctx);

/// (beta_prior / beta_noise) L^{-1} L^{-1} v.
Vector steady_poisson_apply(const Vector& v, const HessianContext& ctx);
Vector steady_poisson_apply(const Vector& v, const CovarianceSpec& cov, const SpatialOperator& L);

} // namespace lrcov
