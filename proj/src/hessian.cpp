#include "lrcov/hessian.hpp"
#include "lrcov/errors.hpp"

#include <cmath>
#include <string>

namespace lrcov {

namespace {

constexpr double kSnapSlack = 1e-9;

// Lattice span covered by a patch: k = ceil(side / h) dofs starting at the
// first lattice point at or after the lower patch edge.
struct Span {
    Index first;
    Index count;
};

Span snap(double centre, double side, const Grid& g)
{
    const Index count = std::max<Index>(1, static_cast<Index>(std::ceil(side / g.h - kSnapSlack)));
    const Index first = static_cast<Index>(std::ceil((centre - side / 2.0) / g.h - kSnapSlack)) - 1;
    return {first, count};
}

} // namespace

Index SensorLayout::observed() const
{
    return static_cast<Index>((mask.array() > 0.0).count());
}

SensorLayout make_sensor_layout(const Grid& grid, std::vector<SensorPatch> patches)
{
    SensorLayout layout;
    layout.mask = Vector::Zero(grid.n_x());
    for (const SensorPatch& p : patches) {
        if (!(p.side > 0.0) || p.cx - p.side / 2 < 0.0 || p.cx + p.side / 2 > 1.0 ||
            p.cy - p.side / 2 < 0.0 || p.cy + p.side / 2 > 1.0)
            throw ConfigError("sensor patch does not lie inside the unit square");
        if (p.side < grid.h * (1.0 - kSnapSlack))
            throw ConfigError("grid too coarse to resolve a sensor patch of side " +
                              std::to_string(p.side));
        const Span sx = snap(p.cx, p.side, grid);
        const Span sy = snap(p.cy, p.side, grid);
        if (sx.first < 0 || sy.first < 0 || sx.first + sx.count > grid.n_side ||
            sy.first + sy.count > grid.n_side)
            throw ConfigError("sensor patch covers boundary nodes");
        for (Index j = sy.first; j < sy.first + sy.count; ++j)
            for (Index i = sx.first; i < sx.first + sx.count; ++i) layout.mask(grid.dof(i, j)) = 1.0;
    }
    layout.patches = std::move(patches);
    return layout;
}

SensorLayout make_sensor_layout_3x3(const Grid& grid)
{
    if (grid.n_side < 15)
        throw ConfigError("3x3 sensor layout needs n_side >= 15, got " + std::to_string(grid.n_side));
    std::vector<SensorPatch> patches;
    for (int j = 1; j <= 3; ++j)
        for (int i = 1; i <= 3; ++i) patches.push_back({i / 4.0, j / 4.0, 1.0 / 16.0});
    return make_sensor_layout(grid, std::move(patches));
}

SensorLayout make_sensor_layout_full(const Grid& grid)
{
    SensorLayout layout;
    layout.mask = Vector::Ones(grid.n_x());
    layout.full = true;
    return layout;
}

SensorLayout make_sensor_layout_empty(const Grid& grid)
{
    SensorLayout layout;
    layout.mask = Vector::Zero(grid.n_x());
    return layout;
}

void CovarianceSpec::validate() const
{
    if (!(beta_noise > 0.0) || !(beta_prior > 0.0) || !(gamma_prior > 0.0))
        throw ConfigError("covariance scalars must be strictly positive");
}

CovarianceSpec CovarianceSpec::scalar_prior(double gamma, double ratio, const Grid& grid)
{
    if (!(gamma > 0.0) || !(ratio > 0.0)) throw ConfigError("gamma and ratio must be positive");
    const double beta_prior = 1.0 / (gamma * grid.mass_scale());
    return {ratio * beta_prior, beta_prior, gamma};
}

CovarianceSpec CovarianceSpec::beta_prior_preset(double beta_prior, double ratio, const Grid& grid)
{
    if (!(beta_prior > 0.0) || !(ratio > 0.0))
        throw ConfigError("beta_prior and ratio must be positive");
    return {ratio * beta_prior, beta_prior, 1.0 / (beta_prior * grid.mass_scale())};
}

HessianContext::HessianContext(std::shared_ptr<const SpaceTimeOperator> op, SensorLayout layout,
                               CovarianceSpec cov, TruncationPolicy pol, HessianMode mode)
    : op_(std::move(op)), layout_(std::move(layout)), cov_(cov), pol_(pol), mode_(mode)
{
    if (!op_) throw ConfigError("HessianContext needs a space-time operator");
    if (mode_ == HessianMode::SteadyPoisson)
        throw ConfigError("steady-Poisson contexts are built from the spatial operator");
    cov_.validate();
    pol_.validate();
    spatial_ = op_->spatial();
    if (layout_.mask.size() != op_->n_x()) throw ConfigError("sensor mask length does not match n_x");
}

HessianContext::HessianContext(const SpatialOperator& heat, CovarianceSpec cov)
    : spatial_(heat), cov_(cov), mode_(HessianMode::SteadyPoisson)
{
    if (heat.kind != OperatorKind::Heat)
        throw ConfigError("steady-Poisson mode requires the Laplacian operator");
    cov_.validate();
    layout_ = make_sensor_layout_full(heat.grid);
    poisson_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(heat.L);
    if (poisson_->info() != Eigen::Success) throw NumericalError("Laplacian factorization failed");
}

Index HessianContext::param_dim() const
{
    if (mode_ == HessianMode::DistributedSource) return op_->n_x() * op_->n_t();
    return spatial_.L.rows();
}

Vector HessianContext::poisson_solve(const Vector& b) const
{
    if (!poisson_) throw ConfigError("context has no Poisson factorization");
    return poisson_->solve(b);
}

LowRankMat apply_obs_weight(const LowRankMat& Y, const SensorLayout& layout,
                            const CovarianceSpec& cov, const TimeGrid& time, double m_scale)
{
    if (layout.mask.size() != Y.rows()) throw ConfigError("sensor mask length does not match field");
    const double w = cov.beta_noise * time.tau * m_scale;
    if (Y.rank() == 0 || layout.observed() == 0) return LowRankMat::zero(Y.rows(), Y.cols());
    Matrix w1 = layout.mask.asDiagonal() * Y.w1();
    w1 *= w;
    return LowRankMat(std::move(w1), Y.w2());
}

Vector misfit_apply_ic(const Vector& v, HessianContext& ctx)
{
    if (ctx.mode() != HessianMode::InitialCondition)
        throw ConfigError("misfit_apply_ic needs an initial-condition context");
    const SpaceTimeOperator& K = ctx.op();
    if (v.size() != K.n_x()) throw ConfigError("parameter vector length does not match n_x");
    if (!v.allFinite()) throw ConfigError("parameter vector is not finite");

    const double s = std::sqrt(ctx.cov().gamma_prior);
    SolveStats fwd, adj;
    const LowRankMat Y = st_solve_sweep(K, InitInjection{s * v}, ctx.policy(), &fwd);
    const LowRankMat Z =
        lr_truncate(apply_obs_weight(Y, ctx.layout(), ctx.cov(), K.time(), K.m_scale()), ctx.policy());
    const LowRankMat P = st_solve_adjoint_sweep(K, Z, ctx.policy(), &adj);
    ctx.record({fwd.max_rank, adj.max_rank});
    return s * extract_init(K, P);
}

LowRankMat misfit_apply_st(const LowRankMat& v, HessianContext& ctx)
{
    if (ctx.mode() != HessianMode::DistributedSource)
        throw ConfigError("misfit_apply_st needs a distributed-source context");
    const SpaceTimeOperator& K = ctx.op();
    if (v.rows() != K.n_x() || v.cols() != K.n_t())
        throw ConfigError("space-time parameter shape does not match the operator");

    const double s = std::sqrt(ctx.cov().gamma_prior);
    const double inject = K.time().tau * K.m_scale();
    SolveStats fwd, adj;
    const LowRankMat Y = st_solve_sweep(K, lr_scale(v, s * inject), ctx.policy(), &fwd);
    const LowRankMat Z =
        lr_truncate(apply_obs_weight(Y, ctx.layout(), ctx.cov(), K.time(), K.m_scale()), ctx.policy());
    const LowRankMat P = st_solve_adjoint_sweep(K, Z, ctx.policy(), &adj);
    ctx.record({fwd.max_rank, adj.max_rank});
    return lr_truncate(lr_scale(P, s * inject), ctx.policy());
}

Vector steady_poisson_apply(const Vector& v, const HessianContext& ctx)
{
    if (ctx.mode() != HessianMode::SteadyPoisson)
        throw ConfigError("steady_poisson_apply needs a steady-Poisson context");
    if (v.size() != ctx.spatial().L.rows()) throw ConfigError("vector length does not match n_x");
    const Vector once = ctx.poisson_solve(v);
    return (ctx.cov().beta_prior / ctx.cov().beta_noise) * ctx.poisson_solve(once);
}

Vector steady_poisson_apply(const Vector& v, const CovarianceSpec& cov, const SpatialOperator& L)
{
    const HessianContext ctx(L, cov);
    return steady_poisson_apply(v, ctx);
}

} // namespace lrcov
