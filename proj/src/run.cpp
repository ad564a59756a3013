#include "lrcov/run.hpp"
#include "lrcov/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lrcov {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f.precision(17);
    return f;
}

template <class V>
double gram_defect(const std::vector<V>& basis)
{
    using Ops = VectorOps<V>;
    double worst = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double g = Ops::dot(basis[i], basis[j]) - (i == j ? 1.0 : 0.0);
            worst = std::max(worst, std::abs(g));
        }
    return worst;
}

Vector to_dense(const Vector& v) { return v; }
Vector to_dense(const LowRankMat& v) { return lr_vec(v); }

template <class V, class Apply>
EigsOutcome drive(Apply&& apply, const V& v1, Problem& p, const StopRule& stop, Index n_vectors,
                  std::ostream* diag)
{
    using Clock = std::chrono::steady_clock;
    const TruncationPolicy pol = p.ctx->policy();
    ArnoldiHooks hooks;
    hooks.ritz_vectors = n_vectors;
    HessianContext* ctx = p.ctx.get();
    hooks.rank_probe = [ctx]() -> Index {
        return ctx->rank_trace().empty() ? 1 : ctx->rank_trace().back().max();
    };
    if (diag)
        hooks.on_iteration = [diag](const IterationRecord& r) {
            *diag << "iter=" << r.j << " subdiag=" << r.subdiagonal << " max_rank=" << r.max_rank
                  << " wall=" << r.wall_seconds << (r.restarted ? " restarted" : "") << '\n';
        };

    const auto t0 = Clock::now();
    ctx->clear_trace();
    ArnoldiResult<V> res = lr_arnoldi(std::forward<Apply>(apply), v1, pol, stop, hooks);

    EigsOutcome e;
    e.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    e.H = std::move(res.H);
    e.records = std::move(res.records);
    e.iterations = res.iterations;
    e.restarts = res.restarts;
    e.converged_count = res.converged_count;
    e.reason = res.reason;
    for (Index r : res.rank_trace) e.max_rank = std::max(e.max_rank, r);
    e.orthogonality_defect = gram_defect(res.basis);
    e.ritz.reserve(res.ritz.size());
    for (auto& rp : res.ritz) {
        RitzPair<Vector> d;
        d.value = rp.value;
        d.residual_estimate = rp.residual_estimate;
        d.has_vector = rp.has_vector;
        if (rp.has_vector) d.vector = to_dense(rp.vector);
        e.ritz.push_back(std::move(d));
    }
    const double top = e.ritz.empty() ? 0.0 : std::abs(e.ritz.front().value);
    const std::size_t kk = std::min<std::size_t>(e.ritz.size(), static_cast<std::size_t>(p.cfg.k));
    for (std::size_t i = 0; i < kk && top > 0.0; ++i)
        e.max_imag_ratio = std::max(e.max_imag_ratio, std::abs(e.ritz[i].value.imag()) / top);
    return e;
}

} // namespace

SensorLayout parse_sensors(const std::string& spec, const Grid& grid, bool* degraded)
{
    if (degraded) *degraded = false;
    if (spec == "none" || spec == "full") return make_sensor_layout_full(grid);
    if (spec == "grid3x3") {
        if (grid.n_side < 15) {
            if (degraded) *degraded = true;
            return make_sensor_layout_full(grid);
        }
        return make_sensor_layout_3x3(grid);
    }
    std::vector<SensorPatch> patches;
    for (const std::string& item : split(spec, ';')) {
        const auto parts = split(item, ',');
        if (parts.size() != 2 && parts.size() != 3)
            throw ConfigError("sensor patch '" + item + "' must be x,y or x,y,side");
        SensorPatch sp;
        try {
            sp.cx = std::stod(parts[0]);
            sp.cy = std::stod(parts[1]);
            if (parts.size() == 3) sp.side = std::stod(parts[2]);
        } catch (const std::exception&) {
            throw ConfigError("sensor patch '" + item + "' is not numeric");
        }
        patches.push_back(sp);
    }
    if (patches.empty()) throw ConfigError("sensors: empty patch list");
    return make_sensor_layout(grid, std::move(patches));
}

Problem build_problem(const RunConfig& cfg)
{
    cfg.validate();
    Problem p;
    p.cfg = cfg;
    p.grid = build_grid(cfg.n_side);
    p.spatial = cfg.problem == ProblemKind::ConvDiff ? assemble_convdiff(p.grid, cfg.nu, cfg.wind)
                                                     : assemble_heat(p.grid);
    p.cov = cfg.prior == PriorPreset::Scalar
                ? CovarianceSpec::scalar_prior(cfg.gamma_prior, cfg.beta_ratio, p.grid)
                : CovarianceSpec::beta_prior_preset(cfg.beta_prior, cfg.beta_ratio, p.grid);
    TruncationPolicy pol;
    pol.eps0 = cfg.eps0;
    if (cfg.r_max > 0) pol.r_max = cfg.r_max;
    pol.validate();

    if (cfg.problem == ProblemKind::SteadyPoisson) {
        p.layout = make_sensor_layout_full(p.grid);
        p.ctx = std::make_unique<HessianContext>(p.spatial, p.cov);
        p.ctx->set_policy(pol);
        return p;
    }
    p.layout = parse_sensors(cfg.sensors, p.grid, &p.sensors_degraded);
    p.op = std::make_shared<SpaceTimeOperator>(p.spatial, build_time_grid(cfg.n_t, cfg.t_final));
    const HessianMode mode = cfg.mode == ParamMode::Source ? HessianMode::DistributedSource
                                                           : HessianMode::InitialCondition;
    p.ctx = std::make_unique<HessianContext>(p.op, p.layout, p.cov, pol, mode);
    return p;
}

Vector EigsOutcome::values() const
{
    Vector v(static_cast<Index>(ritz.size()));
    for (std::size_t i = 0; i < ritz.size(); ++i) v(static_cast<Index>(i)) = ritz[i].value.real();
    return v;
}

Vector EigsOutcome::imag() const
{
    Vector v(static_cast<Index>(ritz.size()));
    for (std::size_t i = 0; i < ritz.size(); ++i) v(static_cast<Index>(i)) = ritz[i].value.imag();
    return v;
}

Matrix EigsOutcome::vectors(Index n) const
{
    Index count = 0;
    while (count < n && static_cast<std::size_t>(count) < ritz.size() &&
           ritz[static_cast<std::size_t>(count)].has_vector)
        ++count;
    if (count == 0) return Matrix();
    Matrix V(ritz.front().vector.size(), count);
    for (Index i = 0; i < count; ++i) V.col(i) = ritz[static_cast<std::size_t>(i)].vector;
    return V;
}

StopRule stop_rule_from(const RunConfig& cfg)
{
    StopRule s;
    s.m_a = cfg.m_a;
    s.eps_eig = cfg.eps_eig;
    s.check_every = cfg.check_every;
    s.stability_tol = cfg.stability_tol;
    s.nev = cfg.nev;
    s.restart_on_breakdown = cfg.restart;
    s.seed = cfg.seed;
    return s;
}

EigsOutcome run_eigs(Problem& p, Index n_vectors, std::ostream* diag)
{
    return run_eigs(p, stop_rule_from(p.cfg), n_vectors, diag);
}

EigsOutcome run_eigs(Problem& p, const StopRule& stop, Index n_vectors, std::ostream* diag)
{
    HessianContext& ctx = *p.ctx;
    std::mt19937_64 rng(stop.seed);
    switch (ctx.mode()) {
    case HessianMode::SteadyPoisson: {
        const Vector v1 = VectorOps<Vector>::random_like(Vector(ctx.param_dim()), rng);
        return drive([&ctx](const Vector& v) { return steady_poisson_apply(v, ctx); }, v1, p, stop,
                     n_vectors, diag);
    }
    case HessianMode::InitialCondition: {
        const Vector v1 = VectorOps<Vector>::random_like(Vector(ctx.param_dim()), rng);
        return drive([&ctx](const Vector& v) { return misfit_apply_ic(v, ctx); }, v1, p, stop,
                     n_vectors, diag);
    }
    case HessianMode::DistributedSource: {
        const LowRankMat proto = LowRankMat::zero(ctx.op().n_x(), ctx.op().n_t());
        const LowRankMat v1 = VectorOps<LowRankMat>::random_like(proto, rng);
        return drive([&ctx](const LowRankMat& v) { return misfit_apply_st(v, ctx); }, v1, p, stop,
                     n_vectors, diag);
    }
    }
    throw ConfigError("unknown Hessian mode");
}

std::string stop_reason_name(StopReason r)
{
    switch (r) {
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Converged: return "converged";
    case StopReason::Breakdown: return "breakdown";
    case StopReason::Exhausted: return "exhausted";
    }
    return "unknown";
}

void write_eigs_files(const fs::path& dir, const EigsOutcome& e, Index k)
{
    fs::create_directories(dir);
    {
        auto f = open_out(dir / "eigenvalues.csv");
        f << "index,ritz_value,imag_part\n";
        const std::size_t n = std::min<std::size_t>(e.ritz.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < n; ++i)
            f << i + 1 << ',' << e.ritz[i].value.real() << ',' << e.ritz[i].value.imag() << '\n';
    }
    {
        auto f = open_out(dir / "ranks.csv");
        f << "iteration,max_intermediate_rank\n";
        for (const auto& r : e.records) f << r.j << ',' << r.max_rank << '\n';
    }
    {
        auto f = open_out(dir / "hessenberg.csv");
        for (Index j = 0; j < e.H.cols(); ++j) f << (j ? "," : "") << "col_" << j + 1;
        f << '\n';
        for (Index i = 0; i < e.H.rows(); ++i) {
            for (Index j = 0; j < e.H.cols(); ++j) f << (j ? "," : "") << e.H(i, j);
            f << '\n';
        }
    }
}

void write_manifest(const fs::path& dir, const RunConfig& cfg)
{
    fs::create_directories(dir);
    auto f = open_out(dir / "manifest.txt");
    cfg.write(f);
}

VarianceOutcome run_variance(Problem& p, std::ostream* diag)
{
    if (p.ctx->mode() == HessianMode::DistributedSource)
        throw ConfigError("variance needs a spatial parameter (mode=ic or steady-poisson)");
    VarianceOutcome out;
    out.eigs = run_eigs(p, -1, diag);
    out.summary = build_posterior(out.eigs.ritz, p.cfg.eps_eig, p.cov.gamma_prior);
    return out;
}

void write_variance_files(const fs::path& dir, const VarianceOutcome& v, const Grid& grid)
{
    fs::create_directories(dir);
    {
        auto f = open_out(dir / "variance.csv");
        write_variance_csv(f, v.summary.variance_field, grid);
    }
    {
        auto f = open_out(dir / "variance.pgm");
        write_variance_pgm(f, v.summary.variance_field, grid, v.summary.gamma_prior);
    }
    {
        auto f = open_out(dir / "retained.csv");
        f << "index,lambda,lambda_tilde\n";
        for (Index i = 0; i < v.summary.retained(); ++i)
            f << i + 1 << ',' << v.summary.eigenvalues(i) << ',' << v.summary.filter_factors(i) << '\n';
    }
}

OracleOutcome run_oracle(Problem& p, const OracleTolerances& tol, std::ostream* diag)
{
    HessianContext& ctx = *p.ctx;
    const DenseMisfit dm = dense_misfit(ctx, p.cfg.oracle_cap);
    const Index dim = dm.H.rows();

    OracleOutcome out;
    const double matvec = matvec_check(ctx, dm.H, 20, p.cfg.seed + 1);

    StopRule stop = stop_rule_from(p.cfg);
    stop.m_a = dim;
    stop.check_every = dim;
    stop.restart_on_breakdown = true;
    out.eigs = run_eigs(p, stop, -1, diag);

    out.dense = dense_eig_top(dm.H, dim);
    out.dense_variance = dense_posterior_diag(dm.H, p.cov.gamma_prior);
    if ((out.dense_variance.array() > p.cov.gamma_prior * (1.0 + 1e-10)).any())
        throw NumericalError("dense posterior variance exceeds the prior variance");
    out.lowrank_variance =
        build_posterior(out.eigs.ritz, p.cfg.oracle_retain, p.cov.gamma_prior).variance_field;

    SpectralSnapshot low{out.eigs.values(), out.eigs.imag(), out.eigs.vectors(dim), out.lowrank_variance};
    SpectralSnapshot dense{out.dense.values, Vector::Zero(dim), out.dense.vectors, out.dense_variance};
    const Index k = std::min({p.cfg.oracle_k, dim, static_cast<Index>(out.eigs.ritz.size())});
    out.report = compare(low, dense, k, tol, dm.H);
    out.report.matvec_rel_error = matvec;
    out.report.symmetry_defect = dm.asymmetry;
    out.report.evaluate();
    return out;
}

std::vector<SweepPoint> run_sweep(const RunConfig& base, const std::string& key,
                                  const std::vector<std::string>& values, std::ostream* log)
{
    if (values.empty()) throw ConfigError("sweep axis is empty");
    RunConfig probe = base;
    probe.set(key, values.front());  // rejects unknown keys up front

    const fs::path root = base.out;
    fs::create_directories(root);
    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < values.size(); ++i) {
        SweepPoint sp;
        sp.value = values[i];
        try {
            RunConfig cfg = base;
            cfg.set(key, values[i]);
            cfg.out = (root / ("point_" + std::to_string(i + 1))).string();
            Problem p = build_problem(cfg);
            const fs::path dir = cfg.out;
            fs::create_directories(dir);
            std::ofstream diag(dir / "diagnostics.log");
            diag.precision(17);
            const EigsOutcome e = run_eigs(p, 0, &diag);
            write_eigs_files(dir, e, cfg.k);
            write_manifest(dir, cfg);
            sp.ok = true;
            sp.iterations = e.iterations;
            sp.max_rank = e.max_rank;
            sp.largest_eig = e.ritz.empty() ? 0.0 : e.ritz.front().value.real();
            sp.reason = e.reason;
        } catch (const std::exception& ex) {
            sp.error = ex.what();
        }
        if (log)
            *log << key << '=' << sp.value << (sp.ok ? " ok" : " failed: " + sp.error) << '\n';
        points.push_back(sp);
    }

    auto f = open_out(root / "summary.csv");
    f << "point," << key << ",iterations_to_threshold,max_rank,largest_eig,status\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& sp = points[i];
        f << i + 1 << ',' << sp.value << ',' << sp.iterations << ',' << sp.max_rank << ','
          << sp.largest_eig << ',' << (sp.ok ? stop_reason_name(sp.reason) : "error") << '\n';
    }
    return points;
}

void write_analytic_table(std::ostream& out, Index n_side, Index k, double beta_ratio)
{
    const Grid g = build_grid(n_side);
    const auto modes = smallest_fd_modes(g, static_cast<std::size_t>(k));
    const auto old = out.precision(17);
    out << "index,m,n,lambda_continuous,lambda_discrete,steady_poisson_eig\n";
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto& md = modes[i];
        out << i + 1 << ',' << md.m << ',' << md.n << ',' << analytic_poisson_eig(md.m, md.n) << ','
            << md.lambda << ',' << 1.0 / (beta_ratio * md.lambda * md.lambda) << '\n';
    }
    out.precision(old);
}

} // namespace lrcov
