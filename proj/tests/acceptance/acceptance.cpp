// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance          run all criteria
//   acceptance 3 7      run the listed criteria
//
// Exit status is nonzero when any selected criterion fails.

#include "lrcov/run.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace lrcov;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    std::vector<std::string> violated;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            violated.push_back(what);
        }
    }
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// Orthogonality and imaginary-part metrics of every Arnoldi run, for criterion 7.
struct RunMetric {
    std::string label;
    double orthogonality = 0.0;
    double imag_ratio = 0.0;
};
std::vector<RunMetric> g_runs;

void note_run(const std::string& label, const EigsOutcome& e)
{
    g_runs.push_back({label, e.orthogonality_defect, e.max_imag_ratio});
}

RunConfig heat_config(Index n_side, Index n_t)
{
    RunConfig c;
    c.problem = ProblemKind::Heat;
    c.n_side = n_side;
    c.n_t = n_t;
    return c;
}

RunConfig tiny_heat()
{
    RunConfig c = heat_config(7, 5);
    c.sensors = "grid3x3";  // under-resolved at n_side = 7: full observation
    return c;
}

RunConfig tiny_convdiff()
{
    RunConfig c = heat_config(5, 4);
    c.problem = ProblemKind::ConvDiff;
    c.nu = 1e-2;
    c.sensors = "grid3x3";
    return c;
}

RunConfig steady_config()
{
    RunConfig c;
    c.problem = ProblemKind::SteadyPoisson;
    c.n_side = 31;
    c.beta_ratio = 1e4;
    c.nev = 10;
    c.stability_tol = 1e-10;
    return c;
}

double max_rel_diff(const Vector& a, const Vector& b)
{
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(std::abs(a(i)), std::abs(b(i))));
    return worst;
}

// ---------------------------------------------------------------------------

void criterion_1(Verdict& v)
{
    const auto t0 = Clock::now();
    Problem p = build_problem(steady_config());
    const EigsOutcome e = run_eigs(p, 0, nullptr);
    const double wall = seconds_since(t0);
    note_run("steady-poisson", e);

    const auto modes = smallest_fd_modes(p.grid, 10);
    double worst = 0.0;
    v.require(e.ritz.size() >= 10, "at least 10 Ritz values");
    for (std::size_t i = 0; i < 10 && i < e.ritz.size(); ++i) {
        const double ref = 1e-4 / (modes[i].lambda * modes[i].lambda);
        worst = std::max(worst, std::abs(e.ritz[i].value.real() - ref) / ref);
    }
    v.require(worst <= 1e-8, "relative error <= 1e-8");
    v.require(wall < 5.0, "runtime < 5 s");
    v.detail << "max_rel_err=" << fmt(worst) << " iterations=" << e.iterations << " runtime=" << fmt(wall) << "s";
}

void criterion_2(Verdict& v)
{
    Problem p = build_problem(steady_config());
    const EigsOutcome e = run_eigs(p, -1, nullptr);
    note_run("steady-poisson", e);

    // Group the analytic modes by eigenvalue; extend past 10 to close a straddling group.
    auto modes = smallest_fd_modes(p.grid, 16);
    std::size_t end = 10;
    while (end < modes.size() &&
           std::abs(modes[end].lambda - modes[end - 1].lambda) <= 1e-12 * modes[end].lambda)
        ++end;

    double worst_tail = 0.0, worst_angle = 0.0;
    Index simple = 0, degenerate = 0;
    std::size_t i = 0;
    while (i < end) {
        std::size_t j = i + 1;
        while (j < end && std::abs(modes[j].lambda - modes[i].lambda) <= 1e-12 * modes[i].lambda) ++j;
        if (j - i == 1) {
            const SeparationRank r = rank_one_check(e.ritz[i].vector, p.grid);
            worst_tail = std::max(worst_tail, r.tail_ratio);
            ++simple;
        } else {
            Matrix ritz(p.grid.n_x(), static_cast<Index>(j - i)), exact(p.grid.n_x(), static_cast<Index>(j - i));
            for (std::size_t k = i; k < j; ++k) {
                ritz.col(static_cast<Index>(k - i)) = e.ritz[k].vector;
                exact.col(static_cast<Index>(k - i)) = analytic_separable_eigvec(modes[k].m, modes[k].n, p.grid).dense();
            }
            worst_angle = std::max(worst_angle, max_principal_angle(ritz, exact));
            ++degenerate;
        }
        i = j;
    }
    v.require(worst_tail <= 1e-6, "sigma2/sigma1 <= 1e-6 for simple eigenvalues");
    v.require(worst_angle <= 1e-5, "principal angle <= 1e-5 for degenerate pairs");
    v.detail << "simple=" << simple << " max_sigma2/sigma1=" << fmt(worst_tail) << " degenerate_groups=" << degenerate
             << " max_angle=" << fmt(worst_angle);
}

void criterion_3(Verdict& v)
{
    const std::pair<const char*, RunConfig> cases[] = {{"heat", tiny_heat()}, {"convdiff", tiny_convdiff()}};
    for (const auto& [name, cfg] : cases) {
        const auto t0 = Clock::now();
        Problem p = build_problem(cfg);
        const OracleOutcome o = run_oracle(p);
        const double wall = seconds_since(t0);
        note_run(name, o.eigs);
        v.require(o.report.max_eig_rel_error <= 1e-6, std::string(name) + " eigenvalue error <= 1e-6");
        v.require(o.report.max_angle <= 1e-4, std::string(name) + " principal angle <= 1e-4");
        v.require(o.report.matvec_rel_error <= 1e-8, std::string(name) + " matvec agreement <= 1e-8");
        v.require(wall < 30.0, std::string(name) + " runtime < 30 s");
        v.detail << name << ": eig_err=" << fmt(o.report.max_eig_rel_error) << " angle=" << fmt(o.report.max_angle)
                 << " full_obs=" << (p.sensors_degraded ? "yes" : "no") << " runtime=" << fmt(wall) << "s; ";
    }
}

void criterion_4(Verdict& v)
{
    const std::pair<const char*, RunConfig> cases[] = {{"heat", tiny_heat()}, {"convdiff", tiny_convdiff()}};
    for (const auto& [name, cfg] : cases) {
        Problem p = build_problem(cfg);
        const OracleOutcome o = run_oracle(p);
        note_run(name, o.eigs);
        const double err =
            ((o.lowrank_variance - o.dense_variance).array().abs() / o.dense_variance.array()).maxCoeff();
        v.require(err <= 1e-4, std::string(name) + " variance error <= 1e-4 at every dof");
        v.detail << name << ": variance_rel_err=" << fmt(err) << "; ";
    }
}

void criterion_5(Verdict& v)
{
    const auto t0 = Clock::now();
    std::vector<Vector> tops;
    for (Index nt : {30, 60, 90}) {
        RunConfig c = heat_config(31, nt);
        c.nev = 10;
        c.stability_tol = 1e-6;
        Problem p = build_problem(c);
        const EigsOutcome e = run_eigs(p, 0, nullptr);
        note_run("heat nt=" + std::to_string(nt), e);
        tops.push_back(e.values().head(10));
    }
    const double wall = seconds_since(t0);
    const double d12 = max_rel_diff(tops[0], tops[1]);
    const double d13 = max_rel_diff(tops[0], tops[2]);
    const double d23 = max_rel_diff(tops[1], tops[2]);
    v.require(std::max({d12, d13, d23}) <= 0.15, "top-10 curves pairwise within 15%");
    v.require(wall < 300.0, "runtime < 5 min");
    v.detail << "max_rel_diff 30/60=" << fmt(d12) << " 30/90=" << fmt(d13) << " 60/90=" << fmt(d23)
             << " lambda1=" << fmt(tops[0](0)) << "/" << fmt(tops[1](0)) << "/" << fmt(tops[2](0))
             << " runtime=" << fmt(wall) << "s";
}

void criterion_6(Verdict& v)
{
    std::vector<Index> nt_ranks, nu_ranks;
    for (Index nt : {30, 60, 90}) {
        Problem p = build_problem(heat_config(31, nt));
        const EigsOutcome e = run_eigs(p, 0, nullptr);
        note_run("heat nt=" + std::to_string(nt), e);
        nt_ranks.push_back(e.max_rank);
    }
    for (double nu : {1e-1, 1e-2, 1e-3}) {
        RunConfig c = heat_config(31, 30);
        c.problem = ProblemKind::ConvDiff;
        c.nu = nu;
        Problem p = build_problem(c);
        const EigsOutcome e = run_eigs(p, 0, nullptr);
        note_run("convdiff nu=" + fmt(nu), e);
        nu_ranks.push_back(e.max_rank);
    }
    for (const auto* ranks : {&nt_ranks, &nu_ranks}) {
        const auto [lo, hi] = std::minmax_element(ranks->begin(), ranks->end());
        v.require(*hi - *lo <= 5, "max rank varies by <= 5");
        v.require(*hi <= 40, "max rank <= 40");
    }
    v.detail << "n_t{30,60,90} ranks=" << nt_ranks[0] << "," << nt_ranks[1] << "," << nt_ranks[2]
             << " nu{1e-1,1e-2,1e-3} ranks=" << nu_ranks[0] << "," << nu_ranks[1] << "," << nu_ranks[2];
}

// Mean variance reduction over sensor dofs and over dofs farther than 1/8 from every patch.
std::pair<double, double> reductions(const Vector& var, const Problem& p)
{
    double s_sum = 0.0, f_sum = 0.0;
    Index s_n = 0, f_n = 0;
    const Index n = p.grid.n_side;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            const Index d = p.grid.dof(i, j);
            const double x = p.grid.coord(i), y = p.grid.coord(j);
            double dist = 1e300;
            for (const auto& s : p.layout.patches) {
                const double dx = std::max(0.0, std::abs(x - s.cx) - s.side / 2);
                const double dy = std::max(0.0, std::abs(y - s.cy) - s.side / 2);
                dist = std::min(dist, std::hypot(dx, dy));
            }
            const double red = p.cov.gamma_prior - var(d);
            if (p.layout.mask(d) > 0.0) {
                s_sum += red;
                ++s_n;
            } else if (dist > 0.125) {
                f_sum += red;
                ++f_n;
            }
        }
    return {s_sum / static_cast<double>(std::max<Index>(s_n, 1)), f_sum / static_cast<double>(std::max<Index>(f_n, 1))};
}

void criterion_8(Verdict& v)
{
    const auto t0 = Clock::now();
    std::vector<Vector> fields;
    Problem keep;
    Index retained[2] = {0, 0};
    int slot = 0;
    for (double eps : {1e-1, 1e-3}) {
        RunConfig c = heat_config(63, 30);
        c.eps_eig = eps;
        Problem p = build_problem(c);
        const VarianceOutcome out = run_variance(p, nullptr);
        note_run("heat 63 eps_eig=" + fmt(eps), out.eigs);
        fields.push_back(out.summary.variance_field);
        retained[slot++] = out.summary.retained();
        if (eps == 1e-1) keep = std::move(p);
    }
    const double wall = seconds_since(t0);
    const Vector& f = fields[0];
    Index argmin = 0;
    const double fmin = f.minCoeff(&argmin);
    const auto [sensor_red, far_red] = reductions(f, keep);
    const double d = max_rel_diff(fields[0], fields[1]);

    v.require(f.maxCoeff() <= keep.cov.gamma_prior, "(a) variance <= gamma everywhere");
    v.require(keep.layout.mask(argmin) > 0.0, "(b) minimum at a sensor dof");
    v.require(sensor_red > far_red, "(c) sensor reduction exceeds far-field reduction");
    v.require(d <= 0.02, "(d) eps_eig 1e-1 vs 1e-3 within 2%");
    v.require(wall < 600.0, "runtime < 10 min");
    v.detail << "max=" << fmt(f.maxCoeff()) << " min=" << fmt(fmin) << " min_at_sensor="
             << (keep.layout.mask(argmin) > 0.0 ? "yes" : "no") << " mean_reduction sensor/far=" << fmt(sensor_red)
             << "/" << fmt(far_red) << " eps_eig_diff=" << fmt(d) << " retained=" << retained[0] << "/"
             << retained[1] << " runtime=" << fmt(wall) << "s";
}

void criterion_9(Verdict& v)
{
    std::vector<Vector> fields;
    std::vector<Index> retained, iterations;
    Problem keep;
    for (double ratio : {1e4, 1e6}) {
        RunConfig c = heat_config(63, 30);
        c.beta_ratio = ratio;
        c.eps_eig = 1.0;
        Problem p = build_problem(c);
        const VarianceOutcome out = run_variance(p, nullptr);
        note_run("heat 63 ratio=" + fmt(ratio), out.eigs);
        fields.push_back(out.summary.variance_field);
        retained.push_back(out.summary.retained());
        iterations.push_back(out.eigs.iterations);
        keep = std::move(p);
    }
    bool decreases = true;
    double worst = -1e300;
    for (Index d = 0; d < keep.grid.n_x(); ++d)
        if (keep.layout.mask(d) > 0.0) {
            decreases = decreases && fields[1](d) < fields[0](d);
            worst = std::max(worst, fields[1](d) - fields[0](d));
        }
    v.require(decreases, "variance strictly decreases at every sensor dof");
    v.require(retained[1] > retained[0], "retained count strictly increases");
    v.require(iterations[1] > iterations[0], "iteration count grows with the ratio");
    v.detail << "retained=" << retained[0] << "->" << retained[1] << " iterations=" << iterations[0] << "->"
             << iterations[1] << " max_sensor_change=" << fmt(worst);
}

void criterion_10(Verdict& v)
{
    const std::pair<const char*, RunConfig> cases[] = {{"heat", tiny_heat()}, {"convdiff", tiny_convdiff()}};
    for (const auto& [name, base] : cases) {
        std::vector<Vector> tops;
        for (double eps : {1e-8, 1e-10}) {
            RunConfig c = base;
            c.eps0 = eps;
            Problem p = build_problem(c);
            const OracleOutcome o = run_oracle(p);
            note_run(std::string(name) + " eps0=" + fmt(eps), o.eigs);
            tops.push_back(o.eigs.values().head(10));
        }
        const double d = max_rel_diff(tops[0], tops[1]);
        v.require(d <= 1e-6, std::string(name) + " top-10 agree to 1e-6");
        v.detail << name << ": max_rel_diff=" << fmt(d) << "; ";
    }
}

const std::map<int, std::pair<std::string, std::function<void(Verdict&)>>>& criteria();

void criterion_7(Verdict& v)
{
    // Re-run every other criterion and inspect all Arnoldi runs they make.
    g_runs.clear();
    for (const auto& [id, entry] : criteria()) {
        if (id == 7) continue;
        Verdict scratch;
        entry.second(scratch);
    }
    double orth = 0.0, imag = 0.0;
    std::string orth_at, imag_at;
    for (const auto& r : g_runs) {
        if (r.orthogonality >= orth) {
            orth = r.orthogonality;
            orth_at = r.label;
        }
        if (r.imag_ratio >= imag) {
            imag = r.imag_ratio;
            imag_at = r.label;
        }
    }
    v.require(orth <= 1e-6, "||V^T V - I||_max <= 1e-6");
    v.require(imag <= 1e-8, "max |Im| / |theta_1| <= 1e-8");
    v.detail << "runs=" << g_runs.size() << " max_orth_defect=" << fmt(orth) << " (" << orth_at
             << ") max_imag_ratio=" << fmt(imag) << " (" << imag_at << ")";
}

const std::map<int, std::pair<std::string, std::function<void(Verdict&)>>>& criteria()
{
    static const std::map<int, std::pair<std::string, std::function<void(Verdict&)>>> table = {
        {1, {"analytic steady-Poisson spectrum", criterion_1}},
        {2, {"separation rank of Poisson Ritz vectors", criterion_2}},
        {3, {"dense-oracle eigenpair equivalence", criterion_3}},
        {4, {"posterior variance oracle", criterion_4}},
        {5, {"time-step invariance of eigenvalue decay", criterion_5}},
        {6, {"rank boundedness", criterion_6}},
        {7, {"orthogonality under truncation", criterion_7}},
        {8, {"variance phenomenology", criterion_8}},
        {9, {"beta-ratio monotonicity", criterion_9}},
        {10, {"truncation-tolerance robustness", criterion_10}},
    };
    return table;
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        try {
            selected.insert(std::stoi(argv[i]));
        } catch (const std::exception&) {
            std::cerr << "usage: acceptance [criterion ...]\n";
            return 2;
        }
    }
    if (selected.empty())
        for (const auto& [id, entry] : criteria()) selected.insert(id);

    int failures = 0;
    for (int id : selected) {
        const auto it = criteria().find(id);
        if (it == criteria().end()) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        Verdict v;
        try {
            it->second.second(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.violated.push_back(std::string("exception: ") + e.what());
        }
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << it->second.first
                  << "): " << v.detail.str();
        for (const auto& w : v.violated) std::cout << " | violated: " << w;
        std::cout << std::endl;
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
