// lrcov: eigenvalues, variance fields, dense-oracle checks and sweeps.

#include "lrcov/errors.hpp"
#include "lrcov/run.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace lrcov;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOracleFail = 4;

std::ofstream open_log(const fs::path& dir)
{
    fs::create_directories(dir);
    std::ofstream f(dir / "diagnostics.log");
    f.precision(17);
    return f;
}

void log_problem(std::ostream& log, const Problem& p)
{
    log << "param_dim=" << p.ctx->param_dim() << '\n';
    if (p.op) log << "observed_dofs=" << p.layout.observed() << '\n';
    if (p.sensors_degraded) log << "note=grid3x3 under-resolved at this n_side; using full observation\n";
    log << "beta_noise=" << p.cov.beta_noise << " beta_prior=" << p.cov.beta_prior
        << " gamma_prior=" << p.cov.gamma_prior << '\n';
}

void log_summary(std::ostream& log, const EigsOutcome& e)
{
    log << "iterations=" << e.iterations << " restarts=" << e.restarts
        << " converged=" << e.converged_count << " reason=" << stop_reason_name(e.reason) << '\n'
        << "max_rank=" << e.max_rank << " orthogonality_defect=" << e.orthogonality_defect
        << " max_imag_ratio=" << e.max_imag_ratio << " wall=" << e.wall_seconds << '\n';
}

int cmd_eigs(const RunConfig& cfg)
{
    Problem p = build_problem(cfg);
    const fs::path dir = cfg.out;
    auto log = open_log(dir);
    log_problem(log, p);
    const EigsOutcome e = run_eigs(p, 0, &log);
    log_summary(log, e);
    write_eigs_files(dir, e, cfg.k);
    write_manifest(dir, cfg);
    std::cout << "wrote " << (dir / "eigenvalues.csv").string() << " (" << e.iterations
              << " iterations, " << stop_reason_name(e.reason) << ")\n";
    return 0;
}

int cmd_variance(const RunConfig& cfg)
{
    Problem p = build_problem(cfg);
    const fs::path dir = cfg.out;
    auto log = open_log(dir);
    log_problem(log, p);
    const VarianceOutcome v = run_variance(p, &log);
    log_summary(log, v.eigs);
    log << "retained=" << v.summary.retained() << " variance_min=" << v.summary.variance_field.minCoeff()
        << " variance_max=" << v.summary.variance_field.maxCoeff() << '\n';
    write_eigs_files(dir, v.eigs, cfg.k);
    write_variance_files(dir, v, p.grid);
    write_manifest(dir, cfg);
    std::cout << "wrote " << (dir / "variance.csv").string() << " (" << v.summary.retained()
              << " retained pairs)\n";
    return 0;
}

int cmd_oracle(const RunConfig& cfg)
{
    Problem p = build_problem(cfg);
    const fs::path dir = cfg.out;
    auto log = open_log(dir);
    log_problem(log, p);
    const OracleOutcome o = run_oracle(p, {}, &log);
    log_summary(log, o.eigs);
    {
        std::ofstream f(dir / "oracle_report.txt");
        o.report.write(f);
    }
    write_manifest(dir, cfg);
    o.report.write(std::cout);
    return o.report.pass ? 0 : kExitOracleFail;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis)
{
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ConfigError("--axis expects key=v1,v2,...");
    std::string key = axis.substr(0, eq);
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "nt") key = "n_t";
    std::vector<std::string> values;
    std::stringstream ss(axis.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');)
        if (!v.empty()) values.push_back(v);
    const auto points = run_sweep(cfg, key, values, &std::cout);
    std::cout << "wrote " << (fs::path(cfg.out) / "summary.csv").string() << '\n';
    for (const auto& sp : points)
        if (!sp.ok) return kExitNumerical;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Low-rank posterior covariance for linear-Gaussian inverse problems"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    app.add_option("--config", config_file, "key=value configuration file (e.g. a manifest.txt)");

    std::map<std::string, std::string> flags;
    std::map<std::string, std::string> defaults;
    const RunConfig base;
    for (const auto& key : RunConfig::keys()) {
        defaults[key] = base.get(key);
        std::string names = "--" + flag_name(key);
        if (key == "n_t") names += ",--nt";
        app.add_option(names, flags[key], "default: " + defaults[key]);
    }

    auto* eigs = app.add_subcommand("eigs", "Ritz values, rank trace and Hessenberg matrix");
    auto* variance = app.add_subcommand("variance", "posterior variance field");
    auto* oracle = app.add_subcommand("oracle", "compare against the dense eigensolve (exit 4 on FAIL)");
    auto* sweep = app.add_subcommand("sweep", "one eigs run per axis value plus summary.csv");
    std::string axis;
    sweep->add_option("--axis", axis, "key=v1,v2,...")->required();
    auto* analytic = app.add_subcommand("analytic", "discrete and continuous Laplacian eigenvalue table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        RunConfig cfg;
        if (!config_file.empty()) apply_config_file(cfg, config_file);
        apply_env(cfg);
        for (const auto& key : RunConfig::keys()) {
            const auto* opt = app.get_option("--" + flag_name(key));
            if (opt->count() > 0) cfg.set(key, flags[key]);
        }
        cfg.validate();

        if (*eigs) return cmd_eigs(cfg);
        if (*variance) return cmd_variance(cfg);
        if (*oracle) return cmd_oracle(cfg);
        if (*sweep) return cmd_sweep(cfg, axis);
        if (*analytic) {
            write_analytic_table(std::cout, cfg.n_side, cfg.k, cfg.beta_ratio);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}
