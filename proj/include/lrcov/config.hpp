#pragma once

#include "lrcov/discretize.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lrcov {

enum class ProblemKind { Heat, ConvDiff, SteadyPoisson };
enum class ParamMode { InitialCondition, Source };
enum class PriorPreset { Scalar, Beta };

/// Resolved run configuration. One canonical key per field; see RunConfig::keys().
struct RunConfig {
    ProblemKind problem = ProblemKind::Heat;
    ParamMode mode = ParamMode::InitialCondition;
    Index n_side = 31;
    Index n_t = 30;
    double t_final = 1.0;
    double nu = 1e-2;
    std::array<double, 2> wind{0.0, 1.0};
    double beta_ratio = 1e4;
    PriorPreset prior = PriorPreset::Scalar;
    double gamma_prior = 10.0;
    double beta_prior = 1.0;
    std::string sensors = "grid3x3";  // grid3x3 | none | x,y[,side];x,y[,side];...
    double eps0 = 1e-8;
    Index r_max = 0;                  // 0: no cap
    double eps_eig = 1e-1;
    Index m_a = 200;
    Index check_every = 10;
    double stability_tol = 1e-3;
    Index nev = 0;
    bool restart = true;
    Index k = 50;                     // eigenvalues written / compared
    Index oracle_k = 10;              // eigenpairs compared by the oracle
    Index oracle_cap = 2000;
    double oracle_retain = 1e-8;
    std::uint64_t seed = 0;
    std::string out = "out";

    /// Canonical keys in manifest order.
    static const std::vector<std::string>& keys();

    /// Sets one field from text; throws ConfigError on unknown key or bad value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    void validate() const;

    /// key=value lines for every canonical key.
    void write(std::ostream& out) const;
};

/// Parses key=value lines ('#' starts a comment) into `cfg`.
void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& origin = "config");
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Applies LRCOV_<KEY> environment variables (key upper-cased).
void apply_env(RunConfig& cfg);

/// Flag spelling of a key: n_side -> n-side.
std::string flag_name(const std::string& key);

/// Exact text form of a double (round-trips).
std::string format_double(double x);

} // namespace lrcov
