#pragma once

#include "lrcov/arnoldi.hpp"
#include "lrcov/config.hpp"
#include "lrcov/hessian.hpp"
#include "lrcov/oracle.hpp"
#include "lrcov/posterior.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace lrcov {

/// Everything assembled from a RunConfig.
struct Problem {
    RunConfig cfg;
    Grid grid;
    SpatialOperator spatial;
    std::shared_ptr<const SpaceTimeOperator> op;  // null for steady-poisson
    SensorLayout layout;
    CovarianceSpec cov;
    bool sensors_degraded = false;  // grid3x3 requested on a grid too coarse for it
    std::unique_ptr<HessianContext> ctx;
};

/// Parses the sensors key: grid3x3 | none | full | x,y[,side];...
SensorLayout parse_sensors(const std::string& spec, const Grid& grid, bool* degraded = nullptr);

Problem build_problem(const RunConfig& cfg);

/// Arnoldi run flattened to dense arrays (space-time Ritz vectors are vectorized).
struct EigsOutcome {
    std::vector<RitzPair<Vector>> ritz;  // descending real part
    Matrix H;
    std::vector<IterationRecord> records;
    Index iterations = 0;
    Index restarts = 0;
    Index converged_count = 0;
    Index max_rank = 0;
    StopReason reason = StopReason::MaxIterations;
    double orthogonality_defect = 0.0;  // ||V^T V - I||_max over the basis
    double max_imag_ratio = 0.0;        // max |Im theta| / |theta_1| over the top k
    double wall_seconds = 0.0;

    Vector values() const;
    Vector imag() const;
    /// First n Ritz vectors as columns (only those that were formed).
    Matrix vectors(Index n) const;
};

StopRule stop_rule_from(const RunConfig& cfg);

/// Runs the Arnoldi iteration; n_vectors Ritz vectors are formed (-1: all).
/// Per-iteration records go to `diag` when given.
EigsOutcome run_eigs(Problem& p, Index n_vectors = -1, std::ostream* diag = nullptr);
EigsOutcome run_eigs(Problem& p, const StopRule& stop, Index n_vectors, std::ostream* diag);

std::string stop_reason_name(StopReason r);

/// eigenvalues.csv, ranks.csv, hessenberg.csv into dir.
void write_eigs_files(const std::filesystem::path& dir, const EigsOutcome& e, Index k);
void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg);

struct VarianceOutcome {
    EigsOutcome eigs;
    PosteriorSummary summary;
};

VarianceOutcome run_variance(Problem& p, std::ostream* diag = nullptr);
/// variance.csv, variance.pgm, retained.csv into dir.
void write_variance_files(const std::filesystem::path& dir, const VarianceOutcome& v, const Grid& grid);

struct OracleOutcome {
    OracleReport report;
    EigsOutcome eigs;
    DenseEigen dense;
    Vector lowrank_variance;
    Vector dense_variance;
};

/// Dense comparison: the Arnoldi run spans the whole parameter space.
OracleOutcome run_oracle(Problem& p, const OracleTolerances& tol = {}, std::ostream* diag = nullptr);

struct SweepPoint {
    std::string value;
    bool ok = false;
    std::string error;
    Index iterations = 0;
    Index max_rank = 0;
    double largest_eig = 0.0;
    StopReason reason = StopReason::MaxIterations;
};

/// One eigs run per axis value, each written to <out>/point_<i>; summary.csv at <out>.
std::vector<SweepPoint> run_sweep(const RunConfig& base, const std::string& key,
                                  const std::vector<std::string>& values, std::ostream* log = nullptr);

/// Table of the k smallest discrete Laplacian modes with their continuous values and
/// the steady-Poisson prediction (beta_prior / beta_noise) / lambda_h^2.
void write_analytic_table(std::ostream& out, Index n_side, Index k, double beta_ratio);

} // namespace lrcov
