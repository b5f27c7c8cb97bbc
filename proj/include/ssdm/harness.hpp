#pragma once

// Experiment engine: seeded Monte Carlo trials of match + GAMP dematching,
// rate sweeps, coupled-versus-uncoupled comparisons and Hadamard reports.
//
// Trial i uses seed base + i. Its message comes from stream 1 of that seed
// and its operator from stream 2; a shared operator is the one of trial 0.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ssdm/config.hpp"

namespace ssdm {

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double rate = 0.0;  // requested
    double realized_rate = 0.0;  // L log2(B) / M
    std::size_t section_size = 0;
    std::size_t sections = 0;
    std::size_t rows = 0;
    OperatorKind op = OperatorKind::DenseGaussian;
    double damping = 1.0;
    double ser = 0.0;
    double mse = 0.0;
    double estimated_mse = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> y_pmf;  // empirical symbol pmf of the matched output
    double kl = 0.0;  // D(y_pmf || target) in bits
    double wall_time_ms = 0.0;
};

/// The coding matrix of an experiment at rate R.
std::unique_ptr<SensingOperator> make_operator(const ExperimentConfig& cfg, double rate, std::uint64_t seed);

/// Runs cfg.trials trials at cfg.rate. Records come back in trial order and
/// do not depend on the worker count. When `traces` is given it receives the
/// GAMP result of every trial.
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, std::vector<GampResult>* traces = nullptr);

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool include_timing = false);

struct SweepPoint {
    double rate = 0.0;
    double realized_rate = 0.0;
    std::size_t rows = 0;
    std::size_t trials = 0;
    double damping = 1.0;
    double mean_ser = 0.0;
    double median_ser = 0.0;
    double success_fraction = 0.0;  // share of trials with SER below cfg.success_ser
    double mean_mse = 0.0;
    double se_fixed_point = 0.0;  // SE fixed point at this rate
    double se_ser = 0.0;  // SE-predicted SER at the fixed point
};

struct SweepResult {
    std::vector<SweepPoint> points;
    /// Largest grid rate up to which every grid point has a majority of
    /// successful trials; 0 when the first point already fails.
    double empirical_threshold = 0.0;
};

/// run_trials over cfg.rate_grid() (sorted ascending) with the SE column
/// evaluated for the same target and B.
SweepResult sweep_rates(const ExperimentConfig& cfg);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// Long-format report row: metric name, operator, B, dimensions, rate, value.
struct ReportRow {
    std::string metric;
    std::string op;
    std::size_t section_size = 0;
    std::size_t cols = 0;
    std::size_t rows = 0;
    double rate = 0.0;
    double value = 0.0;
};

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

/// For every B in cfg.section_sizes: sweeps of the uncoupled Gaussian and
/// the coupled operator with equal total dimensions. The coupled sweep runs
/// GAMP with cfg.coupled_damping (`damping` rows). Reports success
/// fractions per rate (`success_fraction`, realized rate in `rate`),
/// empirical thresholds (`threshold`) and their gaps to the target entropy
/// (`entropy_gap`).
std::vector<ReportRow> coupled_vs_uncoupled(const ExperimentConfig& cfg);

/// Gaussian versus Hadamard sweeps at cfg's dimensions: success fractions,
/// thresholds, the relative threshold shift (`threshold_shift`), the total
/// variation of the matched symbol pmf against the target (`symbol_tv`) and
/// of the codeword marginal against N(0,1) over 16 equiprobable bins
/// (`z_tv`).
std::vector<ReportRow> hadamard_report(const ExperimentConfig& cfg);

struct TimingRow {
    std::string op;
    std::size_t cols = 0;
    std::size_t rows = 0;
    double seconds = 0.0;  // median forward product time
};

/// Forward-product timing of dense Gaussian and Hadamard operators for each
/// N with M = N / 2 (L = N / B). Timing is not reproducible, so it is kept
/// apart from the deterministic reports.
std::vector<TimingRow> time_forward_products(const std::vector<std::size_t>& dims, std::size_t section_size,
                                             std::size_t repeats, std::uint64_t seed);

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

/// Total variation between the empirical marginal of z and N(0, 1) over
/// `bins` equiprobable bins.
double gaussian_marginal_tv(const std::vector<double>& z, std::size_t bins);

} // namespace ssdm
