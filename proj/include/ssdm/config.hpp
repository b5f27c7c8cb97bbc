#pragma once

// Experiment configuration, read from JSON. Every field is optional and falls
// back to the defaults below. Example:
//
//   {
//     "target": {"binary_p": 0.25},
//     "section_size": 4, "sections": 1024, "rate": 0.35,
//     "operator": "gaussian",
//     "trials": 20, "seed": 7,
//     "gamp": {"t_max": 100, "convergence_tol": 1e-8, "damping": 1.0},
//     "se": {"mc_samples": 50000},
//     "rates": [0.3, 0.35, 0.4], "coupled_damping": 0.9
//   }
//
// The target is one of {"binary_p": p}, {"alphabet": [...], "pmf": [...]},
// {"pairs": [[a, p], ...]} or {"file": "path"} (path relative to the config).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssdm/gamp.hpp"
#include "ssdm/matcher.hpp"
#include "ssdm/operators.hpp"
#include "ssdm/pm_codec.hpp"
#include "ssdm/state_evolution.hpp"

namespace ssdm {

struct ExperimentConfig {
    TargetDistribution target = binary_target(0.25);
    std::string target_id = "binary-0.25";
    std::size_t section_size = 4;
    std::size_t sections = 1024;  // L; for coupled operators the total over all block-columns
    double rate = 0.5;
    OperatorKind op = OperatorKind::DenseGaussian;
    CouplingParams coupling;
    GampConfig gamp;
    SeConfig se;
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    /// Rate grid for sweeps; empty means {rate}.
    std::vector<double> rates;
    /// Section sizes for the coupled comparison; empty means {section_size}.
    std::vector<std::size_t> section_sizes;
    /// All trials of a run use one coding matrix, drawn from the base seed.
    bool share_operator = false;
    /// GAMP damping of the coupled sweep in coupled_vs_uncoupled.
    double coupled_damping = 0.9;
    /// Trial counts as a success when its SER is below this.
    double success_ser = 1e-3;
    /// 0 selects SSDM_WORKERS or the hardware concurrency.
    std::size_t workers = 0;

    SectionLayout layout() const { return {section_size, sections}; }
    /// M = ceil(L log2(B) / R) for uncoupled operators.
    std::size_t num_rows() const;
    std::vector<double> rate_grid() const { return rates.empty() ? std::vector<double>{rate} : rates; }

    /// Throws MalformedInput on an inconsistent configuration.
    void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Rows for rate R: ceil(L log2(B) / R).
std::size_t rows_for_rate(const SectionLayout& layout, double rate);

/// Worker count: `requested` if nonzero, else SSDM_WORKERS, else the
/// hardware concurrency (at least 1).
std::size_t resolve_workers(std::size_t requested);

} // namespace ssdm
