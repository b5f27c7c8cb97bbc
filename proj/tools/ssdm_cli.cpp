// Command-line front end. Every subcommand reads an optional JSON config,
// applies flag overrides and writes CSV to --out (or stdout).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ssdm/config.hpp"
#include "ssdm/csv.hpp"
#include "ssdm/errors.hpp"
#include "ssdm/harness.hpp"
#include "ssdm/state_evolution.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<double> rate;
    std::optional<std::size_t> section_size;
    std::optional<std::size_t> sections;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> op;
    std::optional<std::size_t> workers;
    std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--rate", o.rate, "Code rate R in bits per symbol");
    cmd->add_option("--section-size", o.section_size, "Section size B (power of two)");
    cmd->add_option("--sections", o.sections, "Number of sections L");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials");
    cmd->add_option("--seed", o.seed, "Base seed");
    cmd->add_option("--operator", o.op, "gaussian, hadamard or coupled")
        ->check(CLI::IsMember({"gaussian", "hadamard", "coupled"}));
    cmd->add_option("--workers", o.workers, "Worker threads (default: SSDM_WORKERS or all cores)");
    cmd->add_option("--out", o.out, "Output CSV path (default: stdout)");
}

ssdm::ExperimentConfig resolve(const Overrides& o) {
    ssdm::ExperimentConfig cfg = o.config.empty() ? ssdm::ExperimentConfig{} : ssdm::load_config(o.config);
    if (o.rate) {
        cfg.rate = *o.rate;
        cfg.rates.clear();
    }
    if (o.section_size) cfg.section_size = *o.section_size;
    if (o.sections) cfg.sections = *o.sections;
    if (o.trials) cfg.trials = *o.trials;
    if (o.seed) cfg.seed = *o.seed;
    if (o.op) cfg.op = ssdm::parse_operator_kind(*o.op);
    if (o.workers) cfg.workers = *o.workers;
    cfg.validate();
    return cfg;
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ssdm::MalformedInput("cannot open output file " + path);
    write(out);
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::string json_escape(const std::string& s) {
    std::string r;
    for (char c : s) {
        if (c == '"' || c == '\\') r += '\\';
        if (c == '\n') {
            r += "\\n";
            continue;
        }
        r += c;
    }
    return r;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse superposition distribution matching and GAMP dematching"};
    app.require_subcommand(1);

    Overrides o;
    bool timing = false;
    std::string trace_out, timing_out;
    std::size_t timing_repeats = 3;

    auto* match = app.add_subcommand("match", "Match random messages; report output symbol statistics");
    add_common(match, o);

    auto* dematch = app.add_subcommand("dematch", "Match and dematch; one record per trial");
    add_common(dematch, o);
    dematch->add_flag("--timing", timing, "Append wall-clock columns (breaks reproducibility)");
    dematch->add_option("--trace-out", trace_out, "Per-iteration trace of trial 0 as CSV");

    auto* se = app.add_subcommand("se", "State-evolution trajectory, or thresholds with --threshold");
    add_common(se, o);
    bool threshold = false;
    double r_lo = 0.05, r_hi = 0.0;
    se->add_flag("--threshold", threshold, "Bisect for the algorithmic rate");
    se->add_option("--r-lo", r_lo, "Lower bracket (must succeed)");
    se->add_option("--r-hi", r_hi, "Upper bracket (must fail; default: the target entropy)");

    auto* sweep = app.add_subcommand("sweep", "Empirical and SE phase transition over the rate grid");
    add_common(sweep, o);

    auto* coupled = app.add_subcommand("coupled", "Coupled versus uncoupled thresholds");
    add_common(coupled, o);

    auto* hadamard = app.add_subcommand("hadamard", "Hadamard versus Gaussian report");
    add_common(hadamard, o);
    hadamard->add_option("--timing-out", timing_out, "Forward-product timing CSV (N = 2^12 .. 2^16)");
    hadamard->add_option("--timing-repeats", timing_repeats, "Products timed per size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) std::cerr << "{\"error\":\"usage\",\"message\":\"" << json_escape(e.what()) << "\"}\n";
        return code;
    }

    try {
        const ssdm::ExperimentConfig cfg = resolve(o);
        if (match->parsed()) {
            ssdm::ExperimentConfig at = cfg;
            at.gamp.t_max = 1;
            std::vector<ssdm::TrialRecord> rows;
            for (double rate : cfg.rate_grid()) {
                at.rate = rate;
                for (std::size_t i = 0; i < cfg.trials; ++i) {
                    const auto op = ssdm::make_operator(at, rate, ssdm::derive_seed(cfg.seed + i, 2));
                    ssdm::Rng rng(ssdm::derive_seed(cfg.seed + i, 1));
                    const auto result = ssdm::match(ssdm::random_message(at.layout(), rng), *op, at.target);
                    ssdm::TrialRecord r;
                    r.trial = i;
                    r.seed = cfg.seed + i;
                    r.rate = rate;
                    r.realized_rate = ssdm::code_rate(at.layout(), op->rows());
                    r.section_size = at.section_size;
                    r.sections = at.sections;
                    r.rows = op->rows();
                    r.op = at.op;
                    r.y_pmf = ssdm::empirical_pmf(result.y, at.target.size());
                    r.kl = ssdm::kl_divergence(r.y_pmf, at.target.pmf());
                    r.ser = ssdm::total_variation(r.y_pmf, at.target.pmf());
                    rows.push_back(std::move(r));
                }
            }
            emit(o.out, [&](std::ostream& out) {
                ssdm::CsvWriter csv(out);
                csv.row("trial", "seed", "rate", "realized_rate", "B", "L", "M", "operator", "kl_bits", "tv");
                for (const auto& r : rows)
                    csv.row(r.trial, r.seed, r.rate, r.realized_rate, r.section_size, r.sections, r.rows,
                            ssdm::to_string(r.op), r.kl, r.ser);
            });
        } else if (dematch->parsed()) {
            std::vector<ssdm::GampResult> traces;
            const auto records = ssdm::run_trials(cfg, trace_out.empty() ? nullptr : &traces);
            emit(o.out, [&](std::ostream& out) { ssdm::write_trials_csv(out, records, timing); });
            if (!trace_out.empty())
                emit(trace_out, [&](std::ostream& out) { ssdm::write_trace_csv(out, traces.front(), timing); });
        } else if (se->parsed()) {
            const ssdm::StateEvolution evo(cfg.target, cfg.section_size, cfg.se);
            if (threshold) {
                const double hi = r_hi > 0.0 ? r_hi : ssdm::entropy(cfg.target);
                const double r = evo.find_threshold(r_lo, hi);
                emit(o.out, [&](std::ostream& out) {
                    ssdm::write_threshold_csv(
                        out, {{cfg.section_size, cfg.target_id, r, cfg.se.fp_tol, cfg.se.mc_samples}});
                });
            } else {
                const auto traj = evo.trajectory(cfg.rate);
                emit(o.out, [&](std::ostream& out) { ssdm::write_trajectory_csv(out, traj); });
            }
        } else if (sweep->parsed()) {
            const auto result = ssdm::sweep_rates(cfg);
            emit(o.out, [&](std::ostream& out) { ssdm::write_sweep_csv(out, result); });
        } else if (coupled->parsed()) {
            const auto rows = ssdm::coupled_vs_uncoupled(cfg);
            emit(o.out, [&](std::ostream& out) { ssdm::write_report_csv(out, rows); });
        } else if (hadamard->parsed()) {
            const auto rows = ssdm::hadamard_report(cfg);
            emit(o.out, [&](std::ostream& out) { ssdm::write_report_csv(out, rows); });
            if (!timing_out.empty()) {
                const auto t = ssdm::time_forward_products({1u << 12, 1u << 14, 1u << 16}, cfg.section_size,
                                                           timing_repeats, cfg.seed);
                emit(timing_out, [&](std::ostream& out) { ssdm::write_timing_csv(out, t); });
            }
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "{\"error\":\"invalid_input\",\"message\":\"" << json_escape(e.what()) << "\"}\n";
        return 2;
    } catch (const ssdm::NumericalError& e) {
        std::cerr << "{\"error\":\"numerical\",\"iteration\":" << e.iteration() << ",\"message\":\""
                  << json_escape(e.what()) << "\"}\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"runtime\",\"message\":\"" << json_escape(e.what()) << "\"}\n";
        return 1;
    }
    return 0;
}
