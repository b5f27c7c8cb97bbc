#include "ssdm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "ssdm/csv.hpp"
#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"
#include "ssdm/random.hpp"

namespace ssdm {

namespace {

constexpr std::uint64_t kMessageStream = 1;
constexpr std::uint64_t kOperatorStream = 2;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs body(i) for i in [0, count) on up to `workers` threads; rethrows the
// first exception.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct Instance {
    SourceMessage message;
    SparseSignal signal;
    TargetSequence y;
};

// Messages and matched outputs of trials [first, first + count), with one
// batched pass over the operator.
std::vector<Instance> match_batch(const ExperimentConfig& cfg, const SensingOperator& op, std::size_t first,
                                  std::size_t count) {
    const SectionLayout layout = cfg.layout();
    const std::size_t N = layout.dimension(), M = op.rows();
    std::vector<Instance> out;
    std::vector<double> dense(N * count), z(M * count);
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng(derive_seed(cfg.seed + first + k, kMessageStream));
        SourceMessage u = random_message(layout, rng);
        SparseSignal s = pm_encode(u);
        for (std::uint32_t l = 0; l < layout.num_sections; ++l)
            dense[k * N + l * layout.section_size + s.positions()[l]] = 1.0;
        out.push_back({std::move(u), std::move(s), {}});
    }
    op.forward_pair(dense, {}, z, {}, count);
    for (std::size_t k = 0; k < count; ++k)
        out[k].y = quantize(std::span<const double>(z).subspan(k * M, M), cfg.target);
    return out;
}

TrialRecord make_record(const ExperimentConfig& cfg, const SensingOperator& op, std::size_t trial,
                        const Instance& inst, const GampResult& res, double wall_ms) {
    TrialRecord r;
    r.trial = trial;
    r.seed = cfg.seed + trial;
    r.rate = cfg.rate;
    r.realized_rate = code_rate(cfg.layout(), op.rows());
    r.section_size = cfg.section_size;
    r.sections = cfg.sections;
    r.rows = op.rows();
    r.op = cfg.op;
    r.damping = cfg.gamp.damping;
    r.ser = section_error_rate(hard_decision(res.shat), inst.signal);
    r.mse = section_mse(res.shat, inst.signal);
    r.estimated_mse = res.trace.empty() ? 1.0 : res.trace.back().estimated_mse;
    r.iterations = res.iterations();
    r.converged = res.converged;
    r.y_pmf = empirical_pmf(inst.y, cfg.target.size());
    r.kl = kl_divergence(r.y_pmf, cfg.target.pmf());
    r.wall_time_ms = wall_ms;
    return r;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::unique_ptr<SensingOperator> make_operator(const ExperimentConfig& cfg, double rate, std::uint64_t seed) {
    const SectionLayout layout = cfg.layout();
    layout.validate();
    switch (cfg.op) {
    case OperatorKind::DenseGaussian:
        return make_gaussian(rows_for_rate(layout, rate), layout.dimension(), layout.num_sections, seed);
    case OperatorKind::Hadamard:
        return make_hadamard(rows_for_rate(layout, rate), layout.dimension(), layout.num_sections, seed);
    case OperatorKind::SpatiallyCoupled: {
        const CouplingParams& c = cfg.coupling;
        c.validate();
        if (layout.num_sections % c.block_cols != 0)
            throw MalformedInput("sections must be a multiple of coupling.block_cols");
        const std::size_t L_block = layout.num_sections / c.block_cols;
        // Total rows (Lr - 1 + beta) M_block carry the L log2(B) message bits.
        const double span = static_cast<double>(c.block_rows) - 1.0 + c.seed_rate;
        const double m_block = static_cast<double>(layout.message_bits()) / (rate * span);
        const auto M_block = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m_block - 1e-9)));
        return make_coupled(c, M_block, L_block * layout.section_size, L_block, seed);
    }
    case OperatorKind::Explicit: break;
    }
    throw MalformedInput("experiments cannot use the explicit operator kind");
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, std::vector<GampResult>* traces) {
    cfg.validate();
    const std::size_t K = cfg.trials;
    const std::size_t workers = resolve_workers(cfg.workers);
    std::vector<TrialRecord> records(K);
    std::vector<GampResult> results(traces ? K : 0);

    if (cfg.share_operator) {
        const auto op = make_operator(cfg, cfg.rate, derive_seed(cfg.seed, kOperatorStream));
        // Contiguous chunks, one per worker, each advanced as one batch.
        const std::size_t chunks = std::max<std::size_t>(1, std::min(workers, K));
        parallel_for(chunks, chunks, [&](std::size_t c) {
            const std::size_t first = c * K / chunks, last = (c + 1) * K / chunks;
            const auto start = Clock::now();
            const auto inst = match_batch(cfg, *op, first, last - first);
            std::vector<TargetSequence> ys;
            std::vector<SparseSignal> truths;
            for (const auto& in : inst) {
                ys.push_back(in.y);
                truths.push_back(in.signal);
            }
            auto res = gamp_dematch_batch(ys, *op, cfg.target, cfg.gamp, truths);
            const double wall = elapsed_ms(start);
            for (std::size_t k = 0; k < inst.size(); ++k) {
                records[first + k] = make_record(cfg, *op, first + k, inst[k], res[k], wall);
                if (traces) results[first + k] = std::move(res[k]);
            }
        });
    } else {
        parallel_for(K, workers, [&](std::size_t i) {
            const auto start = Clock::now();
            const auto op = make_operator(cfg, cfg.rate, derive_seed(cfg.seed + i, kOperatorStream));
            const auto inst = match_batch(cfg, *op, i, 1);
            auto res = gamp_dematch(inst[0].y, *op, cfg.target, cfg.gamp, &inst[0].signal);
            records[i] = make_record(cfg, *op, i, inst[0], res, elapsed_ms(start));
            if (traces) results[i] = std::move(res);
        });
    }
    if (traces) *traces = std::move(results);
    return records;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool include_timing) {
    CsvWriter csv(out);
    std::size_t q = records.empty() ? 0 : records.front().y_pmf.size();
    std::vector<std::string> header{"trial", "seed", "rate",     "realized_rate", "B",  "L",
                                    "M",     "operator", "damping", "ser",     "mse",
                                    "estimated_mse",  "iterations",   "converged",     "kl_bits"};
    for (std::size_t k = 0; k < q; ++k) header.push_back("y_pmf_" + std::to_string(k));
    if (include_timing) header.push_back("wall_time_ms");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << CsvWriter::escape(header[i]);
    out << '\n';
    for (const TrialRecord& r : records) {
        out << r.trial << ',' << r.seed << ',' << CsvWriter::format(r.rate) << ','
            << CsvWriter::format(r.realized_rate) << ',' << r.section_size << ',' << r.sections << ',' << r.rows
            << ',' << to_string(r.op) << ',' << CsvWriter::format(r.damping) << ',' << CsvWriter::format(r.ser) << ',' << CsvWriter::format(r.mse) << ','
            << CsvWriter::format(r.estimated_mse) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
            << CsvWriter::format(r.kl);
        for (double p : r.y_pmf) out << ',' << CsvWriter::format(p);
        if (include_timing) out << ',' << CsvWriter::format(r.wall_time_ms);
        out << '\n';
    }
}

SweepResult sweep_rates(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<double> grid = cfg.rate_grid();
    std::sort(grid.begin(), grid.end());
    const StateEvolution se(cfg.target, cfg.section_size, cfg.se);
    SweepResult sweep;
    bool intact = true;
    for (double rate : grid) {
        ExperimentConfig at = cfg;
        at.rate = rate;
        const auto records = run_trials(at);
        SweepPoint pt;
        pt.rate = rate;
        pt.realized_rate = records.front().realized_rate;
        pt.rows = records.front().rows;
        pt.trials = records.size();
        pt.damping = cfg.gamp.damping;
        std::vector<double> sers;
        std::size_t wins = 0;
        for (const auto& r : records) {
            sers.push_back(r.ser);
            pt.mean_ser += r.ser;
            pt.mean_mse += r.mse;
            if (r.ser < cfg.success_ser) ++wins;
        }
        pt.mean_ser /= static_cast<double>(records.size());
        pt.mean_mse /= static_cast<double>(records.size());
        pt.median_ser = median(sers);
        pt.success_fraction = static_cast<double>(wins) / static_cast<double>(records.size());
        const SeState traj = se.trajectory(rate);
        pt.se_fixed_point = traj.fixed_point;
        pt.se_ser = traj.predicted_ser.empty() ? 1.0 : traj.predicted_ser.back();
        intact = intact && 2 * wins > records.size();
        if (intact) sweep.empirical_threshold = pt.realized_rate;
        sweep.points.push_back(pt);
    }
    return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    CsvWriter csv(out);
    csv.row("rate", "realized_rate", "M", "trials", "damping", "mean_ser", "median_ser", "success_fraction", "mean_mse",
            "se_fixed_point", "se_ser");
    for (const SweepPoint& p : sweep.points)
        csv.row(p.rate, p.realized_rate, p.rows, p.trials, p.damping, p.mean_ser, p.median_ser, p.success_fraction, p.mean_mse,
                p.se_fixed_point, p.se_ser);
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    CsvWriter csv(out);
    csv.row("metric", "operator", "B", "N", "M", "rate", "value");
    for (const ReportRow& r : rows) csv.row(r.metric, r.op, r.section_size, r.cols, r.rows, r.rate, r.value);
}

namespace {

void append_sweep(std::vector<ReportRow>& rows, const ExperimentConfig& cfg, const SweepResult& sweep) {
    const std::string name = to_string(cfg.op);
    const std::size_t N = cfg.layout().dimension();
    for (const SweepPoint& p : sweep.points) {
        rows.push_back({"success_fraction", name, cfg.section_size, N, p.rows, p.realized_rate, p.success_fraction});
        rows.push_back({"mean_ser", name, cfg.section_size, N, p.rows, p.realized_rate, p.mean_ser});
    }
    rows.push_back({"threshold", name, cfg.section_size, N, 0, 0.0, sweep.empirical_threshold});
}

} // namespace

std::vector<ReportRow> coupled_vs_uncoupled(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> sizes = cfg.section_sizes.empty() ? std::vector<std::size_t>{cfg.section_size}
                                                               : cfg.section_sizes;
    const double H = entropy(cfg.target);
    std::vector<ReportRow> rows;
    for (std::size_t B : sizes) {
        ExperimentConfig base = cfg;
        base.section_size = B;
        base.section_sizes.clear();
        for (OperatorKind kind : {OperatorKind::DenseGaussian, OperatorKind::SpatiallyCoupled}) {
            ExperimentConfig at = base;
            at.op = kind;
            if (kind == OperatorKind::SpatiallyCoupled) at.gamp.damping = cfg.coupled_damping;
            at.validate();
            rows.push_back({"damping", to_string(kind), B, at.layout().dimension(), 0, 0.0, at.gamp.damping});
            const SweepResult sweep = sweep_rates(at);
            append_sweep(rows, at, sweep);
            rows.push_back({"entropy_gap", to_string(kind), B, at.layout().dimension(), 0, 0.0,
                            H - sweep.empirical_threshold});
        }
    }
    return rows;
}

double gaussian_marginal_tv(const std::vector<double>& z, std::size_t bins) {
    if (bins < 2) throw MalformedInput("need at least two bins");
    if (z.empty()) throw MalformedInput("empty sample");
    std::vector<double> edges;
    for (std::size_t b = 1; b < bins; ++b) edges.push_back(gauss::cdf_inverse(static_cast<double>(b) / bins));
    std::vector<double> counts(bins, 0.0);
    for (double v : z) counts[std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()] += 1.0;
    double tv = 0.0;
    for (double c : counts) tv += std::abs(c / static_cast<double>(z.size()) - 1.0 / static_cast<double>(bins));
    return 0.5 * tv;
}

std::vector<ReportRow> hadamard_report(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ReportRow> rows;
    double thresholds[2] = {0.0, 0.0};
    const OperatorKind kinds[2] = {OperatorKind::DenseGaussian, OperatorKind::Hadamard};
    for (int i = 0; i < 2; ++i) {
        ExperimentConfig at = cfg;
        at.op = kinds[i];
        const SweepResult sweep = sweep_rates(at);
        append_sweep(rows, at, sweep);
        thresholds[i] = sweep.empirical_threshold;

        // Marginals of one matched codeword at the nominal rate.
        at.rate = cfg.rate;
        const auto op = make_operator(at, at.rate, derive_seed(at.seed, kOperatorStream));
        const auto inst = match_batch(at, *op, 0, 1);
        const std::vector<double> z = forward(*op, inst[0].signal.to_dense());
        const auto pmf = empirical_pmf(inst[0].y, at.target.size());
        const std::size_t N = at.layout().dimension();
        rows.push_back({"symbol_tv", to_string(at.op), at.section_size, N, op->rows(), cfg.rate,
                        total_variation(pmf, at.target.pmf())});
        rows.push_back({"z_tv", to_string(at.op), at.section_size, N, op->rows(), cfg.rate,
                        gaussian_marginal_tv(z, 16)});
    }
    const double shift = thresholds[0] > 0.0 ? (thresholds[1] - thresholds[0]) / thresholds[0]
                                             : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({"threshold_shift", "hadamard", cfg.section_size, cfg.layout().dimension(), 0, 0.0, shift});
    return rows;
}

std::vector<TimingRow> time_forward_products(const std::vector<std::size_t>& dims, std::size_t section_size,
                                             std::size_t repeats, std::uint64_t seed) {
    if (repeats < 1) throw MalformedInput("repeats must be positive");
    std::vector<TimingRow> rows;
    for (std::size_t N : dims) {
        const SectionLayout layout{section_size, N / section_size};
        layout.validate();
        if (layout.dimension() != N) throw MalformedInput("N must be a multiple of B");
        const std::size_t M = N / 2;
        Rng rng(seed);
        std::vector<double> v(N);
        for (double& x : v) x = rng.normal();
        std::vector<double> out(M);
        for (OperatorKind kind : {OperatorKind::DenseGaussian, OperatorKind::Hadamard}) {
            // Regenerate Gaussian entries on every product so both sizes pay
            // the same per-entry cost.
            std::unique_ptr<SensingOperator> op =
                kind == OperatorKind::Hadamard ? make_hadamard(M, N, layout.num_sections, seed)
                                               : make_gaussian(M, N, layout.num_sections, seed, StorageOptions{0});
            std::vector<double> times;
            for (std::size_t r = 0; r < repeats; ++r) {
                const auto start = Clock::now();
                op->forward_pair(v, {}, out, {}, 1);
                times.push_back(elapsed_ms(start) / 1000.0);
            }
            rows.push_back({to_string(kind), N, M, median(times)});
        }
    }
    return rows;
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
    CsvWriter csv(out);
    csv.row("operator", "N", "M", "seconds");
    for (const TimingRow& r : rows) csv.row(r.op, r.cols, r.rows, r.seconds);
}

} // namespace ssdm
