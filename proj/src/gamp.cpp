#include "ssdm/gamp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "ssdm/channel.hpp"
#include "ssdm/csv.hpp"
#include "ssdm/errors.hpp"

namespace ssdm {

namespace {

SectionLayout layout_of(const SensingOperator& op) {
    if (op.sections() == 0 || op.cols() % op.sections() != 0)
        throw DimensionMismatch("operator width is not a multiple of its section count");
    SectionLayout layout{op.cols() / op.sections(), op.sections()};
    layout.validate();
    return layout;
}

void require_finite(double v, const char* what, std::size_t iteration) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what, iteration);
}

} // namespace

void GampConfig::validate() const {
    if (t_max < 1) throw MalformedInput("t_max must be at least 1");
    if (!(convergence_tol >= 0.0)) throw MalformedInput("convergence_tol must be nonnegative");
    if (!(damping > 0.0 && damping <= 1.0)) throw MalformedInput("damping must lie in (0, 1]");
    if (!(eta_floor > 0.0) || !std::isfinite(eta_floor)) throw MalformedInput("eta_floor must be positive");
}

double GampState::estimated_mse() const {
    double total = 0.0;
    for (double s : sigma) total += s;
    return total / static_cast<double>(layout.num_sections);
}

GampState gamp_initial_state(const SensingOperator& op, const GampConfig& cfg) {
    cfg.validate();
    GampState st;
    st.layout = layout_of(op);
    const std::size_t N = op.cols(), M = op.rows();
    const double b_inv = 1.0 / static_cast<double>(st.layout.section_size);
    st.shat.assign(N, cfg.prior_mean_init ? b_inv : 0.0);
    st.sigma.assign(N, b_inv);
    if (cfg.prior_mean_init) {
        for (double& s : st.sigma) s = b_inv - b_inv * b_inv;
    }
    st.x_prev.assign(M, 0.0);
    st.eta.assign(M, 0.0);
    st.p.assign(M, 0.0);
    st.zeta.assign(M, 0.0);
    st.tau.assign(N, 0.0);
    st.r.assign(N, 0.0);
    return st;
}

void gamp_step(std::span<GampState* const> states, std::span<const TargetSequence* const> ys,
               const SensingOperator& op, const TargetDistribution& target, const GampConfig& cfg) {
    const std::size_t K = states.size();
    if (ys.size() != K) throw DimensionMismatch("one target sequence per state is required");
    if (K == 0) return;
    const std::size_t M = op.rows(), N = op.cols();
    for (std::size_t k = 0; k < K; ++k) {
        if (ys[k]->size() != M) throw DimensionMismatch("target sequence length differs from the operator rows");
        if (states[k]->shat.size() != N || states[k]->x_prev.size() != M)
            throw DimensionMismatch("state does not match the operator");
        for (std::uint16_t s : ys[k]->symbols)
            if (s >= target.size()) throw MalformedInput("target sequence holds a symbol outside the alphabet");
    }
    const std::size_t B = states[0]->layout.section_size;

    std::vector<double> lin_n(N * K), sq_n(N * K), lin_m(M * K), sq_m(M * K);
    for (std::size_t k = 0; k < K; ++k) {
        std::copy(states[k]->shat.begin(), states[k]->shat.end(), lin_n.begin() + k * N);
        std::copy(states[k]->sigma.begin(), states[k]->sigma.end(), sq_n.begin() + k * N);
    }
    op.forward_pair(lin_n, sq_n, lin_m, sq_m, K);

    for (std::size_t k = 0; k < K; ++k) {
        GampState& st = *states[k];
        const std::size_t t = st.iteration + 1;
        const auto& y = ys[k]->symbols;
        double* x = lin_m.data() + k * M;
        double* zeta = sq_m.data() + k * M;
        for (std::size_t j = 0; j < M; ++j) {
            const double eta = std::max(sq_m[k * M + j], cfg.eta_floor);
            const double p = lin_m[k * M + j] - eta * st.x_prev[j];
            require_finite(p, "p", t);
            const OutputMoments mo = output_moments(p, y[j], eta, target);
            require_finite(mo.g, "g_out", t);
            require_finite(mo.f, "f_out", t);
            st.eta[j] = eta;
            st.p[j] = p;
            st.zeta[j] = mo.f;
            st.x_prev[j] = mo.g;
            x[j] = mo.g;
            zeta[j] = mo.f;
        }
    }
    op.transpose_pair(lin_m, sq_m, lin_n, sq_n, K);

    std::vector<double> section(B);
    for (std::size_t k = 0; k < K; ++k) {
        GampState& st = *states[k];
        const std::size_t t = st.iteration + 1;
        for (std::size_t l = 0; l < st.layout.num_sections; ++l) {
            const std::size_t off = l * B;
            // Every Fisher weight reaching this section underflowed: the
            // iteration carries no information for it, so it keeps its estimate.
            bool silent = false;
            for (std::size_t b = 0; b < B; ++b) silent = silent || sq_n[k * N + off + b] == 0.0;
            if (silent) {
                for (std::size_t b = 0; b < B; ++b) {
                    st.tau[off + b] = std::numeric_limits<double>::infinity();
                    st.r[off + b] = st.shat[off + b];
                }
                continue;
            }
            for (std::size_t b = 0; b < B; ++b) {
                const std::size_t i = off + b;
                const double tau = 1.0 / sq_n[k * N + i];
                const double r = st.shat[i] + tau * lin_n[k * N + i];
                require_finite(tau, "tau", t);
                require_finite(r, "r", t);
                st.tau[i] = tau;
                st.r[i] = r;
            }
            g_in(std::span<const double>(st.r).subspan(off, B), std::span<const double>(st.tau).subspan(off, B),
                 section);
            for (std::size_t b = 0; b < B; ++b) {
                double& s = st.shat[off + b];
                s = cfg.damping == 1.0 ? section[b] : cfg.damping * section[b] + (1.0 - cfg.damping) * s;
                require_finite(s, "shat", t);
                st.sigma[off + b] = s - s * s;
            }
        }
        st.iteration = t;
    }
}

void gamp_step(GampState& state, const TargetSequence& y, const SensingOperator& op,
               const TargetDistribution& target, const GampConfig& cfg) {
    GampState* s = &state;
    const TargetSequence* py = &y;
    gamp_step(std::span<GampState* const>(&s, 1), std::span<const TargetSequence* const>(&py, 1), op, target,
              cfg);
}

std::vector<GampResult> gamp_dematch_batch(std::span<const TargetSequence> ys, const SensingOperator& op,
                                           const TargetDistribution& target, const GampConfig& cfg,
                                           std::span<const SparseSignal> truths) {
    cfg.validate();
    const std::size_t K = ys.size();
    if (!truths.empty() && truths.size() != K) throw DimensionMismatch("one truth per run is required");
    const SectionLayout layout = layout_of(op);
    for (const SparseSignal& s : truths)
        if (s.layout() != layout) throw DimensionMismatch("true signal layout differs from the operator");

    std::vector<GampState> states;
    states.reserve(K);
    for (std::size_t k = 0; k < K; ++k) states.push_back(gamp_initial_state(op, cfg));
    std::vector<GampResult> results(K);
    std::vector<double> last_mse(K);
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < K; ++k) {
        last_mse[k] = states[k].estimated_mse();
        active.push_back(k);
    }

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 1; t <= cfg.t_max && !active.empty(); ++t) {
        std::vector<GampState*> st;
        std::vector<const TargetSequence*> yy;
        for (std::size_t k : active) {
            st.push_back(&states[k]);
            yy.push_back(&ys[k]);
        }
        gamp_step(st, yy, op, target, cfg);
        const double elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

        std::vector<std::size_t> still;
        for (std::size_t k : active) {
            GampIteration it;
            it.iteration = t;
            it.estimated_mse = states[k].estimated_mse();
            it.wall_time_ms = elapsed;
            if (truths.empty()) {
                it.mse = it.ser = std::numeric_limits<double>::quiet_NaN();
            } else {
                SoftSignal soft{layout, states[k].shat};
                it.mse = section_mse(soft, truths[k]);
                it.ser = section_error_rate(hard_decision(soft), truths[k]);
            }
            results[k].trace.push_back(it);
            // Below the tolerance itself no change of that size is left.
            const bool done = it.estimated_mse < cfg.convergence_tol ||
                              std::abs(it.estimated_mse - last_mse[k]) < cfg.convergence_tol;
            last_mse[k] = it.estimated_mse;
            if (done)
                results[k].converged = true;
            else
                still.push_back(k);
        }
        active = std::move(still);
    }
    for (std::size_t k = 0; k < K; ++k) results[k].shat = SoftSignal{layout, std::move(states[k].shat)};
    return results;
}

GampResult gamp_dematch(const TargetSequence& y, const SensingOperator& op, const TargetDistribution& target,
                        const GampConfig& cfg, const SparseSignal* truth) {
    std::span<const SparseSignal> truths;
    if (truth != nullptr) truths = std::span<const SparseSignal>(truth, 1);
    auto results = gamp_dematch_batch(std::span<const TargetSequence>(&y, 1), op, target, cfg, truths);
    return std::move(results.front());
}

void write_trace_csv(std::ostream& out, const GampResult& result, bool include_timing) {
    CsvWriter csv(out);
    if (include_timing) {
        csv.row("iteration", "mse", "ser", "estimated_mse", "wall_time_ms");
        for (const GampIteration& it : result.trace)
            csv.row(it.iteration, it.mse, it.ser, it.estimated_mse, it.wall_time_ms);
        return;
    }
    csv.row("iteration", "mse", "ser", "estimated_mse");
    for (const GampIteration& it : result.trace) csv.row(it.iteration, it.mse, it.ser, it.estimated_mse);
}

} // namespace ssdm
