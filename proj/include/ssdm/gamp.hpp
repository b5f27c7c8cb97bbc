#pragma once

// GAMP dematcher for the quantizer channel.
//
// Iteration (componentwise operations throughout):
//   eta = F∘2 sigma,  p = F shat - eta x_prev,
//   x = g_out(p, y, eta),  zeta = f_out(p, y, eta),
//   tau = 1 / ((F∘2)^T zeta),  r = shat + tau (F^T x),
//   shat = g_in(r, tau) per section,  sigma = shat - shat^2.
// Initialization: shat = 0, sigma = 1/B, x_prev = 0.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ssdm/matcher.hpp"
#include "ssdm/operators.hpp"
#include "ssdm/pm_codec.hpp"

namespace ssdm {

struct GampConfig {
    std::size_t t_max = 100;
    /// Early exit once the estimated per-section MSE moves by less than this,
    /// or falls below it.
    double convergence_tol = 1e-8;
    /// shat <- damping * g_in + (1 - damping) * shat. 1 disables damping.
    double damping = 1.0;
    /// Start from the prior mean shat = 1/B instead of shat = 0.
    bool prior_mean_init = false;
    /// Lower bound on eta. Without it a decoded region drives eta far below
    /// the spacing of the outputs around the quantizer thresholds, every
    /// f_out there vanishes and the region falls back to the prior.
    double eta_floor = 1e-6;

    void validate() const;
};

struct GampState {
    SectionLayout layout;
    std::vector<double> shat, sigma;  // length N
    std::vector<double> x_prev, eta, p, zeta;  // length M
    std::vector<double> tau, r;  // length N
    std::size_t iteration = 0;

    /// sum(sigma) / L, the posterior estimate of the per-section MSE.
    double estimated_mse() const;
};

/// Row count M, layout from the operator (B = cols / sections).
GampState gamp_initial_state(const SensingOperator& op, const GampConfig& cfg);

/// Advances every state by one iteration; states[k] observes ys[k]. All
/// states share `op`, so one pass over the operator serves the whole batch.
/// Sections whose every Fisher weight underflows (tau = inf) keep their
/// estimate. Throws NumericalError on any other non-finite intermediate.
void gamp_step(std::span<GampState* const> states, std::span<const TargetSequence* const> ys,
               const SensingOperator& op, const TargetDistribution& target, const GampConfig& cfg);

void gamp_step(GampState& state, const TargetSequence& y, const SensingOperator& op,
               const TargetDistribution& target, const GampConfig& cfg);

struct GampIteration {
    std::size_t iteration = 0;
    double mse = 0.0;  // against the true signal, NaN when it is unknown
    double ser = 0.0;  // after hard decision, NaN when the truth is unknown
    double estimated_mse = 0.0;
    double wall_time_ms = 0.0;  // since the start of the run
};

struct GampResult {
    SoftSignal shat;
    std::vector<GampIteration> trace;
    bool converged = false;

    std::size_t iterations() const noexcept { return trace.size(); }
};

/// Runs to t_max or until the estimated MSE change drops below the
/// tolerance. `truth`, when given, only feeds the diagnostics trace.
GampResult gamp_dematch(const TargetSequence& y, const SensingOperator& op, const TargetDistribution& target,
                        const GampConfig& cfg, const SparseSignal* truth = nullptr);

/// Independent runs over a shared operator, advanced in lock step. Runs that
/// stop early drop out of later products. `truths` is empty or one per run.
std::vector<GampResult> gamp_dematch_batch(std::span<const TargetSequence> ys, const SensingOperator& op,
                                           const TargetDistribution& target, const GampConfig& cfg,
                                           std::span<const SparseSignal> truths = {});

/// CSV header "iteration,mse,ser,estimated_mse" plus one row per iteration.
/// `include_timing` appends a wall_time_ms column, which is not reproducible.
void write_trace_csv(std::ostream& out, const GampResult& result, bool include_timing = false);

} // namespace ssdm
