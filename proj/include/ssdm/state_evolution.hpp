#pragma once

// Scalar state evolution for GAMP over i.i.d. N(0, 1/L) matrices.
//
// With per-section MSE E, the pre-quantization estimate is p ~ N(0, 1 - E)
// and the effective output noise is eta = E. The output side yields the
// effective denoiser noise
//   tau(E) = R / (log2(B) * I(E)),   I(E) = E_p[ sum_k m_k g_k^2 ],
// where m_k and g_k are the symbol likelihood and g_out at (p, eta = E).
// The input side maps tau to the sectionwise MMSE of the one-hot denoiser.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssdm/matcher.hpp"

namespace ssdm {

struct SeConfig {
    std::size_t mc_samples = 50000;  // one-hot sections drawn for the input side
    std::size_t max_iters = 20000;
    double fp_tol = 1e-10;  // stop once |E_t - E_{t-1}| drops below this
    double success_threshold = 1e-6;  // E below this counts as vanishing error
    std::uint64_t seed = 1;

    void validate() const;
};

struct SeState {
    std::vector<double> mse;  // E^0 = 1, E^1, ...
    std::vector<double> tau;  // tau[t] produced E^{t+1}
    std::vector<double> predicted_ser;  // predicted_ser[t] pairs with E^{t+1}
    bool converged = false;  // stopped by the tolerance or the success threshold
    bool success = false;  // fixed point below the success threshold
    double fixed_point = 1.0;

    std::size_t iterations() const noexcept { return tau.size(); }
};

/// Recursion for one (target, B) pair. The Monte Carlo draws are fixed at
/// construction, so every evaluation is a deterministic function of E.
class StateEvolution {
public:
    StateEvolution(TargetDistribution target, std::size_t section_size, SeConfig cfg = {});

    const TargetDistribution& target() const noexcept { return target_; }
    std::size_t section_size() const noexcept { return B_; }
    const SeConfig& config() const noexcept { return cfg_; }

    /// I(E) for E in (0, 1]; +inf at E = 0.
    double fisher_information(double E) const;

    /// Effective denoiser noise after an output side at MSE E and rate R.
    double effective_noise(double E, double rate) const;

    /// Sectionwise MMSE of the one-hot denoiser at noise tau (0 at tau = 0).
    double section_mmse(double tau) const;

    /// Probability that the argmax of r = s + sqrt(tau) xi misses the true
    /// position.
    double section_error_probability(double tau) const;

    double step(double E, double rate) const;
    SeState trajectory(double rate) const;

    /// Bisection to `tol` on the largest rate with a successful fixed point.
    /// Throws MalformedInput unless r_lo succeeds and r_hi fails.
    double find_threshold(double r_lo, double r_hi, double tol = 1e-3) const;

private:
    TargetDistribution target_;
    std::size_t B_;
    SeConfig cfg_;
    std::vector<double> noise_;  // mc_samples x B standard normals, unused for B = 2
};

double se_step(double E, double rate, std::size_t section_size, const TargetDistribution& target,
               const SeConfig& cfg = {});
SeState se_trajectory(double rate, std::size_t section_size, const TargetDistribution& target,
                      const SeConfig& cfg = {});
double find_r_gamp(std::size_t section_size, const TargetDistribution& target, const SeConfig& cfg, double r_lo,
                   double r_hi);

struct ThresholdRow {
    std::size_t section_size;
    std::string target_id;
    double r_gamp;
    double fp_tol;
    std::size_t mc_samples;
};

/// CSV with header "B,target,r_gamp,fp_tol,mc_samples".
void write_threshold_csv(std::ostream& out, const std::vector<ThresholdRow>& rows);

/// CSV with header "iteration,mse,tau,predicted_ser".
void write_trajectory_csv(std::ostream& out, const SeState& state);

} // namespace ssdm
