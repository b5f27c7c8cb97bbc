#include "ssdm/state_evolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <ostream>

#include "ssdm/channel.hpp"
#include "ssdm/csv.hpp"
#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"
#include "ssdm/random.hpp"

namespace ssdm {

namespace {

constexpr int kGaussOrder = 16;

struct GaussLegendre {
    std::array<double, kGaussOrder> x{}, w{};

    GaussLegendre() {
        // Newton iteration on P_n from the Chebyshev initial guesses.
        const int n = kGaussOrder;
        for (int i = 0; i < n; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 1; j <= n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

const GaussLegendre& gauss_legendre() {
    static const GaussLegendre rule;
    return rule;
}

// Composite rule over sorted, deduplicated breakpoints.
template <class F>
double integrate(std::vector<double> cuts, F&& f) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const GaussLegendre& gl = gauss_legendre();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double half = 0.5 * (cuts[i + 1] - cuts[i]);
        const double mid = 0.5 * (cuts[i + 1] + cuts[i]);
        if (half <= 0.0) continue;
        double part = 0.0;
        for (int k = 0; k < kGaussOrder; ++k) part += gl.w[k] * f(mid + half * gl.x[k]);
        total += half * part;
    }
    return total;
}

void add_uniform(std::vector<double>& cuts, double lo, double hi, int pieces) {
    for (int i = 0; i <= pieces; ++i) cuts.push_back(lo + (hi - lo) * i / pieces);
}

} // namespace

void SeConfig::validate() const {
    if (mc_samples < 1) throw MalformedInput("mc_samples must be positive");
    if (max_iters < 1) throw MalformedInput("max_iters must be positive");
    if (!(fp_tol >= 0.0)) throw MalformedInput("fp_tol must be nonnegative");
    if (!(success_threshold > 0.0 && success_threshold < 1.0))
        throw MalformedInput("success_threshold must lie in (0, 1)");
}

StateEvolution::StateEvolution(TargetDistribution target, std::size_t section_size, SeConfig cfg)
    : target_(std::move(target)), B_(section_size), cfg_(cfg) {
    SectionLayout{section_size, 1}.validate();
    cfg_.validate();
    if (B_ > 2) {
        Rng rng(derive_seed(cfg_.seed, 0x5345));
        noise_.resize(cfg_.mc_samples * B_);
        for (double& v : noise_) v = rng.normal();
    }
}

double StateEvolution::fisher_information(double E) const {
    if (!(E > 0.0)) return std::numeric_limits<double>::infinity();
    E = std::min(E, 1.0);
    const double s = std::sqrt(E);
    const std::size_t q = target_.size();
    auto integrand = [&](double p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            const double mass = gauss::interval_mass((target_.lower(k) - p) / s, (target_.upper(k) - p) / s);
            if (mass <= 0.0) continue;
            const double g = g_out(p, k, E, target_);
            acc += mass * g * g;
        }
        return acc;
    };
    if (E >= 1.0) return integrand(0.0);

    const double sd = std::sqrt(1.0 - E);
    const double lo = -9.0 * sd, hi = 9.0 * sd;
    std::vector<double> cuts;
    add_uniform(cuts, lo, hi, 40);
    for (std::size_t k = 1; k < q; ++k) {
        for (int j = -10; j <= 10; ++j) {
            const double c = target_.lower(k) + j * s;
            if (c > lo && c < hi) cuts.push_back(c);
        }
    }
    const double value = integrate(std::move(cuts), [&](double p) {
        return integrand(p) * gauss::pdf(p / sd) / sd;
    });
    if (!std::isfinite(value)) throw NumericalError("non-finite Fisher information at E = " + std::to_string(E), 0);
    return value;
}

double StateEvolution::effective_noise(double E, double rate) const {
    if (!(rate > 0.0)) throw MalformedInput("rate must be positive");
    if (!(E > 0.0)) return 0.0;
    return rate / (std::log2(static_cast<double>(B_)) * fisher_information(E));
}

double StateEvolution::section_mmse(double tau) const {
    if (!(tau > 0.0)) return 0.0;
    if (B_ == 2) {
        // Error mass 1 - shat_true = logistic(-u), u = 1/tau - sqrt(2/tau) zeta.
        const double a = std::sqrt(2.0 / tau);
        const double center = 1.0 / (a * tau);
        const double hi = std::max(12.0, std::min(center + 12.0, 80.0));
        std::vector<double> cuts;
        add_uniform(cuts, -12.0, hi, static_cast<int>(std::ceil((hi + 12.0) * 4.0)));
        const double width = 1.0 / a;
        for (int j = -30; j <= 30; ++j) {
            const double c = center + j * width;
            if (c > -12.0 && c < hi) cuts.push_back(c);
        }
        return integrate(std::move(cuts), [&](double z) {
            const double u = 1.0 / tau - a * z;
            return gauss::pdf(z) / (1.0 + std::exp(u));
        });
    }
    const double rs = 1.0 / std::sqrt(tau), inv = 1.0 / tau;
    double total = 0.0;
    for (std::size_t n = 0; n < cfg_.mc_samples; ++n) {
        const double* xi = noise_.data() + n * B_;
        // Log-weights relative to the true position 0.
        double top = 0.0;
        for (std::size_t j = 1; j < B_; ++j) top = std::max(top, (xi[j] - xi[0]) * rs - inv);
        double rest = 0.0;
        for (std::size_t j = 1; j < B_; ++j) rest += std::exp((xi[j] - xi[0]) * rs - inv - top);
        const double head = std::exp(-top);
        total += rest / (head + rest);
    }
    const double value = total / static_cast<double>(cfg_.mc_samples);
    if (!std::isfinite(value)) throw NumericalError("non-finite section MMSE at tau = " + std::to_string(tau), 0);
    return value;
}

double StateEvolution::section_error_probability(double tau) const {
    if (!(tau > 0.0)) return 0.0;
    const double shift = 1.0 / std::sqrt(tau);
    const double others = static_cast<double>(B_ - 1);
    std::vector<double> cuts;
    add_uniform(cuts, -12.0, 12.0, 96);
    return integrate(std::move(cuts), [&](double xi) {
        const double miss = -std::expm1(others * std::log1p(-gauss::q(shift + xi)));
        return gauss::pdf(xi) * miss;
    });
}

double StateEvolution::step(double E, double rate) const {
    if (!(E >= 0.0 && E <= 1.0)) throw MalformedInput("E must lie in [0, 1]");
    return section_mmse(effective_noise(E, rate));
}

SeState StateEvolution::trajectory(double rate) const {
    if (!(rate > 0.0)) throw MalformedInput("rate must be positive");
    SeState st;
    double E = 1.0;
    st.mse.push_back(E);
    for (std::size_t t = 0; t < cfg_.max_iters; ++t) {
        const double tau = effective_noise(E, rate);
        const double next = section_mmse(tau);
        st.tau.push_back(tau);
        st.predicted_ser.push_back(section_error_probability(tau));
        st.mse.push_back(next);
        const bool done = next < cfg_.success_threshold || std::abs(next - E) < cfg_.fp_tol;
        E = next;
        if (done) {
            st.converged = true;
            break;
        }
    }
    st.fixed_point = E;
    st.success = E < cfg_.success_threshold;
    return st;
}

double StateEvolution::find_threshold(double r_lo, double r_hi, double tol) const {
    if (!(r_lo > 0.0 && r_hi > r_lo)) throw MalformedInput("threshold bracket needs 0 < r_lo < r_hi");
    if (!(tol > 0.0)) throw MalformedInput("bisection tolerance must be positive");
    if (!trajectory(r_lo).success)
        throw MalformedInput("rate " + std::to_string(r_lo) + " does not succeed; widen the bracket downwards");
    if (trajectory(r_hi).success)
        throw MalformedInput("rate " + std::to_string(r_hi) + " still succeeds; widen the bracket upwards");
    while (r_hi - r_lo > tol) {
        const double mid = 0.5 * (r_lo + r_hi);
        (trajectory(mid).success ? r_lo : r_hi) = mid;
    }
    return 0.5 * (r_lo + r_hi);
}

double se_step(double E, double rate, std::size_t section_size, const TargetDistribution& target,
               const SeConfig& cfg) {
    return StateEvolution(target, section_size, cfg).step(E, rate);
}

SeState se_trajectory(double rate, std::size_t section_size, const TargetDistribution& target,
                      const SeConfig& cfg) {
    return StateEvolution(target, section_size, cfg).trajectory(rate);
}

double find_r_gamp(std::size_t section_size, const TargetDistribution& target, const SeConfig& cfg, double r_lo,
                   double r_hi) {
    return StateEvolution(target, section_size, cfg).find_threshold(r_lo, r_hi);
}

void write_threshold_csv(std::ostream& out, const std::vector<ThresholdRow>& rows) {
    CsvWriter csv(out);
    csv.row("B", "target", "r_gamp", "fp_tol", "mc_samples");
    for (const ThresholdRow& r : rows) csv.row(r.section_size, r.target_id, r.r_gamp, r.fp_tol, r.mc_samples);
}

void write_trajectory_csv(std::ostream& out, const SeState& state) {
    CsvWriter csv(out);
    csv.row("iteration", "mse", "tau", "predicted_ser");
    for (std::size_t t = 0; t < state.tau.size(); ++t)
        csv.row(t + 1, state.mse[t + 1], state.tau[t], state.predicted_ser[t]);
}

} // namespace ssdm
