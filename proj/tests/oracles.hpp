#pragma once
// Independent long double references for the channel functions: the interval
// likelihood from erfc, its derivatives by finite differences and from the
// closed form, and the one-hot posterior mean by enumeration.
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ssdm/matcher.hpp"

namespace oracle {

inline long double upper_tail(long double x) { return 0.5L * std::erfc(x / std::sqrt(2.0L)); }

inline long double density(long double x) {
    return std::exp(-0.5L * x * x) / std::sqrt(2.0L * 3.141592653589793238462643383279503L);
}

/// log P(lo < p + sqrt(eta) Z <= hi), computed on the side of the interval
/// that avoids cancellation.
inline long double log_mass(long double p, std::size_t k, long double eta, const ssdm::TargetDistribution& t) {
    const long double s = std::sqrt(eta);
    const double lo_c = t.lower(k), hi_c = t.upper(k);
    const long double a = std::isinf(lo_c) ? -std::numeric_limits<long double>::infinity() : (lo_c - p) / s;
    const long double b = std::isinf(hi_c) ? std::numeric_limits<long double>::infinity() : (hi_c - p) / s;
    if (a >= 0) return std::log(upper_tail(a) - upper_tail(b));
    if (b <= 0) return std::log(upper_tail(-b) - upper_tail(-a));
    return std::log1p(-(upper_tail(b) + upper_tail(-a)));
}

struct Derivatives {
    long double g, f;
    long double g_noise, f_noise;  // resolution of the difference quotients
};

/// Centered first and second differences of log m with step h.
inline Derivatives finite_differences(double p, std::size_t k, double eta, const ssdm::TargetDistribution& t,
                                      long double h = 1e-5L) {
    const long double lm = log_mass(p - h, k, eta, t), l0 = log_mass(p, k, eta, t), lp = log_mass(p + h, k, eta, t);
    const long double noise = 8.0L * std::numeric_limits<long double>::epsilon() * (1.0L + std::fabs(l0));
    return {(lp - lm) / (2 * h), -(lp - 2 * l0 + lm) / (h * h), noise / h, noise / (h * h)};
}

/// f_out from its closed form, for locating where the double result is
/// representable.
inline long double closed_form_f(double p, std::size_t k, double eta, const ssdm::TargetDistribution& t) {
    const long double s = std::sqrt(static_cast<long double>(eta));
    const double lo_c = t.lower(k), hi_c = t.upper(k);
    long double d1 = 0, d2 = 0;
    for (int side = 0; side < 2; ++side) {
        const double c = side == 0 ? lo_c : hi_c;
        if (std::isinf(c)) continue;
        const long double u = (c - p) / s;
        const long double q1 = density(u) / s, q2 = q1 * (c - p) / eta;
        d1 += side == 0 ? q1 : -q1;
        d2 += side == 0 ? q2 : -q2;
    }
    const long double m = std::exp(log_mass(p, k, eta, t));
    const long double g = d1 / m;
    return g * g - d2 / m;
}

/// Posterior mean of a one-hot section by enumerating its B candidates.
inline std::vector<double> posterior_mean(const std::vector<double>& r, const std::vector<double>& tau) {
    const std::size_t B = r.size();
    std::vector<long double> logw(B);
    for (std::size_t i = 0; i < B; ++i) {
        long double e = 0;
        for (std::size_t j = 0; j < B; ++j) {
            const long double d = static_cast<long double>(r[j]) - (i == j ? 1.0L : 0.0L);
            e -= d * d / (2.0L * tau[j]);
        }
        logw[i] = e;
    }
    const long double top = *std::max_element(logw.begin(), logw.end());
    long double total = 0;
    for (auto& w : logw) total += (w = std::exp(w - top));
    std::vector<double> out(B);
    for (std::size_t i = 0; i < B; ++i) out[i] = static_cast<double>(logw[i] / total);
    return out;
}

} // namespace oracle
