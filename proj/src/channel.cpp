#include "ssdm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"

namespace ssdm {

namespace {

// Normalized interval quantities for z in (a, b], a < b, on the standardized
// scale: la = pdf(a)/mass, lb = pdf(b)/mass and the Fisher-type term
// eta * f = (la - lb)^2 - a la + b lb.
struct Standardized {
    double la, lb, fisher;
    bool ok;
};

// 0 <= a < b <= inf.
Standardized positive_side(double a, double b) {
    const double ma = gauss::mills_ratio(a);
    const double excess_a = gauss::inverse_mills_excess(a);  // 1/ma - a
    if (std::isinf(b)) {
        const double la = 1.0 / ma;
        return {la, 0.0, la * excess_a, true};
    }
    const double ratio = std::exp(-0.5 * (b - a) * (b + a));  // pdf(b) / pdf(a)
    const double mb = gauss::mills_ratio(b);
    const double denom = ma - ratio * mb;
    if (!(denom > 0.0) || !std::isfinite(denom)) return {0.0, 0.0, 0.0, false};
    const double la = 1.0 / denom;
    const double lb = ratio * la;
    // la - a = (ma * excess_a + a * ratio * mb) * la, a sum of nonnegative terms.
    const double la_minus_a = (ma * excess_a + a * ratio * mb) * la;
    const double fisher = la * la_minus_a - lb * (2.0 * la - lb - b);
    return {la, lb, fisher, fisher > 0.0 && std::isfinite(fisher)};
}

Standardized standardized(double a, double b) {
    if (a >= 0.0) return positive_side(a, b);
    if (b <= 0.0) {
        Standardized m = positive_side(-b, -a);
        std::swap(m.la, m.lb);
        return m;
    }
    const double mass = gauss::interval_mass(a, b);
    if (!(mass > 0.0)) return {0.0, 0.0, 0.0, false};
    const double la = std::isinf(a) ? 0.0 : gauss::pdf(a) / mass;
    const double lb = std::isinf(b) ? 0.0 : gauss::pdf(b) / mass;
    const double a_term = std::isinf(a) ? 0.0 : a * la;
    const double b_term = std::isinf(b) ? 0.0 : b * lb;
    // Each term is nonnegative here; deep inside a long interval the value
    // underflows to 0, which is the correctly rounded result.
    const double fisher = (la - lb) * (la - lb) - a_term + b_term;
    return {la, lb, fisher, fisher >= 0.0 && std::isfinite(fisher)};
}

} // namespace

OutputMoments output_moments(double p, std::size_t symbol, double eta, const TargetDistribution& target) {
    if (symbol >= target.size()) throw MalformedInput("symbol index outside the target alphabet");
    if (!(eta > 0.0)) throw MalformedInput("output moments need eta > 0");
    const double sd = std::sqrt(eta);
    const double lo = target.lower(symbol), hi = target.upper(symbol);
    const double a = (lo - p) / sd;
    const double b = (hi - p) / sd;
    const Standardized m = standardized(a, b);
    if (m.ok) {
        const double g = (m.la - m.lb) / sd;
        return {g, m.fisher / eta};
    }
    // Interval mass underflows: the likelihood behaves like a point mass at
    // the interval midpoint (both ends are finite here).
    const double mid = 0.5 * (lo + hi);
    return {(mid - p) / eta, 1.0 / eta};
}

double g_out(double p, std::size_t symbol, double eta, const TargetDistribution& target) {
    return output_moments(p, symbol, eta, target).g;
}

double f_out(double p, std::size_t symbol, double eta, const TargetDistribution& target) {
    return output_moments(p, symbol, eta, target).f;
}

double log_likelihood(double p, std::size_t symbol, double eta, const TargetDistribution& target) {
    if (symbol >= target.size()) throw MalformedInput("symbol index outside the target alphabet");
    const double sd = std::sqrt(eta);
    const double a = (target.lower(symbol) - p) / sd;
    const double b = (target.upper(symbol) - p) / sd;
    if (a >= 0.0 && std::isfinite(a)) {
        // log Q(a) + log(1 - Q(b)/Q(a)) through Mills ratios.
        const double ma = gauss::mills_ratio(a);
        const double tail = std::log(gauss::kInvSqrt2Pi) - 0.5 * a * a + std::log(ma);
        if (std::isinf(b)) return tail;
        const double ratio = std::exp(-0.5 * (b - a) * (b + a)) * gauss::mills_ratio(b) / ma;
        return tail + std::log1p(-ratio);
    }
    if (b <= 0.0 && std::isfinite(b)) {
        const double mb = gauss::mills_ratio(-b);
        const double tail = std::log(gauss::kInvSqrt2Pi) - 0.5 * b * b + std::log(mb);
        if (std::isinf(a)) return tail;
        const double ratio = std::exp(-0.5 * (b - a) * (-a - b)) * gauss::mills_ratio(-a) / mb;
        return tail + std::log1p(-ratio);
    }
    // Straddling interval: the mass outside it is at most 1 and often tiny.
    const double outside = gauss::q(b) + gauss::q(-a);
    return outside <= 0.5 ? std::log1p(-outside) : std::log(gauss::interval_mass(a, b));
}

void g_in(std::span<const double> r, std::span<const double> tau, std::span<double> out) {
    const std::size_t B = r.size();
    if (tau.size() != B || out.size() != B) throw DimensionMismatch("g_in section sizes differ");
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < B; ++i) {
        out[i] = (2.0 * r[i] - 1.0) / (2.0 * tau[i]);
        top = std::max(top, out[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        out[i] = std::exp(out[i] - top);
        total += out[i];
    }
    for (std::size_t i = 0; i < B; ++i) out[i] /= total;
}

} // namespace ssdm
