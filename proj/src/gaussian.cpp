#include "ssdm/gaussian.hpp"

#include <cmath>
#include <limits>

#include "ssdm/errors.hpp"

namespace ssdm::gauss {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880168872421;
constexpr double kSqrtHalfPi = 1.25331413731550025120788264241;

// Wichura AS241 (PPND16): Phi^{-1}(p) with about 1e-16 relative accuracy.
double ppnd16(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0 ? -value : value;
}

} // namespace

double pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double q(double x) noexcept { return 0.5 * std::erfc(x / kSqrt2); }

double cdf(double x) noexcept { return 0.5 * std::erfc(-x / kSqrt2); }

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw MalformedInput("q_inverse needs p in (0,1)");
    // Q^{-1}(p) = -Phi^{-1}(p); evaluating at p keeps small tails accurate.
    double c = -ppnd16(p);
    const double density = pdf(c);
    if (density > 0.0) c += (q(c) - p) / density;
    return c;
}

double cdf_inverse(double p) { return -q_inverse(p); }

double mills_ratio(double x) noexcept {
    if (x < 0.0) return q(x) / pdf(x);
    if (x <= 8.0) return kSqrtHalfPi * std::exp(0.5 * x * x) * std::erfc(x / kSqrt2);
    // Laplace continued fraction 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
    double tail = x;
    for (int k = 60; k >= 1; --k) tail = x + k / tail;
    return 1.0 / tail;
}

double inverse_mills_excess(double x) noexcept {
    if (x <= 8.0) return 1.0 / mills_ratio(x) - x;
    // 1/m(x) = x + 1/(x + 2/(x + 3/(...))); the excess is the inner fraction.
    double inner = x;
    for (int k = 60; k >= 2; --k) inner = x + k / inner;
    return 1.0 / inner;
}

double interval_mass(double lo, double hi) noexcept {
    if (!(hi > lo)) return 0.0;
    if (lo >= 0.0) return q(lo) - q(hi);
    if (hi <= 0.0) return cdf(hi) - cdf(lo);
    return 0.5 * (std::erf(hi / kSqrt2) - std::erf(lo / kSqrt2));
}

} // namespace ssdm::gauss
