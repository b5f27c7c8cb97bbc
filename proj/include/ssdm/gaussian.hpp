#pragma once

// Scalar Gaussian helpers shared by the matcher, the GAMP output channel and
// state evolution.

namespace ssdm::gauss {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

double pdf(double x) noexcept;

/// Upper tail Q(x) = P(Z > x).
double q(double x) noexcept;

/// Lower tail Phi(x) = P(Z <= x).
double cdf(double x) noexcept;

/// Inverse of the upper tail: Q(q_inverse(p)) = p for p in (0,1).
/// Rational approximation followed by one Newton step on Q(c) = p.
double q_inverse(double p);

/// Inverse of the lower tail.
double cdf_inverse(double p);

/// Mills ratio Q(x) / pdf(x) for x >= 0, finite for every x (continued
/// fraction beyond x = 8 where erfc would underflow).
double mills_ratio(double x) noexcept;

/// 1 / mills_ratio(x) - x for x >= 0, evaluated without cancellation.
double inverse_mills_excess(double x) noexcept;

/// P(lo < Z <= hi), accurate in relative terms for intervals on one side of 0.
double interval_mass(double lo, double hi) noexcept;

} // namespace ssdm::gauss
