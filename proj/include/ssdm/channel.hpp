#pragma once

// Scalar building blocks of the GAMP dematcher.
//
// Output side: the quantizer is a deterministic channel. Given the Gaussian
// belief z ~ N(p, eta), observing symbol k has likelihood
//   m(k | p, eta) = P(c_{k-1} < z <= c_k),
// and g_out / f_out are the first derivative and the negated second
// derivative of log m with respect to p.
//
// Input side: g_in is the posterior mean of a one-hot section under a uniform
// prior, observed through r = s + noise with componentwise variances tau.

#include <cstddef>
#include <span>

#include "ssdm/matcher.hpp"

namespace ssdm {

struct OutputMoments {
    double g;  // d/dp log m
    double f;  // -d^2/dp^2 log m, > 0
};

/// Requires eta > 0 and finite p. Never returns NaN or Inf.
OutputMoments output_moments(double p, std::size_t symbol, double eta, const TargetDistribution& target);

double g_out(double p, std::size_t symbol, double eta, const TargetDistribution& target);
double f_out(double p, std::size_t symbol, double eta, const TargetDistribution& target);

/// log m(symbol | p, eta).
double log_likelihood(double p, std::size_t symbol, double eta, const TargetDistribution& target);

/// Posterior mean of one section: softmax of (2 r_i - 1) / (2 tau_i).
void g_in(std::span<const double> r, std::span<const double> tau, std::span<double> out);

} // namespace ssdm
