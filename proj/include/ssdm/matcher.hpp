#pragma once

// Distribution matcher: the codeword z = F s is quantized componentwise with
// Gaussian quantile thresholds, so a standard Gaussian input yields symbol a_k
// with probability exactly P_k.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ssdm/pm_codec.hpp"

namespace ssdm {

class SensingOperator;

class TargetDistribution {
public:
    /// Alphabet must be strictly increasing; pmf strictly positive summing to
    /// 1 within 1e-12. Throws MalformedInput otherwise.
    TargetDistribution(std::vector<double> alphabet, std::vector<double> pmf);

    std::size_t size() const noexcept { return pmf_.size(); }
    std::span<const double> alphabet() const noexcept { return alphabet_; }
    std::span<const double> pmf() const noexcept { return pmf_; }

    /// c_0 .. c_q with c_0 = -inf and c_q = +inf; symbol k (0-based) owns
    /// the interval (c_k, c_{k+1}].
    std::span<const double> thresholds() const noexcept { return thresholds_; }
    double lower(std::size_t k) const noexcept { return thresholds_[k]; }
    double upper(std::size_t k) const noexcept { return thresholds_[k + 1]; }

private:
    std::vector<double> alphabet_;
    std::vector<double> pmf_;
    std::vector<double> thresholds_;
};

TargetDistribution build_target(std::vector<double> alphabet, std::vector<double> pmf);

/// Bernoulli(p_star) over {0, 1}: pmf [1 - p_star, p_star].
TargetDistribution binary_target(double p_star);

/// Reads "symbol probability" pairs, one per line; '#' starts a comment.
TargetDistribution load_target(const std::filesystem::path& path);
TargetDistribution parse_target(const std::string& text);

/// Symbol indices into the target alphabet.
struct TargetSequence {
    std::vector<std::uint16_t> symbols;

    std::size_t size() const noexcept { return symbols.size(); }
};

TargetSequence quantize(std::span<const double> z, const TargetDistribution& target);

/// Symbol values a_{y_i} of a sequence.
std::vector<double> symbol_values(const TargetSequence& y, const TargetDistribution& target);

struct MatchResult {
    TargetSequence y;
    SparseSignal s;
    std::vector<double> z;
};

/// y = quantize(F pm_encode(u)). Throws DimensionMismatch when the operator
/// width differs from the signal dimension.
MatchResult match(const SourceMessage& u, const SensingOperator& op, const TargetDistribution& target);

/// Bits per symbol carried by a code with the given layout and M outputs.
double code_rate(const SectionLayout& layout, std::size_t num_outputs);

/// Entropy in bits.
double entropy(const TargetDistribution& target);
double entropy(std::span<const double> pmf);

std::vector<double> empirical_pmf(const TargetSequence& y, std::size_t alphabet_size);

/// D(empirical || target) in bits with 0 log 0 = 0; +inf when the empirical
/// pmf puts mass where the target has none.
double kl_divergence(std::span<const double> empirical, std::span<const double> target);

double total_variation(std::span<const double> a, std::span<const double> b);

} // namespace ssdm
