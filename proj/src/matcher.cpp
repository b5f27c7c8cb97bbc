#include "ssdm/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"
#include "ssdm/operators.hpp"

namespace ssdm {

TargetDistribution::TargetDistribution(std::vector<double> alphabet, std::vector<double> pmf)
    : alphabet_(std::move(alphabet)), pmf_(std::move(pmf)) {
    const std::size_t q = pmf_.size();
    if (q < 2) throw MalformedInput("target needs at least two symbols");
    if (q > std::numeric_limits<std::uint16_t>::max()) throw MalformedInput("target alphabet too large");
    if (alphabet_.size() != q) throw MalformedInput("alphabet and pmf sizes differ");
    for (std::size_t k = 0; k < q; ++k) {
        if (!std::isfinite(alphabet_[k])) throw MalformedInput("alphabet symbols must be finite");
        if (k > 0 && !(alphabet_[k] > alphabet_[k - 1]))
            throw MalformedInput("alphabet must be strictly increasing");
        if (!(pmf_[k] > 0.0)) throw MalformedInput("every target probability must be positive");
    }
    const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
    if (std::fabs(total - 1.0) > 1e-12) throw MalformedInput("target pmf must sum to 1");

    // c_k = Q^{-1}(sum_{j>=k} P_j), inverted from whichever of the upper and
    // lower sums is smaller so neither side suffers cancellation in 1 - sum.
    thresholds_.assign(q + 1, 0.0);
    thresholds_.front() = -std::numeric_limits<double>::infinity();
    thresholds_.back() = std::numeric_limits<double>::infinity();
    std::vector<double> head(q + 1, 0.0), tail(q + 1, 0.0);
    for (std::size_t k = 0; k < q; ++k) head[k + 1] = head[k] + pmf_[k];
    for (std::size_t k = q; k-- > 0;) tail[k] = tail[k + 1] + pmf_[k];
    for (std::size_t k = 1; k < q; ++k)
        thresholds_[k] = tail[k] <= head[k] ? gauss::q_inverse(tail[k]) : -gauss::q_inverse(head[k]);
    for (std::size_t k = 1; k <= q; ++k)
        if (!(thresholds_[k] > thresholds_[k - 1]))
            throw MalformedInput("target masses too small to separate quantizer thresholds");
}

TargetDistribution build_target(std::vector<double> alphabet, std::vector<double> pmf) {
    return TargetDistribution(std::move(alphabet), std::move(pmf));
}

TargetDistribution binary_target(double p_star) {
    if (!(p_star > 0.0 && p_star < 1.0)) throw MalformedInput("binary target needs p* in (0,1)");
    return TargetDistribution({0.0, 1.0}, {1.0 - p_star, p_star});
}

TargetDistribution parse_target(const std::string& text) {
    std::vector<std::pair<double, double>> pairs;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        double symbol, prob;
        if (!(fields >> symbol)) continue;
        std::string rest;
        if (!(fields >> prob) || (fields >> rest))
            throw MalformedInput("target line " + std::to_string(line_no) + ": expected 'symbol probability'");
        pairs.emplace_back(symbol, prob);
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<double> alphabet, pmf;
    for (auto [a, p] : pairs) {
        alphabet.push_back(a);
        pmf.push_back(p);
    }
    return TargetDistribution(std::move(alphabet), std::move(pmf));
}

TargetDistribution load_target(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInput("cannot open target file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_target(buffer.str());
}

TargetSequence quantize(std::span<const double> z, const TargetDistribution& target) {
    // Interior thresholds c_1..c_{q-1}; the first c_k >= z_i names the symbol.
    const auto c = target.thresholds().subspan(1, target.size() - 1);
    TargetSequence y;
    y.symbols.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        y.symbols[i] = static_cast<std::uint16_t>(std::lower_bound(c.begin(), c.end(), z[i]) - c.begin());
    return y;
}

std::vector<double> symbol_values(const TargetSequence& y, const TargetDistribution& target) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = target.alphabet()[y.symbols[i]];
    return out;
}

MatchResult match(const SourceMessage& u, const SensingOperator& op, const TargetDistribution& target) {
    SparseSignal s = pm_encode(u);
    if (op.cols() != s.layout().dimension())
        throw DimensionMismatch("operator has " + std::to_string(op.cols()) + " columns, signal has " +
                                std::to_string(s.layout().dimension()) + " entries");
    std::vector<double> z = forward(op, s.to_dense());
    TargetSequence y = quantize(z, target);
    return MatchResult{std::move(y), std::move(s), std::move(z)};
}

double code_rate(const SectionLayout& layout, std::size_t num_outputs) {
    return static_cast<double>(layout.message_bits()) / static_cast<double>(num_outputs);
}

double entropy(std::span<const double> pmf) {
    double h = 0.0;
    for (double p : pmf)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

double entropy(const TargetDistribution& target) { return entropy(target.pmf()); }

std::vector<double> empirical_pmf(const TargetSequence& y, std::size_t alphabet_size) {
    std::vector<double> counts(alphabet_size, 0.0);
    for (auto s : y.symbols) {
        if (s >= alphabet_size) throw MalformedInput("symbol index outside the alphabet");
        counts[s] += 1.0;
    }
    if (!y.symbols.empty())
        for (auto& c : counts) c /= static_cast<double>(y.symbols.size());
    return counts;
}

double kl_divergence(std::span<const double> empirical, std::span<const double> target) {
    if (empirical.size() != target.size()) throw DimensionMismatch("pmfs have different supports");
    double d = 0.0;
    for (std::size_t k = 0; k < empirical.size(); ++k) {
        if (empirical[k] <= 0.0) continue;
        if (target[k] <= 0.0) return std::numeric_limits<double>::infinity();
        d += empirical[k] * std::log2(empirical[k] / target[k]);
    }
    return std::max(d, 0.0);
}

double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("pmfs have different supports");
    double tv = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) tv += std::fabs(a[k] - b[k]);
    return 0.5 * tv;
}

} // namespace ssdm
