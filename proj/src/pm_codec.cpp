#include "ssdm/pm_codec.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "ssdm/errors.hpp"

namespace ssdm {

std::size_t SectionLayout::bits_per_section() const noexcept {
    return section_size < 2 ? 0 : static_cast<std::size_t>(std::countr_zero(section_size));
}

void SectionLayout::validate() const {
    if (section_size < 2 || !std::has_single_bit(section_size))
        throw MalformedInput("section size must be a power of two >= 2, got " +
                             std::to_string(section_size));
    if (num_sections == 0)
        throw MalformedInput("number of sections must be positive");
    if (section_size > (std::size_t{1} << 31))
        throw MalformedInput("section size too large");
}

SourceMessage::SourceMessage(std::vector<std::uint8_t> bits, std::size_t section_size)
    : bits_(std::move(bits)) {
    layout_.section_size = section_size;
    layout_.num_sections = 1;
    layout_.validate();
    const std::size_t k = layout_.bits_per_section();
    if (bits_.empty() || bits_.size() % k != 0)
        throw MalformedInput("message length " + std::to_string(bits_.size()) +
                             " is not a positive multiple of log2(B) = " + std::to_string(k));
    for (auto b : bits_)
        if (b > 1) throw MalformedInput("message bits must be 0 or 1");
    layout_.num_sections = bits_.size() / k;
}

std::uint32_t SourceMessage::section_value(std::size_t l) const noexcept {
    const std::size_t k = layout_.bits_per_section();
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < k; ++i) v = (v << 1) | bits_[l * k + i];
    return v;
}

SourceMessage random_message(const SectionLayout& layout, Rng& rng) {
    layout.validate();
    std::vector<std::uint8_t> bits(layout.message_bits());
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
    return SourceMessage(std::move(bits), layout.section_size);
}

SparseSignal::SparseSignal(SectionLayout layout, std::vector<std::uint32_t> positions)
    : layout_(layout), positions_(std::move(positions)) {
    layout_.validate();
    if (positions_.size() != layout_.num_sections)
        throw MalformedInput("expected one position per section");
    for (auto p : positions_)
        if (p >= layout_.section_size) throw MalformedInput("position outside its section");
}

SparseSignal SparseSignal::from_dense(std::span<const double> dense, const SectionLayout& layout) {
    layout.validate();
    if (dense.size() != layout.dimension())
        throw DimensionMismatch("dense signal has length " + std::to_string(dense.size()) +
                                ", layout expects " + std::to_string(layout.dimension()));
    const std::size_t B = layout.section_size;
    std::vector<std::uint32_t> positions(layout.num_sections);
    for (std::size_t l = 0; l < layout.num_sections; ++l) {
        std::size_t ones = 0;
        for (std::size_t b = 0; b < B; ++b) {
            const double v = dense[l * B + b];
            if (v == 1.0) {
                ++ones;
                positions[l] = static_cast<std::uint32_t>(b);
            } else if (v != 0.0) {
                throw MalformedInput("section " + std::to_string(l) + " has a non-binary entry");
            }
        }
        if (ones != 1)
            throw MalformedInput("section " + std::to_string(l) + " has " + std::to_string(ones) +
                                 " unit entries");
    }
    return SparseSignal(layout, std::move(positions));
}

std::vector<double> SparseSignal::to_dense() const {
    std::vector<double> out(layout_.dimension(), 0.0);
    for (std::size_t l = 0; l < positions_.size(); ++l)
        out[l * layout_.section_size + positions_[l]] = 1.0;
    return out;
}

// Value v sits at position B - 1 - v counted from the left: 00 -> 0001.
SparseSignal pm_encode(const SourceMessage& u) {
    const auto& layout = u.layout();
    std::vector<std::uint32_t> positions(layout.num_sections);
    const auto top = static_cast<std::uint32_t>(layout.section_size - 1);
    for (std::size_t l = 0; l < layout.num_sections; ++l) positions[l] = top - u.section_value(l);
    return SparseSignal(layout, std::move(positions));
}

SourceMessage pm_decode(const SparseSignal& s) {
    const auto& layout = s.layout();
    const std::size_t k = layout.bits_per_section();
    const auto top = static_cast<std::uint32_t>(layout.section_size - 1);
    std::vector<std::uint8_t> bits(layout.message_bits());
    for (std::size_t l = 0; l < layout.num_sections; ++l) {
        const std::uint32_t v = top - s.positions()[l];
        for (std::size_t i = 0; i < k; ++i)
            bits[l * k + i] = static_cast<std::uint8_t>((v >> (k - 1 - i)) & 1u);
    }
    return SourceMessage(std::move(bits), layout.section_size);
}

SparseSignal hard_decision(const SoftSignal& shat) {
    const auto& layout = shat.layout;
    layout.validate();
    if (shat.values.size() != layout.dimension())
        throw DimensionMismatch("soft signal length does not match its layout");
    std::vector<std::uint32_t> positions(layout.num_sections);
    for (std::size_t l = 0; l < layout.num_sections; ++l) {
        auto sec = shat.section(l);
        // max_element keeps the first maximum.
        positions[l] = static_cast<std::uint32_t>(std::max_element(sec.begin(), sec.end()) - sec.begin());
    }
    return SparseSignal(layout, std::move(positions));
}

double section_error_rate(const SparseSignal& s, const SparseSignal& sbar) {
    if (!(s.layout() == sbar.layout()))
        throw DimensionMismatch("section error rate needs signals of equal shape");
    const auto a = s.positions();
    const auto b = sbar.positions();
    std::size_t wrong = 0;
    for (std::size_t l = 0; l < a.size(); ++l) wrong += a[l] != b[l];
    return static_cast<double>(wrong) / static_cast<double>(a.size());
}

double section_mse(const SoftSignal& shat, const SparseSignal& s) {
    if (!(shat.layout == s.layout()) || shat.values.size() != s.layout().dimension())
        throw DimensionMismatch("section MSE needs signals of equal shape");
    const std::size_t B = s.layout().section_size;
    double total = 0.0;
    for (std::size_t l = 0; l < s.layout().num_sections; ++l) {
        for (std::size_t b = 0; b < B; ++b) {
            const double target = b == s.positions()[l] ? 1.0 : 0.0;
            const double d = shat.values[l * B + b] - target;
            total += d * d;
        }
    }
    return total / static_cast<double>(s.layout().num_sections);
}

} // namespace ssdm
