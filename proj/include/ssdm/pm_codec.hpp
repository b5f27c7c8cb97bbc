#pragma once

// Position modulation: log2(B) source bits per section select the position of
// the single unit entry in a length-B block. Sections are stored contiguously,
// entry (l, b) at index l * B + b.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ssdm/random.hpp"

namespace ssdm {

struct SectionLayout {
    std::size_t section_size = 0;  // B, a power of two >= 2
    std::size_t num_sections = 0;  // L

    std::size_t dimension() const noexcept { return section_size * num_sections; }
    std::size_t bits_per_section() const noexcept;
    std::size_t message_bits() const noexcept { return bits_per_section() * num_sections; }

    /// Throws MalformedInput unless B is a power of two >= 2 and L >= 1.
    void validate() const;

    friend bool operator==(const SectionLayout&, const SectionLayout&) = default;
};

class SourceMessage {
public:
    /// `bits` holds 0/1 values, most significant bit of each section first.
    SourceMessage(std::vector<std::uint8_t> bits, std::size_t section_size);

    const SectionLayout& layout() const noexcept { return layout_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    /// Integer value carried by section l.
    std::uint32_t section_value(std::size_t l) const noexcept;

    friend bool operator==(const SourceMessage&, const SourceMessage&) = default;

private:
    SectionLayout layout_;
    std::vector<std::uint8_t> bits_;
};

/// Uniform i.i.d. Bernoulli(1/2) source of the given layout.
SourceMessage random_message(const SectionLayout& layout, Rng& rng);

/// One-hot sectioned signal, stored as the index of the unit entry per section.
class SparseSignal {
public:
    SparseSignal(SectionLayout layout, std::vector<std::uint32_t> positions);

    /// Parses a dense 0/1 vector; throws MalformedInput for a section with no
    /// unit entry, several unit entries, or a value other than 0 and 1.
    static SparseSignal from_dense(std::span<const double> dense, const SectionLayout& layout);

    const SectionLayout& layout() const noexcept { return layout_; }
    std::span<const std::uint32_t> positions() const noexcept { return positions_; }
    std::vector<double> to_dense() const;

    friend bool operator==(const SparseSignal&, const SparseSignal&) = default;

private:
    SectionLayout layout_;
    std::vector<std::uint32_t> positions_;
};

/// Posterior-mean estimate of a sparse signal: N values in [0,1].
struct SoftSignal {
    SectionLayout layout;
    std::vector<double> values;

    std::span<const double> section(std::size_t l) const {
        return std::span<const double>(values).subspan(l * layout.section_size, layout.section_size);
    }
};

SparseSignal pm_encode(const SourceMessage& u);
SourceMessage pm_decode(const SparseSignal& s);

/// Argmax per section; ties go to the lowest index.
SparseSignal hard_decision(const SoftSignal& shat);

/// Fraction of sections where the two signals differ.
double section_error_rate(const SparseSignal& s, const SparseSignal& sbar);

/// Per-section squared error sum(|shat - s|^2) / L.
double section_mse(const SoftSignal& shat, const SparseSignal& s);

} // namespace ssdm
