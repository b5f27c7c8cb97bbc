#include "gaussian_field.hpp"

#include <bit>
#include <cmath>

#include "ssdm/random.hpp"

namespace ssdm::detail {

namespace {

// Explicit fused multiply-adds round identically on every code path, so the
// vector loop and its scalar remainder agree bit for bit.
inline float mad(float a, float b, float c) { return std::fma(a, b, c); }

// Branch-free natural log for positive normal floats.
inline float log_positive(float x) {
    const auto bits = std::bit_cast<std::uint32_t>(x);
    const int exponent = static_cast<int>((bits >> 23) & 0xffu) - 127;
    float m = std::bit_cast<float>((bits & 0x7fffffu) | 0x3f800000u);
    const bool high = m > 1.41421356f;
    m = high ? m * 0.5f : m;
    const float e = static_cast<float>(exponent + (high ? 1 : 0));
    const float f = (m - 1.0f) / (m + 1.0f);
    const float f2 = f * f;
    float s = 1.0f / 9.0f;
    s = mad(s, f2, 1.0f / 7.0f);
    s = mad(s, f2, 1.0f / 5.0f);
    s = mad(s, f2, 1.0f / 3.0f);
    s = mad(s, f2, 1.0f);
    return mad(e, 0.693147180559945f, 2.0f * f * s);
}

// Wichura AS241 PPND7, evaluated without branches: the three rational
// pieces select numerator and denominator first, then divide once.
inline float inverse_normal_cdf(float p) {
    const float q = p - 0.5f;
    const float r = mad(-q, q, 0.180625f);
    const float c_num = q * mad(mad(mad(59.10937472f, r, 159.29113202f), r, 50.434271938f), r, 3.3871327179f);
    const float c_den = mad(mad(mad(67.1875636f, r, 78.757757664f), r, 17.895169469f), r, 1.0f);
    const float tail_p = q < 0.0f ? p : 1.0f - p;
    const float s = std::sqrt(-log_positive(tail_p));
    const float s1 = s - 1.6f;
    const float s2 = s - 5.0f;
    const float n_num = mad(mad(mad(0.17023821103f, s1, 1.3067284816f), s1, 2.75681539f), s1, 1.4234372777f);
    const float n_den = mad(mad(0.12021132975f, s1, 0.7370016425f), s1, 1.0f);
    const float f_num = mad(mad(mad(0.017337203997f, s2, 0.42868294337f), s2, 3.081226386f), s2, 6.657905115f);
    const float f_den = mad(mad(0.012258202635f, s2, 0.24197894225f), s2, 1.0f);
    const bool near = s <= 5.0f;
    float t_num = near ? n_num : f_num;
    const float t_den = near ? n_den : f_den;
    t_num = q < 0.0f ? -t_num : t_num;
    const bool central = std::fabs(q) <= 0.425f;
    return (central ? c_num : t_num) / (central ? c_den : t_den);
}

} // namespace

std::uint64_t field_row_key(std::uint64_t block_key, std::size_t row) noexcept {
    return mix64(block_key ^ mix64(static_cast<std::uint64_t>(row) + 0x632be59bd9b4e019ULL));
}

void fill_standard_normal(std::uint64_t row_key, std::size_t col_begin, std::size_t count, float* out) noexcept {
    // Uniforms first, then the quantile map in a separate loop so the float
    // arithmetic runs at the full float vector width.
    const std::uint64_t base = row_key + static_cast<std::uint64_t>(col_begin) * 0x9e3779b97f4a7c15ULL;
#pragma omp simd
    for (std::size_t j = 0; j < count; ++j) {
        const std::uint64_t h = mix64(base + static_cast<std::uint64_t>(j) * 0x9e3779b97f4a7c15ULL);
        // 23-bit midpoint grid: u in [2^-24, 1 - 2^-24], exact in float.
        out[j] = (static_cast<float>(static_cast<std::uint32_t>(h >> 41)) + 0.5f) * 0x1.0p-23f;
    }
#pragma omp simd
    for (std::size_t j = 0; j < count; ++j) out[j] = inverse_normal_cdf(out[j]);
}

} // namespace ssdm::detail
