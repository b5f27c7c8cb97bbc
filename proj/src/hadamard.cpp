#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "ssdm/errors.hpp"
#include "ssdm/operators.hpp"
#include "ssdm/random.hpp"

namespace ssdm {

void fwht(std::span<double> data) {
    const std::size_t n = data.size();
    if (!std::has_single_bit(n)) throw MalformedInput("fwht length must be a power of two");
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += 2 * h) {
            double* a = data.data() + i;
            double* b = a + h;
            for (std::size_t j = 0; j < h; ++j) {
                const double x = a[j], y = b[j];
                a[j] = x + y;
                b[j] = x - y;
            }
        }
    }
}

HadamardOperator::HadamardOperator(std::size_t M, std::size_t N, std::size_t L, std::uint64_t seed)
    : SensingOperator(M, N, L, OperatorKind::Hadamard, seed), padded_(std::bit_ceil(std::max<std::size_t>(N, 2))) {
    if (M == 0 || N == 0 || L == 0) throw MalformedInput("hadamard operator needs positive M, N and L");
    if (M > padded_ - 1)
        throw MalformedInput("hadamard operator: M = " + std::to_string(M) + " exceeds the " +
                             std::to_string(padded_ - 1) + " non-constant rows available");
    scale_ = 1.0 / std::sqrt(static_cast<double>(L));

    Rng rng(derive_seed(seed, 0x4841444dULL));
    // Rows 1..N'-1 (row 0 is all ones), first M of a partial shuffle.
    std::vector<std::uint32_t> rows(padded_ - 1);
    std::iota(rows.begin(), rows.end(), 1u);
    for (std::size_t i = 0; i < M; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
    rows_sel_.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(M));

    std::vector<std::uint32_t> cols(padded_);
    std::iota(cols.begin(), cols.end(), 0u);
    for (std::size_t i = 0; i < N; ++i) std::swap(cols[i], cols[i + rng.below(cols.size() - i)]);
    col_pos_.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(N));

    // Random column signs. Without them the one-hot signal's mean 1/B lands
    // in the excluded all-ones row and the codeword variance drops to 1 - 1/B.
    col_sign_.resize(N);
    for (double& v : col_sign_) v = rng.bit() ? -scale_ : scale_;
}

void HadamardOperator::do_forward(std::span<const double> lin_in, std::span<const double> sq_in,
                                  std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const {
    const std::size_t M = rows(), N = cols();
    std::vector<double> buf(lin_out.empty() ? 0 : padded_);
    for (std::size_t inst = 0; inst < batch; ++inst) {
        if (!lin_out.empty()) {
            std::fill(buf.begin(), buf.end(), 0.0);
            for (std::size_t j = 0; j < N; ++j) buf[col_pos_[j]] = col_sign_[j] * lin_in[inst * N + j];
            fwht(buf);
            for (std::size_t i = 0; i < M; ++i) lin_out[inst * M + i] = buf[rows_sel_[i]];
        }
        if (!sq_out.empty()) {
            // Every squared entry equals 1/L.
            const auto v = sq_in.subspan(inst * N, N);
            const double value = scale_ * scale_ * std::accumulate(v.begin(), v.end(), 0.0);
            std::fill_n(sq_out.begin() + static_cast<std::ptrdiff_t>(inst * M), M, value);
        }
    }
}

void HadamardOperator::do_transpose(std::span<const double> lin_in, std::span<const double> sq_in,
                                    std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const {
    const std::size_t M = rows(), N = cols();
    std::vector<double> buf(lin_out.empty() ? 0 : padded_);
    for (std::size_t inst = 0; inst < batch; ++inst) {
        if (!lin_out.empty()) {
            std::fill(buf.begin(), buf.end(), 0.0);
            for (std::size_t i = 0; i < M; ++i) buf[rows_sel_[i]] = lin_in[inst * M + i];
            fwht(buf);
            for (std::size_t j = 0; j < N; ++j) lin_out[inst * N + j] = col_sign_[j] * buf[col_pos_[j]];
        }
        if (!sq_out.empty()) {
            const auto w = sq_in.subspan(inst * M, M);
            const double value = scale_ * scale_ * std::accumulate(w.begin(), w.end(), 0.0);
            std::fill_n(sq_out.begin() + static_cast<std::ptrdiff_t>(inst * N), N, value);
        }
    }
}

std::unique_ptr<SensingOperator> make_hadamard(std::size_t M, std::size_t N, std::size_t L, std::uint64_t seed) {
    return std::make_unique<HadamardOperator>(M, N, L, seed);
}

} // namespace ssdm
