#include "ssdm/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "gaussian_field.hpp"
#include "ssdm/errors.hpp"
#include "ssdm/random.hpp"

namespace ssdm {

std::string to_string(OperatorKind kind) {
    switch (kind) {
    case OperatorKind::DenseGaussian: return "gaussian";
    case OperatorKind::Hadamard: return "hadamard";
    case OperatorKind::SpatiallyCoupled: return "coupled";
    case OperatorKind::Explicit: return "explicit";
    }
    return "unknown";
}

OperatorKind parse_operator_kind(const std::string& name) {
    if (name == "gaussian" || name == "dense-gaussian") return OperatorKind::DenseGaussian;
    if (name == "hadamard") return OperatorKind::Hadamard;
    if (name == "coupled" || name == "spatially-coupled") return OperatorKind::SpatiallyCoupled;
    if (name == "explicit") return OperatorKind::Explicit;
    throw MalformedInput("unknown operator kind '" + name + "'");
}

namespace {

void check_pair(std::span<const double> in, std::span<double> out, std::size_t in_len, std::size_t out_len,
                std::size_t batch, const char* what) {
    if (in.empty() && out.empty()) return;
    if (in.size() != in_len * batch || out.size() != out_len * batch)
        throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(batch) + " x " +
                                std::to_string(in_len) + " inputs and " + std::to_string(batch) + " x " +
                                std::to_string(out_len) + " outputs, got " + std::to_string(in.size()) +
                                " and " + std::to_string(out.size()));
}

} // namespace

void SensingOperator::forward_pair(std::span<const double> lin_in, std::span<const double> sq_in,
                                   std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const {
    check_pair(lin_in, lin_out, cols_, rows_, batch, "forward");
    check_pair(sq_in, sq_out, cols_, rows_, batch, "forward_sq");
    do_forward(lin_in, sq_in, lin_out, sq_out, batch);
}

void SensingOperator::transpose_pair(std::span<const double> lin_in, std::span<const double> sq_in,
                                     std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const {
    check_pair(lin_in, lin_out, rows_, cols_, batch, "transpose");
    check_pair(sq_in, sq_out, rows_, cols_, batch, "transpose_sq");
    do_transpose(lin_in, sq_in, lin_out, sq_out, batch);
}

std::vector<double> SensingOperator::materialize() const {
    std::vector<double> dense(rows_ * cols_);
    std::vector<double> unit(cols_, 0.0), column(rows_);
    for (std::size_t j = 0; j < cols_; ++j) {
        unit[j] = 1.0;
        forward_pair(unit, {}, column, {}, 1);
        unit[j] = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) dense[i * cols_ + j] = column[i];
    }
    return dense;
}

std::vector<double> forward(const SensingOperator& op, std::span<const double> v) {
    std::vector<double> out(op.rows());
    op.forward_pair(v, {}, out, {}, 1);
    return out;
}

std::vector<double> transpose(const SensingOperator& op, std::span<const double> w) {
    std::vector<double> out(op.cols());
    op.transpose_pair(w, {}, out, {}, 1);
    return out;
}

std::vector<double> forward_sq(const SensingOperator& op, std::span<const double> v) {
    std::vector<double> out(op.rows());
    op.forward_pair({}, v, {}, out, 1);
    return out;
}

std::vector<double> transpose_sq(const SensingOperator& op, std::span<const double> w) {
    std::vector<double> out(op.cols());
    op.transpose_pair({}, w, {}, out, 1);
    return out;
}

std::size_t StorageOptions::default_cache_bytes() {
    if (const char* env = std::getenv("SSDM_OPERATOR_CACHE_MB")) {
        char* end = nullptr;
        const unsigned long long mb = std::strtoull(env, &end, 10);
        if (end != env) return static_cast<std::size_t>(mb) << 20;
    }
    return std::size_t{1024} << 20;
}

namespace {

// Products run over column tiles; within a tile, rows are processed in blocks
// of kRowBlock so every input element loaded feeds kRowBlock multiply-adds.
constexpr std::size_t kTile = 256;
constexpr std::size_t kRowBlock = 8;

typedef double Vec8 __attribute__((vector_size(64)));

inline Vec8 load8(const double* p) {
    Vec8 v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

inline void store8(double* p, Vec8 v) { std::memcpy(p, &v, sizeof v); }

inline double lane_sum(Vec8 v) {
    return ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]));
}

struct GaussianBlock {
    std::size_t row0, rows, col0, cols;
    double stddev;
    std::uint64_t key;
};

/// Union of independent Gaussian blocks; the dense kind is a single block.
class BlockGaussianOperator final : public SensingOperator {
public:
    BlockGaussianOperator(std::size_t M, std::size_t N, std::size_t L, OperatorKind kind, std::uint64_t seed,
                          std::vector<GaussianBlock> blocks, StorageOptions storage)
        : SensingOperator(M, N, L, kind, seed), blocks_(std::move(blocks)) {
        std::size_t entries = 0;
        for (const auto& b : blocks_) entries += b.rows * b.cols;
        if (entries * sizeof(float) <= storage.cache_bytes) {
            cache_.resize(blocks_.size());
            for (std::size_t k = 0; k < blocks_.size(); ++k) {
                const auto& b = blocks_[k];
                cache_[k].resize(b.rows * b.cols);
                for (std::size_t i = 0; i < b.rows; ++i)
                    detail::fill_standard_normal(detail::field_row_key(b.key, i), 0, b.cols,
                                                 cache_[k].data() + i * b.cols);
            }
        }
    }

    bool cached() const noexcept { return !cache_.empty(); }

    std::vector<double> materialize() const override {
        std::vector<double> dense(rows() * cols(), 0.0);
        std::vector<float> row;
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            row.resize(b.cols);
            for (std::size_t i = 0; i < b.rows; ++i) {
                const float* g = segment(k, i, 0, b.cols, row.data());
                for (std::size_t j = 0; j < b.cols; ++j)
                    dense[(b.row0 + i) * cols() + b.col0 + j] = b.stddev * static_cast<double>(g[j]);
            }
        }
        return dense;
    }

protected:
    void do_forward(std::span<const double> lin_in, std::span<const double> sq_in, std::span<double> lin_out,
                    std::span<double> sq_out, std::size_t batch) const override {
        const bool lin = !lin_out.empty();
        const bool sq = !sq_out.empty();
        std::fill(lin_out.begin(), lin_out.end(), 0.0);
        std::fill(sq_out.begin(), sq_out.end(), 0.0);
        Scratch w(batch, lin, sq);
        const std::size_t M = rows(), N = cols();
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            const double var = b.stddev * b.stddev;
            for (std::size_t t0 = 0; t0 < b.cols; t0 += kTile) {
                const std::size_t n = std::min(kTile, b.cols - t0);
                const std::size_t nv = (n + 7) / 8 * 8;
                // Stage the input tiles, zero padded to whole vectors.
                for (std::size_t inst = 0; inst < batch; ++inst) {
                    if (lin) stage(lin_in.data() + inst * N + b.col0 + t0, n, w.in_lin.data() + inst * kTile);
                    if (sq) stage(sq_in.data() + inst * N + b.col0 + t0, n, w.in_sq.data() + inst * kTile);
                }
                for (std::size_t r0 = 0; r0 < b.rows; r0 += kRowBlock) {
                    const std::size_t R = std::min(kRowBlock, b.rows - r0);
                    load_rows(k, r0, R, t0, n, w, sq);
                    for (std::size_t inst = 0; inst < batch; ++inst) {
                        if (lin) {
                            const double* v = w.in_lin.data() + inst * kTile;
                            Vec8 acc[kRowBlock] = {};
                            for (std::size_t j = 0; j < nv; j += 8) {
                                const Vec8 x = load8(v + j);
                                for (std::size_t r = 0; r < kRowBlock; ++r)
                                    acc[r] += load8(w.g.data() + r * kTile + j) * x;
                            }
                            double* out = lin_out.data() + inst * M + b.row0 + r0;
                            for (std::size_t r = 0; r < R; ++r) out[r] += b.stddev * lane_sum(acc[r]);
                        }
                        if (sq) {
                            const double* v = w.in_sq.data() + inst * kTile;
                            Vec8 acc[kRowBlock] = {};
                            for (std::size_t j = 0; j < nv; j += 8) {
                                const Vec8 x = load8(v + j);
                                for (std::size_t r = 0; r < kRowBlock; ++r)
                                    acc[r] += load8(w.g2.data() + r * kTile + j) * x;
                            }
                            double* out = sq_out.data() + inst * M + b.row0 + r0;
                            for (std::size_t r = 0; r < R; ++r) out[r] += var * lane_sum(acc[r]);
                        }
                    }
                }
            }
        }
    }

    void do_transpose(std::span<const double> lin_in, std::span<const double> sq_in, std::span<double> lin_out,
                      std::span<double> sq_out, std::size_t batch) const override {
        const bool lin = !lin_out.empty();
        const bool sq = !sq_out.empty();
        std::fill(lin_out.begin(), lin_out.end(), 0.0);
        std::fill(sq_out.begin(), sq_out.end(), 0.0);
        Scratch w(batch, lin, sq);
        const std::size_t M = rows(), N = cols();
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            const double var = b.stddev * b.stddev;
            for (std::size_t t0 = 0; t0 < b.cols; t0 += kTile) {
                const std::size_t n = std::min(kTile, b.cols - t0);
                const std::size_t nv = (n + 7) / 8 * 8;
                std::fill(w.in_lin.begin(), w.in_lin.end(), 0.0);
                std::fill(w.in_sq.begin(), w.in_sq.end(), 0.0);
                for (std::size_t r0 = 0; r0 < b.rows; r0 += kRowBlock) {
                    const std::size_t R = std::min(kRowBlock, b.rows - r0);
                    load_rows(k, r0, R, t0, n, w, sq);
                    for (std::size_t inst = 0; inst < batch; ++inst) {
                        if (lin) {
                            double xs[kRowBlock] = {};
                            for (std::size_t r = 0; r < R; ++r) xs[r] = lin_in[inst * M + b.row0 + r0 + r];
                            double* acc = w.in_lin.data() + inst * kTile;
                            for (std::size_t j = 0; j < nv; j += 8) {
                                Vec8 t = load8(acc + j);
                                for (std::size_t r = 0; r < kRowBlock; ++r)
                                    t += xs[r] * load8(w.g.data() + r * kTile + j);
                                store8(acc + j, t);
                            }
                        }
                        if (sq) {
                            double xs[kRowBlock] = {};
                            for (std::size_t r = 0; r < R; ++r) xs[r] = sq_in[inst * M + b.row0 + r0 + r];
                            double* acc = w.in_sq.data() + inst * kTile;
                            for (std::size_t j = 0; j < nv; j += 8) {
                                Vec8 t = load8(acc + j);
                                for (std::size_t r = 0; r < kRowBlock; ++r)
                                    t += xs[r] * load8(w.g2.data() + r * kTile + j);
                                store8(acc + j, t);
                            }
                        }
                    }
                }
                for (std::size_t inst = 0; inst < batch; ++inst) {
                    if (lin) {
                        double* out = lin_out.data() + inst * N + b.col0 + t0;
                        const double* acc = w.in_lin.data() + inst * kTile;
                        for (std::size_t j = 0; j < n; ++j) out[j] += b.stddev * acc[j];
                    }
                    if (sq) {
                        double* out = sq_out.data() + inst * N + b.col0 + t0;
                        const double* acc = w.in_sq.data() + inst * kTile;
                        for (std::size_t j = 0; j < n; ++j) out[j] += var * acc[j];
                    }
                }
            }
        }
    }

private:
    // Per-call work space: entry tiles of one row block (g, and squared in
    // g2) plus one input or accumulator tile per instance.
    struct Scratch {
        std::vector<double> g, g2, in_lin, in_sq;
        std::vector<float> row;

        Scratch(std::size_t batch, bool lin, bool sq)
            : g(kRowBlock * kTile), g2(sq ? kRowBlock * kTile : 0), in_lin(lin ? batch * kTile : 0),
              in_sq(sq ? batch * kTile : 0), row(kTile) {}
    };

    static void stage(const double* src, std::size_t n, double* dst) {
        std::copy(src, src + n, dst);
        std::fill(dst + n, dst + kTile, 0.0);
    }

    // Rows [r0, r0 + R) of block k over columns [t0, t0 + n); unused rows and
    // columns of the tile are zero.
    void load_rows(std::size_t k, std::size_t r0, std::size_t R, std::size_t t0, std::size_t n, Scratch& w,
                   bool squares) const {
        for (std::size_t r = 0; r < kRowBlock; ++r) {
            double* g = w.g.data() + r * kTile;
            double* g2 = squares ? w.g2.data() + r * kTile : nullptr;
            if (r >= R) {
                std::fill(g, g + kTile, 0.0);
                if (g2) std::fill(g2, g2 + kTile, 0.0);
                continue;
            }
            const float* e = segment(k, r0 + r, t0, n, w.row.data());
            for (std::size_t j = 0; j < n; ++j) g[j] = static_cast<double>(e[j]);
            std::fill(g + n, g + kTile, 0.0);
            if (g2) {
                for (std::size_t j = 0; j < kTile; ++j) g2[j] = g[j] * g[j];
            }
        }
    }

    const float* segment(std::size_t block, std::size_t row, std::size_t col, std::size_t n, float* buffer) const {
        const auto& b = blocks_[block];
        if (cached()) return cache_[block].data() + row * b.cols + col;
        detail::fill_standard_normal(detail::field_row_key(b.key, row), col, n, buffer);
        return buffer;
    }

    std::vector<GaussianBlock> blocks_;
    std::vector<std::vector<float>> cache_;
};

} // namespace

std::unique_ptr<SensingOperator> make_gaussian(std::size_t M, std::size_t N, std::size_t L, std::uint64_t seed,
                                               StorageOptions storage) {
    if (M == 0 || N == 0 || L == 0) throw MalformedInput("gaussian operator needs positive M, N and L");
    std::vector<GaussianBlock> blocks{{0, M, 0, N, 1.0 / std::sqrt(static_cast<double>(L)), derive_seed(seed, 0)}};
    return std::make_unique<BlockGaussianOperator>(M, N, L, OperatorKind::DenseGaussian, seed, std::move(blocks),
                                                   storage);
}

void CouplingParams::validate() const {
    if (block_rows == 0 || block_cols == 0) throw MalformedInput("coupling needs Lr, Lc >= 1");
    if (backward + forward + 1 > block_cols) throw MalformedInput("coupling window wb + wf + 1 exceeds Lc");
    if (!(seed_rate >= 1.0) || !std::isfinite(seed_rate)) throw MalformedInput("seed rate beta must be >= 1");
    if (!(strength > 0.0 && strength <= 1.0)) throw MalformedInput("coupling strength J must lie in (0, 1]");
    // Every block-row needs at least one block inside the column range.
    for (std::size_t r = 0; r < block_rows; ++r)
        if (r > block_cols - 1 + backward)
            throw MalformedInput("block-row " + std::to_string(r) + " has no block inside the coupling window");
}

std::vector<double> coupling_variances(const CouplingParams& params) {
    params.validate();
    const std::size_t Lr = params.block_rows, Lc = params.block_cols;
    std::vector<double> gamma(Lr * Lc, 0.0);
    for (std::size_t r = 0; r < Lr; ++r) {
        const std::size_t lo = r >= params.backward ? r - params.backward : 0;
        const std::size_t hi = std::min(Lc - 1, r + params.forward);
        double total = 0.0;
        for (std::size_t c = lo; c <= hi; ++c) {
            gamma[r * Lc + c] = c == r ? 1.0 : params.strength;
            total += gamma[r * Lc + c];
        }
        for (std::size_t c = lo; c <= hi; ++c) gamma[r * Lc + c] /= total;
    }
    return gamma;
}

std::vector<std::size_t> coupled_block_row_sizes(const CouplingParams& params, std::size_t M_block) {
    params.validate();
    std::vector<std::size_t> sizes(params.block_rows, M_block);
    sizes[0] = static_cast<std::size_t>(std::ceil(params.seed_rate * static_cast<double>(M_block) - 1e-9));
    return sizes;
}

std::unique_ptr<SensingOperator> make_coupled(const CouplingParams& params, std::size_t M_block, std::size_t N_block,
                                              std::size_t L_block, std::uint64_t seed, StorageOptions storage) {
    if (M_block == 0 || N_block == 0 || L_block == 0)
        throw MalformedInput("coupled operator needs positive block dimensions");
    const auto gamma = coupling_variances(params);
    const auto sizes = coupled_block_row_sizes(params, M_block);
    const std::size_t Lc = params.block_cols;
    std::vector<GaussianBlock> blocks;
    std::size_t row0 = 0;
    for (std::size_t r = 0; r < params.block_rows; ++r) {
        for (std::size_t c = 0; c < Lc; ++c) {
            const double g = gamma[r * Lc + c];
            if (g <= 0.0) continue;
            blocks.push_back({row0, sizes[r], c * N_block, N_block, std::sqrt(g / static_cast<double>(L_block)),
                              derive_seed(seed, 1 + r * Lc + c)});
        }
        row0 += sizes[r];
    }
    return std::make_unique<BlockGaussianOperator>(row0, Lc * N_block, Lc * L_block, OperatorKind::SpatiallyCoupled, seed,
                                                   std::move(blocks), storage);
}

ExplicitOperator::ExplicitOperator(std::size_t rows, std::size_t cols, std::size_t sections, OperatorKind kind,
                                   std::uint64_t seed, std::vector<double> entries)
    : SensingOperator(rows, cols, sections, kind, seed), entries_(std::move(entries)) {
    if (entries_.size() != rows * cols) throw DimensionMismatch("explicit operator payload has the wrong size");
}

void ExplicitOperator::do_forward(std::span<const double> lin_in, std::span<const double> sq_in,
                                  std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const {
    const std::size_t M = rows(), N = cols();
    for (std::size_t inst = 0; inst < batch; ++inst) {
        for (std::size_t i = 0; i < M; ++i) {
            const double* f = entries_.data() + i * N;
            if (!lin_out.empty()) {
                double acc = 0.0;
                for (std::size_t j = 0; j < N; ++j) acc += f[j] * lin_in[inst * N + j];
                lin_out[inst * M + i] = acc;
            }
            if (!sq_out.empty()) {
                double acc = 0.0;
                for (std::size_t j = 0; j < N; ++j) acc += f[j] * f[j] * sq_in[inst * N + j];
                sq_out[inst * M + i] = acc;
            }
        }
    }
}

void ExplicitOperator::do_transpose(std::span<const double> lin_in, std::span<const double> sq_in,
                                    std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const {
    const std::size_t M = rows(), N = cols();
    std::fill(lin_out.begin(), lin_out.end(), 0.0);
    std::fill(sq_out.begin(), sq_out.end(), 0.0);
    for (std::size_t inst = 0; inst < batch; ++inst) {
        for (std::size_t i = 0; i < M; ++i) {
            const double* f = entries_.data() + i * N;
            if (!lin_out.empty()) {
                const double x = lin_in[inst * M + i];
                for (std::size_t j = 0; j < N; ++j) lin_out[inst * N + j] += f[j] * x;
            }
            if (!sq_out.empty()) {
                const double x = sq_in[inst * M + i];
                for (std::size_t j = 0; j < N; ++j) sq_out[inst * N + j] += f[j] * f[j] * x;
            }
        }
    }
}

} // namespace ssdm
