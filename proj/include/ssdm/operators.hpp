#pragma once

// Coding matrices behind one interface. GAMP needs four products per
// iteration: F v, F^T w and the same with the entrywise square F∘2. They come
// in fused pairs (F v with F∘2 v', F^T w with (F∘2)^T w') so an operator that
// regenerates its entries pays for one pass per pair.
//
// All products are batched: `batch` independent vectors stored back to back.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ssdm {

enum class OperatorKind : std::uint32_t {
    DenseGaussian = 0,
    Hadamard = 1,
    SpatiallyCoupled = 2,
    Explicit = 3,
};

std::string to_string(OperatorKind kind);
OperatorKind parse_operator_kind(const std::string& name);

class SensingOperator {
public:
    SensingOperator(std::size_t rows, std::size_t cols, std::size_t sections, OperatorKind kind,
                    std::uint64_t seed)
        : rows_(rows), cols_(cols), sections_(sections), kind_(kind), seed_(seed) {}
    virtual ~SensingOperator() = default;

    SensingOperator(const SensingOperator&) = delete;
    SensingOperator& operator=(const SensingOperator&) = delete;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    /// L, the number of signal sections (cols / B).
    std::size_t sections() const noexcept { return sections_; }
    OperatorKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// lin_out = F lin_in and sq_out = F∘2 sq_in, for `batch` stacked inputs.
    /// Pass an empty input/output pair to skip that product.
    void forward_pair(std::span<const double> lin_in, std::span<const double> sq_in,
                      std::span<double> lin_out, std::span<double> sq_out, std::size_t batch = 1) const;

    /// lin_out = F^T lin_in and sq_out = (F∘2)^T sq_in.
    void transpose_pair(std::span<const double> lin_in, std::span<const double> sq_in,
                        std::span<double> lin_out, std::span<double> sq_out, std::size_t batch = 1) const;

    /// Row-major dense copy of F.
    virtual std::vector<double> materialize() const;

protected:
    virtual void do_forward(std::span<const double> lin_in, std::span<const double> sq_in,
                            std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const = 0;
    virtual void do_transpose(std::span<const double> lin_in, std::span<const double> sq_in,
                              std::span<double> lin_out, std::span<double> sq_out, std::size_t batch) const = 0;

private:
    std::size_t rows_, cols_, sections_;
    OperatorKind kind_;
    std::uint64_t seed_;
};

std::vector<double> forward(const SensingOperator& op, std::span<const double> v);
std::vector<double> transpose(const SensingOperator& op, std::span<const double> w);
std::vector<double> forward_sq(const SensingOperator& op, std::span<const double> v);
std::vector<double> transpose_sq(const SensingOperator& op, std::span<const double> w);

/// Entries of the Gaussian kinds are generated from (seed, block, row, col)
/// and either cached as floats or regenerated on every product. Both paths
/// yield bit-identical entries.
struct StorageOptions {
    /// Cache entries when they fit in this many bytes. Defaults to the
    /// SSDM_OPERATOR_CACHE_MB environment variable, else 1024 MiB.
    std::size_t cache_bytes = default_cache_bytes();

    static std::size_t default_cache_bytes();
};

/// Dense M x N matrix with i.i.d. N(0, 1/L) entries.
std::unique_ptr<SensingOperator> make_gaussian(std::size_t M, std::size_t N, std::size_t L, std::uint64_t seed,
                                               StorageOptions storage = {});

struct CouplingParams {
    std::size_t block_rows = 33;  // Lr
    std::size_t block_cols = 32;  // Lc
    std::size_t backward = 2;     // wb
    std::size_t forward = 2;      // wf
    double seed_rate = 1.2;       // beta >= 1, inflates the first block-row
    double strength = 0.1;        // J in (0, 1], off-diagonal weight

    /// Throws MalformedInput on inconsistent parameters.
    void validate() const;
};

/// Variance weights gamma[r][c] (row-major Lr x Lc): diagonal weight 1,
/// in-window weight J, zero elsewhere, each block-row normalized to sum 1.
std::vector<double> coupling_variances(const CouplingParams& params);

/// Rows per block-row: ceil(beta * M_block) first, M_block after.
std::vector<std::size_t> coupled_block_row_sizes(const CouplingParams& params, std::size_t M_block);

/// Block-banded matrix; block (r, c) is nonzero iff r - wb <= c <= r + wf and
/// holds i.i.d. N(0, gamma[r][c] / L_block) entries. The operator reports
/// Lc * L_block sections.
std::unique_ptr<SensingOperator> make_coupled(const CouplingParams& params, std::size_t M_block, std::size_t N_block,
                                              std::size_t L_block, std::uint64_t seed, StorageOptions storage = {});

/// Sub-sampled Walsh-Hadamard operator F = H_sel Pi D: D gives every column a
/// random sign and the scale 1/sqrt(L), Pi scatters the columns by a random
/// injection into the N' = 2^k >= N positions, and M distinct non-constant
/// rows of the N' x N' Hadamard matrix are kept. Products cost O(N' log N').
class HadamardOperator final : public SensingOperator {
public:
    HadamardOperator(std::size_t M, std::size_t N, std::size_t L, std::uint64_t seed);

    std::size_t padded_size() const noexcept { return padded_; }
    /// Hadamard row index of each output, all in [1, N').
    std::span<const std::uint32_t> row_indices() const noexcept { return rows_sel_; }
    /// Position in [0, N') of each input column.
    std::span<const std::uint32_t> column_positions() const noexcept { return col_pos_; }
    /// Signed scale +-1/sqrt(L) of each input column.
    std::span<const double> column_signs() const noexcept { return col_sign_; }
    double scale() const noexcept { return scale_; }

protected:
    void do_forward(std::span<const double> lin_in, std::span<const double> sq_in, std::span<double> lin_out,
                    std::span<double> sq_out, std::size_t batch) const override;
    void do_transpose(std::span<const double> lin_in, std::span<const double> sq_in, std::span<double> lin_out,
                      std::span<double> sq_out, std::size_t batch) const override;

private:
    std::size_t padded_;
    double scale_;
    std::vector<std::uint32_t> rows_sel_;
    std::vector<std::uint32_t> col_pos_;
    std::vector<double> col_sign_;
};

std::unique_ptr<SensingOperator> make_hadamard(std::size_t M, std::size_t N, std::size_t L, std::uint64_t seed);

/// In-place unnormalized fast Walsh-Hadamard transform; size a power of two.
void fwht(std::span<double> data);

/// Explicit row-major matrix, used for operators loaded from disk.
class ExplicitOperator final : public SensingOperator {
public:
    ExplicitOperator(std::size_t rows, std::size_t cols, std::size_t sections, OperatorKind kind,
                     std::uint64_t seed, std::vector<double> entries);

    std::span<const double> entries() const noexcept { return entries_; }
    std::vector<double> materialize() const override { return entries_; }

protected:
    void do_forward(std::span<const double> lin_in, std::span<const double> sq_in, std::span<double> lin_out,
                    std::span<double> sq_out, std::size_t batch) const override;
    void do_transpose(std::span<const double> lin_in, std::span<const double> sq_in, std::span<double> lin_out,
                      std::span<double> sq_out, std::size_t batch) const override;

private:
    std::vector<double> entries_;
};

/// Binary dump: 8-byte magic "SSDMOPv1", then little-endian u32 kind,
/// u32 reserved (0), u64 M, u64 N, u64 L, u64 seed, then M*N row-major f64.
void dump_operator(const SensingOperator& op, const std::filesystem::path& path);
std::unique_ptr<ExplicitOperator> load_operator(const std::filesystem::path& path);

} // namespace ssdm
