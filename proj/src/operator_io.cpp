#include <array>
#include <cstring>
#include <fstream>

#include "ssdm/errors.hpp"
#include "ssdm/operators.hpp"

namespace ssdm {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'S', 'D', 'M', 'O', 'P', 'v', '1'};

// Fixed little-endian encoding, independent of host byte order.
template <typename T>
void put(std::ofstream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    std::array<unsigned char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get(std::ifstream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw MalformedInput("operator file truncated");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

} // namespace

void dump_operator(const SensingOperator& op, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInput("cannot write operator file " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(op.kind()));
    put<std::uint32_t>(out, 0);
    put<std::uint64_t>(out, op.rows());
    put<std::uint64_t>(out, op.cols());
    put<std::uint64_t>(out, op.sections());
    put<std::uint64_t>(out, op.seed());
    for (double v : op.materialize()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put<std::uint64_t>(out, bits);
    }
    if (!out) throw MalformedInput("failed writing operator file " + path.string());
}

std::unique_ptr<ExplicitOperator> load_operator(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedInput("cannot open operator file " + path.string());
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw MalformedInput("not an operator file");
    const auto kind = get<std::uint32_t>(in);
    if (kind > static_cast<std::uint32_t>(OperatorKind::Explicit)) throw MalformedInput("unknown operator kind");
    get<std::uint32_t>(in);
    const auto M = get<std::uint64_t>(in);
    const auto N = get<std::uint64_t>(in);
    const auto L = get<std::uint64_t>(in);
    const auto seed = get<std::uint64_t>(in);
    if (M == 0 || N == 0 || M > (std::uint64_t{1} << 40) / N) throw MalformedInput("operator file has bad dimensions");
    std::vector<double> entries(M * N);
    for (auto& v : entries) {
        const auto bits = get<std::uint64_t>(in);
        std::memcpy(&v, &bits, sizeof v);
    }
    return std::make_unique<ExplicitOperator>(M, N, L, static_cast<OperatorKind>(kind), seed, std::move(entries));
}

} // namespace ssdm
