#pragma once

// Minimal RFC 4180 writer: header row, comma separator, '.' decimal point,
// fields quoted only when they contain a comma, quote or line break. Doubles
// use the shortest round-trip representation, independent of the locale.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace ssdm {

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    template <class... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((emit(fields, first)), ...);
        out_ << '\n';
    }

    static std::string escape(std::string_view field) {
        if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
        std::string quoted = "\"";
        for (char c : field) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    }

    static std::string format(double v) {
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    }

private:
    template <class T>
    void emit(const T& value, bool& first) {
        if (!first) out_ << ',';
        first = false;
        if constexpr (std::is_same_v<T, bool>) {
            out_ << (value ? "1" : "0");
        } else if constexpr (std::is_floating_point_v<T>) {
            out_ << format(static_cast<double>(value));
        } else if constexpr (std::is_integral_v<T>) {
            out_ << value;
        } else {
            out_ << escape(std::string_view(value));
        }
    }

    std::ostream& out_;
};

} // namespace ssdm
