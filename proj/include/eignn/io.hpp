#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eignn {

// All binary payloads are little-endian IEEE-754 doubles / 64-bit ints.

inline std::uint64_t byteswap64(std::uint64_t x) {
    return ((x & 0x00000000000000ffULL) << 56) | ((x & 0x000000000000ff00ULL) << 40) |
           ((x & 0x0000000000ff0000ULL) << 24) | ((x & 0x00000000ff000000ULL) << 8) |
           ((x & 0x000000ff00000000ULL) >> 8) | ((x & 0x0000ff0000000000ULL) >> 24) |
           ((x & 0x00ff000000000000ULL) >> 40) | ((x & 0xff00000000000000ULL) >> 56);
}

inline std::uint64_t to_le(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::big) return byteswap64(x);
    return x;
}

inline void write_u64(std::ostream& os, std::uint64_t x) {
    const std::uint64_t le = to_le(x);
    os.write(reinterpret_cast<const char*>(&le), sizeof(le));
}

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t le = 0;
    is.read(reinterpret_cast<char*>(&le), sizeof(le));
    if (!is) throw std::runtime_error("read_u64: unexpected end of file");
    return to_le(le);
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(os, bits);
}

inline double read_f64(std::istream& is) {
    const std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

inline void write_f64_span(std::ostream& os, const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_f64(os, data[i]);
}

inline void read_f64_span(std::istream& is, double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f64(is);
}

/// Shortest round-trippable decimal form of a double, for text headers and CSV.
inline std::string fmt_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string read_header_line(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("truncated file: missing header line");
    return line;
}

inline void expect_token(std::istream& line_stream, const std::string& expected) {
    std::string tok;
    if (!(line_stream >> tok) || tok != expected)
        throw std::runtime_error("malformed header: expected '" + expected + "'");
}

}  // namespace eignn
