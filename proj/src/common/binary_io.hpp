#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "gsformer/errors.hpp"

// Little-endian primitive encoding shared by the checkpoint and dataset formats.
namespace gsf::binary {

template <typename U>
void write_uint(std::ostream& out, U value) {
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U read_uint(std::istream& in, const char* what) {
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
        throw data_error(std::string("truncated payload while reading ") + what);
    }
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

inline void write_f64(std::ostream& out, double v) { write_uint(out, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(read_uint<std::uint64_t>(in, what));
}
inline void write_f32(std::ostream& out, float v) { write_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline float read_f32(std::istream& in, const char* what) {
    return std::bit_cast<float>(read_uint<std::uint32_t>(in, what));
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& file) {
    char found[4] = {};
    if (!in.read(found, 4) || std::memcmp(found, magic, 4) != 0) {
        throw data_error("'" + file + "' is not a " + magic + " file (bad magic)");
    }
}

}  // namespace gsf::binary
