#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "glovesim/error.hpp"

// Explicit little-endian scalar IO for the binary file formats. Writing
// byte-by-byte keeps the on-disk layout independent of host quirks.
namespace glovesim::binio {

inline void put_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}
inline void put_u16(std::ostream& os, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f32(std::ostream& os, float v) {
    put_u32(os, std::bit_cast<std::uint32_t>(v));
}
inline void put_i32(std::ostream& os, std::int32_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
}

inline std::uint8_t get_u8(std::istream& is) {
    const int c = is.get();
    if (c == std::istream::traits_type::eof()) throw io_error("unexpected end of file");
    return static_cast<std::uint8_t>(c);
}
inline std::uint16_t get_u16(std::istream& is) {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v = static_cast<std::uint16_t>(v | (std::uint16_t(get_u8(is)) << (8 * i)));
    return v;
}
inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(get_u8(is)) << (8 * i);
    return v;
}
inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(get_u8(is)) << (8 * i);
    return v;
}
inline float get_f32(std::istream& is) {
    return std::bit_cast<float>(get_u32(is));
}
inline std::int32_t get_i32(std::istream& is) {
    return static_cast<std::int32_t>(get_u32(is));
}

inline void put_magic(std::ostream& os, const char (&magic)[5]) {
    os.write(magic, 4);
}
inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
    char buf[4];
    is.read(buf, 4);
    if (!is || buf[0] != magic[0] || buf[1] != magic[1] || buf[2] != magic[2] || buf[3] != magic[3]) {
        throw io_error(std::string("not a ") + what + " file (bad magic)");
    }
}

}  // namespace glovesim::binio
