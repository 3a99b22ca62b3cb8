#pragma once

// Little-endian primitives for the dump formats. Not installed.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "acc/error.hpp"

namespace acc::detail {

template <typename U>
U to_little(U v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        U out = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xFF));
        return out;
    }
}

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void write_u32(std::ostream& out, std::uint32_t v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u16_array(std::ostream& out, std::span<const std::uint16_t> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (auto v : values) {
            v = to_little(v);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
}

inline void write_f32_array(std::ostream& out, std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (float f : values) {
            auto bits = to_little(std::bit_cast<std::uint32_t>(f));
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
}

[[noreturn]] inline void truncated(const std::string& path) {
    throw Error(ErrorCode::FormatError, path + ": truncated dump");
}

inline std::uint8_t read_u8(std::istream& in, const std::string& path) {
    char c;
    if (!in.get(c)) truncated(path);
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) truncated(path);
    return to_little(v);
}

inline void read_u16_array(std::istream& in, std::span<std::uint16_t> out, const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()))) truncated(path);
    if constexpr (std::endian::native != std::endian::little)
        for (auto& v : out) v = to_little(v);
}

inline void read_f32_array(std::istream& in, std::span<float> out, const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()))) truncated(path);
    if constexpr (std::endian::native != std::endian::little)
        for (auto& f : out) f = std::bit_cast<float>(to_little(std::bit_cast<std::uint32_t>(f)));
}

} // namespace acc::detail
