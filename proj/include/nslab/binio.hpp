#pragma once

// Little-/big-endian primitive readers and writers over iostreams.

#include "nslab/errors.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace nslab::binio {

template <class UInt>
void put_le(std::ostream& os, UInt v) {
    char b[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, sizeof(UInt));
}

template <class UInt>
void put_be(std::ostream& os, UInt v) {
    char b[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i)
        b[i] = static_cast<char>((v >> (8 * (sizeof(UInt) - 1 - i))) & 0xff);
    os.write(b, sizeof(UInt));
}

inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

inline void put_f64s(std::ostream& os, std::span<const double> vs) {
    for (double v : vs) put_f64(os, v);
}

class Reader {
public:
    Reader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

    void bytes(char* dst, std::size_t n) {
        const auto at = offset_;
        is_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) throw FormatError(what_ + ": truncated", at);
        offset_ += static_cast<long long>(n);
    }

    template <class UInt>
    UInt le() {
        unsigned char b[sizeof(UInt)];
        bytes(reinterpret_cast<char*>(b), sizeof(UInt));
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(b[i]) << (8 * i);
        return v;
    }

    template <class UInt>
    UInt be() {
        unsigned char b[sizeof(UInt)];
        bytes(reinterpret_cast<char*>(b), sizeof(UInt));
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) v = static_cast<UInt>((v << 8) | b[i]);
        return v;
    }

    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

    std::vector<double> f64s(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = f64();
        return out;
    }

    long long offset() const { return offset_; }
    const std::string& what() const { return what_; }

private:
    std::istream& is_;
    std::string what_;
    long long offset_ = 0;
};

} // namespace nslab::binio
