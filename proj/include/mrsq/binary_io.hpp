#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <type_traits>

#include "mrsq/error.hpp"

namespace mrsq {

namespace detail {

class ByteWriter {
public:
    template <class T>
    void put(T v)
    {
        static_assert(std::is_arithmetic_v<T>);
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
        const U bits = std::bit_cast<U>(v);
        for (std::size_t b = 0; b < sizeof(T); ++b) bytes_.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
    void put_bytes(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }
    const std::string& bytes() const noexcept { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    template <class T>
    T get()
    {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
        need(sizeof(T));
        U bits = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) {
            bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }
    std::string get_bytes(std::size_t n)
    {
        need(n);
        std::string out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    void need(std::size_t n) const
    {
        if (remaining() < n) throw TruncatedFileError(what_ + ": file is truncated");
    }

private:
    const std::string& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline void write_file(const std::string& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + path + "' failed");
}

} // namespace detail

} // namespace mrsq
