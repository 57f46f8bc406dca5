#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "lamp/error.hpp"

namespace lamp {

/// Little-endian encoder into an in-memory byte string.
class ByteWriter {
public:
    void bytes(std::string_view raw) { buffer_.append(raw); }
    void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
    }
    void u64(std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) u8(static_cast<std::uint8_t>(v >> s));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(std::span<const double> values) {
        for (double v : values) f64(v);
    }

    const std::string& str() const { return buffer_; }
    std::string release() { return std::move(buffer_); }

private:
    std::string buffer_;
};

/// Little-endian decoder with bounds checking; every failure is an IoError.
class ByteReader {
public:
    ByteReader(std::string_view data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::string_view bytes(std::size_t count) {
        require(count);
        auto out = data_.substr(pos_, count);
        pos_ += count;
        return out;
    }
    std::uint8_t u8() {
        require(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(u8()) << s;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int s = 0; s < 64; s += 8) v |= static_cast<std::uint64_t>(u8()) << s;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void f64s(std::span<double> out) {
        require(out.size() * 8);
        for (double& v : out) v = f64();
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0) {
            throw IoError(context_ + ": " + std::to_string(remaining()) + " trailing bytes");
        }
    }

private:
    void require(std::size_t count) const {
        if (data_.size() - pos_ < count) {
            throw IoError(context_ + ": unexpected end of data");
        }
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string context_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace lamp
