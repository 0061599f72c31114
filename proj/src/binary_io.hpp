#pragma once

// Shared plumbing for the on-disk formats: a text header of
// newline-terminated lines followed by a little-endian binary payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mixco/tensor.hpp"

namespace mixco::io {

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

class ByteWriter {
public:
    void line(std::string_view text);
    void f64(double v);
    void i32(std::int32_t v);
    void tensor(const Tensor& t);

    [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    /// Next header line without its '\n'. Throws FormatError at end of data.
    std::string line();
    /// Splits the next line on spaces and checks the first token.
    std::vector<std::string> keyed_line(std::string_view key);

    double f64();
    std::int32_t i32();
    /// Fills a tensor of the given shape from the payload.
    Tensor tensor(std::vector<std::size_t> shape);

    [[nodiscard]] std::size_t offset() const noexcept { return pos_; }
    [[nodiscard]] bool at_end() const noexcept { return pos_ == data_.size(); }
    void expect_end() const;

private:
    void need(std::size_t bytes, const char* what) const;

    std::string_view data_;
    std::size_t pos_ = 0;
};

/// Strict parsers used on header tokens; FormatError at `offset` on failure.
std::uint64_t parse_u64(const std::string& token, std::size_t offset);
double parse_hex_double(const std::string& token, std::size_t offset);
std::string format_hex_double(double v);

}  // namespace mixco::io
