#include "binary_io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixco/errors.hpp"

namespace mixco::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError("cannot open '" + path.string() + "' for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        throw FileError("write to '" + path.string() + "' failed");
    }
}

void ByteWriter::line(std::string_view text) {
    buf_.append(text);
    buf_.push_back('\n');
}

void ByteWriter::f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        buf_.push_back(static_cast<char>((bits >> (8 * b)) & 0xffU));
    }
}

void ByteWriter::i32(std::int32_t v) {
    const auto bits = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
        buf_.push_back(static_cast<char>((bits >> (8 * b)) & 0xffU));
    }
}

void ByteWriter::tensor(const Tensor& t) {
    for (double v : t.values()) {
        f64(v);
    }
}

void ByteReader::need(std::size_t bytes, const char* what) const {
    if (data_.size() - pos_ < bytes) {
        throw FormatError(std::string("truncated data while reading ") + what, pos_);
    }
}

std::string ByteReader::line() {
    const auto end = data_.find('\n', pos_);
    if (end == std::string_view::npos) {
        throw FormatError("unterminated or missing header line", pos_);
    }
    std::string out(data_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
}

std::vector<std::string> ByteReader::keyed_line(std::string_view key) {
    const std::size_t start = pos_;
    const std::string text = line();
    std::vector<std::string> tokens;
    std::istringstream ss(text);
    for (std::string tok; ss >> tok;) {
        tokens.push_back(tok);
    }
    if (tokens.empty() || tokens.front() != key) {
        throw FormatError("expected header field '" + std::string(key) + "'", start);
    }
    return tokens;
}

double ByteReader::f64() {
    need(8, "f64");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
}

std::int32_t ByteReader::i32() {
    need(4, "i32");
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    }
    pos_ += 4;
    return static_cast<std::int32_t>(bits);
}

Tensor ByteReader::tensor(std::vector<std::size_t> shape) {
    std::size_t count = 1;
    for (std::size_t s : shape) {
        count *= s;
    }
    need(count * 8, "tensor payload");
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
        v = f64();
    }
    return t;
}

void ByteReader::expect_end() const {
    if (!at_end()) {
        throw FormatError("unexpected trailing bytes", pos_);
    }
}

std::uint64_t parse_u64(const std::string& token, std::size_t offset) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError("invalid unsigned integer '" + token + "'", offset);
    }
    return v;
}

double parse_hex_double(const std::string& token, std::size_t offset) {
    // from_chars hex format takes no "0x" prefix and no sign handling of it.
    std::string_view s = token;
    bool negative = false;
    if (!s.empty() && s.front() == '-') {
        negative = true;
        s.remove_prefix(1);
    }
    if (s.starts_with("0x") || s.starts_with("0X")) {
        s.remove_prefix(2);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw FormatError("invalid hex float '" + token + "'", offset);
    }
    return negative ? -v : v;
}

std::string format_hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

}  // namespace mixco::io
