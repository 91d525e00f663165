#include "ciprec/persist.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>

#include "ciprec/types.hpp"

namespace ciprec::persist {

namespace {

std::array<unsigned char, 8> to_le(std::uint64_t bits) {
    std::array<unsigned char, 8> bytes{};
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    return bytes;
}

std::uint64_t from_le(const std::array<unsigned char, 8>& bytes) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    return bits;
}

std::uint64_t read_raw(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) throw Error("truncated binary section");
    return from_le(bytes);
}

void write_raw(std::ostream& out, std::uint64_t bits) {
    const auto bytes = to_le(bits);
    out.write(reinterpret_cast<const char*>(bytes.data()), 8);
}

}  // namespace

void write_header(std::ostream& out, std::string_view kind) { out << kMagic << ' ' << kind << '\n'; }

std::string read_header(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string prefix = std::string(kMagic) + ' ';
        if (line.rfind(prefix, 0) != 0) throw Error("missing CIPREC1 version magic, got '" + line + "'");
        return line.substr(prefix.size());
    }
    throw Error("unexpected end of input while looking for a CIPREC1 header");
}

void expect_header(std::istream& in, std::string_view kind) {
    const auto got = read_header(in);
    if (got != kind) throw Error("expected CIPREC1 " + std::string(kind) + " section, got '" + got + "'");
}

std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

void expect_word(std::istream& in, std::string_view word) {
    std::string got;
    if (!(in >> got) || got != word) throw Error("expected '" + std::string(word) + "', got '" + got + "'");
}

void write_i64(std::ostream& out, std::int64_t value) { write_raw(out, static_cast<std::uint64_t>(value)); }

void write_f64(std::ostream& out, double value) { write_raw(out, std::bit_cast<std::uint64_t>(value)); }

std::int64_t read_i64(std::istream& in) { return static_cast<std::int64_t>(read_raw(in)); }

double read_f64(std::istream& in) { return std::bit_cast<double>(read_raw(in)); }

}  // namespace ciprec::persist
