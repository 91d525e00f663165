#pragma once

// Shared pieces of the CIPREC1 persistence formats: section headers,
// shortest round-trip text for doubles, little-endian binary scalars.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace ciprec::persist {

inline constexpr std::string_view kMagic = "CIPREC1";

// Writes "CIPREC1 <kind>\n".
void write_header(std::ostream& out, std::string_view kind);
// Consumes the next non-empty line and checks it is "CIPREC1 <kind>".
void expect_header(std::istream& in, std::string_view kind);
// Reads the next non-empty line and returns its kind ("CIPREC1 <kind>").
std::string read_header(std::istream& in);

std::string format_double(double value);
void expect_word(std::istream& in, std::string_view word);

void write_i64(std::ostream& out, std::int64_t value);
void write_f64(std::ostream& out, double value);
std::int64_t read_i64(std::istream& in);
double read_f64(std::istream& in);

}  // namespace ciprec::persist
