#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ciprec {

// Raw ids as they appear in the source logs. Every model keeps its own
// dictionary, so ids from later update batches need no global remapping.
using UserId = std::int64_t;
using ItemId = std::int64_t;

// Seconds since the UNIX epoch.
using Timestamp = std::int64_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ciprec
