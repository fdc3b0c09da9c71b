#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed listing. Line and column are 1-based; column 0 means "whole line".
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error("line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column), message_(message) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

class AnalysisError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace acs
