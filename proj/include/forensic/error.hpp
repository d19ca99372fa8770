#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forensic {

// Malformed input record. line is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : std::runtime_error(format(source, line, what)), source_(std::move(source)), line_(line)
    {}

    const std::string& source() const { return source_; }
    std::size_t line() const { return line_; }

private:
    static std::string format(const std::string& source, std::size_t line, const std::string& what)
    {
        std::string msg = source;
        if (line > 0) msg += ":" + std::to_string(line);
        return msg + ": " + what;
    }

    std::string source_;
    std::size_t line_;
};

// Input parsed but violates a domain invariant (unknown id, bad benefit, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated an operation precondition (investigated technique, k out of range, ...).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace forensic
