#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cexforge {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad state id, illegal session action, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class LabelNotFound : public Error {
public:
    explicit LabelNotFound(const std::string& label)
        : Error("label not found: " + label), label_(label) {}

    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

} // namespace cexforge
