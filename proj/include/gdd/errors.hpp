#pragma once

#include <stdexcept>
#include <string>

namespace gdd {

// Input could not be read or parsed (bad file, malformed header, ...).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input parsed but violates a structural contract (disconnected mesh,
// degenerate face, index out of range, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical procedure failed (rank collapse, eigensolver stall, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace gdd
