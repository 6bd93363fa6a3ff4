#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ema {

// Malformed input text (EST, CSV, BVH, OBJ, PLY, JSON). Carries the
// 1-based line number when one is known, 0 otherwise.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a precondition of an operation.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate geometry: coplanar hulls, collinear registration sets,
// undefined hinge angles.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ema
