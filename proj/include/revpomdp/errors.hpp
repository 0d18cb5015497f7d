#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace revpomdp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One failed model invariant, located at (state, action) where applicable.
struct Violation {
    std::string message;
    std::optional<std::string> state;
    std::optional<std::string> action;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Syntax or structural error in a model document, 1-based position.
class ParseError : public Error {
public:
    ParseError(std::string message, std::size_t line, std::size_t column);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    std::size_t line_;
    std::size_t column_;
};

class NotRevealingError : public Error {
public:
    using Error::Error;
};

/// An optional model section (priorities, targets) is required but absent.
class MissingSectionError : public Error {
public:
    using Error::Error;
};

class ZeroProbabilitySignalError : public Error {
public:
    using Error::Error;
};

/// No grid point shares the belief's support at this resolution.
class GridResolutionError : public Error {
public:
    using Error::Error;
};

/// A configured ceiling (grid points, sweeps, oracle tree size) was exceeded.
class ResourceLimitError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace revpomdp
