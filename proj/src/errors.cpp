#include "revpomdp/errors.hpp"

namespace revpomdp {

namespace {

std::string summarize(const std::vector<Violation>& violations) {
    std::string out = "model validation failed";
    for (const auto& v : violations) out += "\n  - " + v.message;
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(summarize(violations)), violations_(std::move(violations)) {}

ParseError::ParseError(std::string message, std::size_t line, std::size_t column)
    : Error("parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      detail_(std::move(message)),
      line_(line),
      column_(column) {}

}  // namespace revpomdp
