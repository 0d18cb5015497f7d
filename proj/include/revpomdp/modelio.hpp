#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "revpomdp/model.hpp"

namespace revpomdp {

/// Reads a model document without semantic validation. Throws ParseError
/// (with 1-based line and column) on malformed syntax, wrong value types,
/// unknown or duplicate keys, and duplicate transition entries.
RawPomdp parse_raw_model(std::string_view text);

/// parse_raw_model followed by validate(); semantic problems surface as
/// ValidationError.
Pomdp parse_model(std::string_view text);

/// Canonical document: sorted keys, rationals in lowest terms, names in
/// declaration order, transitions sorted by (from, action, to, signal).
std::string serialize_model(const Pomdp& model);

/// Reads and parses a file; I/O failures are reported as ParseError at 0:0.
Pomdp load_model(const std::filesystem::path& path);

}  // namespace revpomdp
