#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace revpomdp {

/// Exact rational number backed by GMP.
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// Parses "p/q", an integer, or a base-10 decimal ("0.125", "1e-3") exactly.
/// Returns nullopt on malformed text or zero denominator.
std::optional<Rational> parse_rational(std::string_view text);

/// Lowest-terms text: "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Smallest integer >= value.
BigInt ceil(const Rational& value);
/// Largest integer <= value.
BigInt floor(const Rational& value);

}  // namespace revpomdp
