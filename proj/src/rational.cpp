#include "revpomdp/rational.hpp"

#include <cctype>

#include "revpomdp/errors.hpp"

namespace revpomdp {

namespace {

/// Leading zeros would make the big-integer reader treat the text as octal.
std::string strip_zeros(std::string_view s) {
    while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
    return std::string(s);
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

std::optional<BigInt> parse_integer(std::string_view s) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s) || s.size() > 4000) return std::nullopt;
    BigInt value{strip_zeros(s)};
    return negative ? BigInt(-value) : value;
}

BigInt pow10(std::size_t exponent) {
    BigInt result = 1;
    for (std::size_t i = 0; i < exponent; ++i) result *= 10;
    return result;
}

std::optional<Rational> parse_decimal(std::string_view s) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        auto exp_text = s.substr(e + 1);
        bool exp_negative = false;
        if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
            exp_negative = exp_text.front() == '-';
            exp_text.remove_prefix(1);
        }
        if (!all_digits(exp_text) || exp_text.size() > 4) return std::nullopt;
        exponent = std::stol(std::string(exp_text));
        if (exp_negative) exponent = -exponent;
        s = s.substr(0, e);
    }
    std::string digits;
    auto dot = s.find('.');
    if (dot == std::string_view::npos) {
        if (!all_digits(s)) return std::nullopt;
        digits = std::string(s);
    } else {
        auto whole = s.substr(0, dot);
        auto frac = s.substr(dot + 1);
        if (whole.empty() && frac.empty()) return std::nullopt;
        if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)))
            return std::nullopt;
        digits = std::string(whole) + std::string(frac);
        exponent -= static_cast<long>(frac.size());
    }
    if (digits.empty() || digits.size() > 4000) return std::nullopt;
    Rational value{BigInt(strip_zeros(digits))};
    if (exponent > 0)
        value *= Rational(pow10(static_cast<std::size_t>(exponent)));
    else if (exponent < 0)
        value /= Rational(pow10(static_cast<std::size_t>(-exponent)));
    return negative ? Rational(-value) : value;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto num = parse_integer(text.substr(0, slash));
        auto den = parse_integer(text.substr(slash + 1));
        if (!num || !den || *den == 0) return std::nullopt;
        return Rational(*num, *den);
    }
    return parse_decimal(text);
}

std::string to_string(const Rational& value) {
    const auto num = boost::multiprecision::numerator(value);
    const auto den = boost::multiprecision::denominator(value);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

BigInt floor(const Rational& value) {
    const BigInt num = boost::multiprecision::numerator(value);
    const BigInt den = boost::multiprecision::denominator(value);
    BigInt q = num / den;  // truncates toward zero
    if (num < 0 && q * den != num) q -= 1;
    return q;
}

BigInt ceil(const Rational& value) {
    BigInt f = floor(value);
    if (Rational(f) == value) return f;
    return f + 1;
}

}  // namespace revpomdp
