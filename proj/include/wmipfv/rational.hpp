/**
 * Exact rational arithmetic used throughout the logic, enumeration and
 * integration layers.
 */
#ifndef WMIPFV_RATIONAL_HPP
#define WMIPFV_RATIONAL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

#include "errors.hpp"

namespace wmipfv {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

inline Integer numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Integer denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

inline bool is_integer(const Rational& r) { return denominator_of(r) == 1; }

inline std::size_t hash_of(const Rational& r) { return boost::multiprecision::hash_value(r); }

/** Printed as `p` or `p/q` in lowest terms. */
inline std::string to_string(const Rational& r) { return r.str(); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/** Exact value of a binary double (every finite double is a dyadic rational). */
inline Rational from_double(double d)
{
    if (!std::isfinite(d))
        throw ParseError("non-finite floating point value cannot be converted to a rational");
    return Rational(d);
}

/**
 * Parses `p`, `p/q`, or a decimal literal such as `-0.125` or `1.5e-3`.
 * Decimal literals are read exactly as the decimal they spell, not through a
 * binary double.
 */
inline Rational parse_rational(std::string_view text)
{
    std::string s(text);
    auto fail = [&]() -> Rational { throw ParseError("malformed rational literal '" + s + "'"); };
    if (s.empty())
        return fail();
    if (auto slash = s.find('/'); slash != std::string::npos) {
        std::string p = s.substr(0, slash), q = s.substr(slash + 1);
        auto digits = [](const std::string& t, bool allow_sign) {
            std::size_t i = 0;
            if (allow_sign && i < t.size() && (t[i] == '-' || t[i] == '+'))
                ++i;
            if (i == t.size())
                return false;
            for (; i < t.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(t[i])))
                    return false;
            return true;
        };
        if (!digits(p, true) || !digits(q, false))
            return fail();
        Integer qi(q);
        if (qi == 0)
            throw ParseError("zero denominator in rational literal '" + s + "'");
        if (p[0] == '+')
            p = p.substr(1);
        return Rational(Integer(p), qi);
    }
    std::size_t i = 0;
    bool negative = false;
    if (s[i] == '-' || s[i] == '+') {
        negative = s[i] == '-';
        ++i;
    }
    std::string mantissa;
    long long scale = 0;
    bool seen_digit = false, seen_dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mantissa.push_back(c);
            seen_digit = true;
            if (seen_dot)
                --scale;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit)
        return fail();
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E')
            return fail();
        ++i;
        std::string exponent = s.substr(i);
        if (exponent.empty())
            return fail();
        try {
            std::size_t used = 0;
            long long e = std::stoll(exponent, &used);
            if (used != exponent.size())
                return fail();
            scale += e;
        } catch (const std::exception&) {
            return fail();
        }
    }
    Rational value{Integer(mantissa)};
    Integer ten_power = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
    if (scale < 0)
        value /= Rational(ten_power);
    else
        value *= Rational(ten_power);
    return negative ? Rational(-value) : value;
}

/** Rounds to the nearest multiple of 10^-digits, ties away from zero. */
inline Rational round_decimal(double value, int digits)
{
    double scale = std::pow(10.0, digits);
    double scaled = std::round(value * scale);
    return Rational(Integer(static_cast<long long>(scaled)), Integer(static_cast<long long>(scale)));
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline Integer gcd(const Integer& a, const Integer& b) { return boost::multiprecision::gcd(a, b); }
inline Integer lcm(const Integer& a, const Integer& b) { return boost::multiprecision::lcm(a, b); }

inline Rational factorial(unsigned n)
{
    Integer f = 1;
    for (unsigned i = 2; i <= n; ++i)
        f *= i;
    return Rational(f);
}

} // namespace wmipfv

#endif
