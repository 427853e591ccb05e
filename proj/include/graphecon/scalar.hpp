#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace graphecon {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Exact integer square root; nullopt when n is not a perfect square.
inline std::optional<BigInt> exact_isqrt(const BigInt& n) {
    if (n < 0) return std::nullopt;
    BigInt r = boost::multiprecision::sqrt(n);
    if (r * r == n) return r;
    return std::nullopt;
}

// Exact rational square root; nullopt unless both numerator and
// denominator of the reduced fraction are perfect squares.
inline std::optional<Rational> exact_sqrt(const Rational& q) {
    auto num = exact_isqrt(numerator(q));
    auto den = exact_isqrt(denominator(q));
    if (!num || !den) return std::nullopt;
    return Rational(*num, *den);
}

inline std::string rational_to_string(const Rational& q) {
    std::ostringstream out;
    out << numerator(q);
    if (denominator(q) != 1) out << "/" << denominator(q);
    return out.str();
}

// Parses "num", "num/den", or a decimal like "-1.25" into an exact rational.
inline Rational rational_from_string(const std::string& s) {
    auto bad = [&] { return std::invalid_argument("cannot parse rational: '" + s + "'"); };
    if (s.empty()) throw bad();
    auto slash = s.find('/');
    try {
        if (slash != std::string::npos) {
            BigInt num(s.substr(0, slash));
            BigInt den(s.substr(slash + 1));
            if (den == 0) throw bad();
            return Rational(num, den);
        }
        auto dot = s.find('.');
        if (dot == std::string::npos) return Rational(BigInt(s));
        std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
        bool neg = !head.empty() && head[0] == '-';
        if (head == "-" || head.empty()) head = neg ? "-0" : "0";
        if (tail.empty()) return Rational(BigInt(head));
        BigInt scale = 1;
        for (size_t i = 0; i < tail.size(); ++i) scale *= 10;
        BigInt whole(head), frac(tail);
        Rational r = Rational(whole) + (neg ? -1 : 1) * Rational(frac, scale);
        return r;
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw bad();
    }
}

// Numeric-mode abstraction: the engine and verifiers are templated on T,
// either Rational (exact mode) or double (float mode, tolerance-based
// comparisons). tol is ignored in exact mode unless explicitly nonzero.
template <class T>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static Rational default_tol() { return Rational(0); }
    static Rational from_rational(const Rational& q) { return q; }
    static bool eq(const Rational& a, const Rational& b, const Rational& tol) {
        return tol == 0 ? a == b : abs(a - b) <= tol;
    }
    static bool leq(const Rational& a, const Rational& b, const Rational& tol) {
        return a <= b + tol;
    }
    static double to_double(const Rational& q) { return q.convert_to<double>(); }
    static std::string to_string(const Rational& q) { return rational_to_string(q); }
    static Rational parse(const std::string& s) { return rational_from_string(s); }
    static const char* mode_name() { return "exact"; }
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double default_tol() { return 1e-9; }
    static double from_rational(const Rational& q) { return q.convert_to<double>(); }
    static bool eq(double a, double b, double tol) { return std::abs(a - b) <= tol; }
    static bool leq(double a, double b, double tol) { return a <= b + tol; }
    static double to_double(double x) { return x; }
    static std::string to_string(double x) {
        std::ostringstream out;
        out.precision(17);
        out << x;
        return out.str();
    }
    static double parse(const std::string& s) { return std::stod(s); }
    static const char* mode_name() { return "float"; }
};

}  // namespace graphecon
