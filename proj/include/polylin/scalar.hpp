#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "polylin/rational.hpp"

namespace polylin {

enum class Backend : std::uint8_t { Float64 = 0, ExactRational = 1 };

template <typename S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr Backend backend = Backend::Float64;
    static constexpr std::string_view name = "float";

    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double from_int(std::int64_t v) { return static_cast<double>(v); }
    static double from_ratio(std::int64_t p, std::int64_t q) {
        return static_cast<double>(p) / static_cast<double>(q);
    }
    static double from_double(double v) { return v; }
    static double to_double(double v) { return v; }
    static bool is_zero(double v) { return v == 0.0; }
    static double abs(double v) { return std::fabs(v); }
    static double parse(std::string_view text);
    static std::string format(double v);
};

template <>
struct ScalarTraits<Rational> {
    static constexpr Backend backend = Backend::ExactRational;
    static constexpr std::string_view name = "exact";

    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational from_int(std::int64_t v) { return Rational(v); }
    static Rational from_ratio(std::int64_t p, std::int64_t q) { return Rational(p, q); }
    /// Exact value of the binary64 input.
    static Rational from_double(double v) { return Rational::from_double(v); }
    static double to_double(const Rational& v) { return v.to_double(); }
    static bool is_zero(const Rational& v) { return v.is_zero(); }
    static Rational abs(const Rational& v) { return v.abs(); }
    static Rational parse(std::string_view text) { return Rational::parse(text); }
    static std::string format(const Rational& v) { return v.str(); }
};

template <typename S>
concept Scalar = requires { ScalarTraits<S>::backend; };

template <Scalar S>
S pow_int(S base, std::uint64_t exponent) {
    S result = ScalarTraits<S>::one();
    while (exponent > 0) {
        if (exponent & 1U) result *= base;
        exponent >>= 1U;
        if (exponent > 0) base *= base;
    }
    return result;
}

/// Integer power for small exponents; throws on overflow.
std::uint64_t ipow(std::uint64_t base, std::uint64_t exponent);

}  // namespace polylin
