#include "polylin/scalar.hpp"

#include <charconv>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace polylin {

double ScalarTraits<double>::parse(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return Rational::parse(text).to_double();
    }
    std::string buf(text);
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(buf, &used);
    } catch (const std::exception&) {
        used = std::string::npos;
    }
    if (buf.empty() || used != buf.size()) {
        throw std::invalid_argument("malformed number: '" + buf + "'");
    }
    return value;
}

std::string ScalarTraits<double>::format(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("cannot format double");
    return std::string(buf, end);
}

std::uint64_t ipow(std::uint64_t base, std::uint64_t exponent) {
    std::uint64_t result = 1;
    for (std::uint64_t i = 0; i < exponent; ++i) {
        if (base != 0 && result > std::numeric_limits<std::uint64_t>::max() / base) {
            throw std::overflow_error("integer power overflows 64 bits");
        }
        result *= base;
    }
    return result;
}

}  // namespace polylin
