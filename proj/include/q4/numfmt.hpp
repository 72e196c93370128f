#pragma once

// Locale-independent number formatting shared by the coil CSV writer and the
// canonical document encoder. format_double emits the shortest decimal string
// that parses back to exactly the same double.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

namespace q4 {

inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Strict parse: the whole token must be consumed and the value finite-or-inf
/// as written. Returns nullopt on any violation.
inline std::optional<double> parse_double(std::string_view token) {
    if (token.empty()) return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

/// Rounds to the given number of significant decimal digits (round half to
/// even via the printf path). Used by the synthetic generator so emitted
/// files stay short and stable across platforms.
inline double round_significant(double v, int digits) {
    if (v == 0.0) return 0.0;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*e", digits - 1, v);
    return std::strtod(buf, nullptr);
}

}  // namespace q4
