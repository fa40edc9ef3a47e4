#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

namespace mvhedge::detail {

/// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<long> parse_long(std::string_view s) {
    long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace mvhedge::detail
