#ifndef WINDNBM_FORMAT_HPP
#define WINDNBM_FORMAT_HPP

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

#include "windnbm/error.hpp"

namespace windnbm {

/// Shortest round-trip decimal form of a double. Used for every numeric
/// field written to CSV so that rewritten files are byte-identical and
/// re-reading reproduces the exact bits.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
    double v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCategory::parse, where + ": unparseable value '" + std::string(text) + "'");
    }
    return v;
}

inline std::int64_t parse_int(std::string_view text, const std::string& where) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCategory::parse, where + ": unparseable integer '" + std::string(text) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& where) {
    std::uint64_t v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCategory::parse, where + ": unparseable integer '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace windnbm

#endif
