#pragma once

#include <charconv>
#include <string>

namespace lrd {

// Shortest decimal form that round-trips binary64 exactly; every number the
// tool serializes goes through here so reruns are byte-identical and parsing
// an emitted value recovers the identical double.
inline std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;  // 40 bytes always suffice for binary64
    return std::string(buf, ptr);
}

}  // namespace lrd
