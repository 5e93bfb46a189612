#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace vapt {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

// RFC 3339, always UTC with millisecond precision: 2025-03-01T09:30:00.000Z
std::string format_rfc3339(Instant t);

// Accepts 'Z' or a numeric offset and an optional fractional part.
Instant parse_rfc3339(std::string_view text);

Instant now_utc();

inline double minutes_between(Instant from, Instant to) {
  return std::chrono::duration<double, std::ratio<60>>(to - from).count();
}

// "59:08" style countdown, rounded up to the next whole second.
std::string format_countdown(std::chrono::milliseconds remaining);

}  // namespace vapt
