#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace owp {

// Wire timestamps carry second precision in UTC.
using Timestamp = std::chrono::sys_seconds;

// Protocol clock (keep-alive bookkeeping, virtual network) runs in ms.
using TimePoint = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

// Accepts RFC 3339 date-times with a "Z" suffix, a numeric offset, or no
// designator at all (read as UTC, as in the captured prototype traffic).
// Fractional seconds are accepted and truncated.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp ts);

inline Timestamp to_timestamp(TimePoint tp) {
  return std::chrono::floor<std::chrono::seconds>(tp);
}

TimePoint system_now();

}  // namespace owp
