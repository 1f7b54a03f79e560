#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace echoscope {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Parses YYYY-MM-DD. Returns nullopt when the text is not a valid calendar date.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date day);

// An instant together with the UTC offset it was written in.
struct ZonedTimestamp {
  Timestamp utc{};
  int offset_minutes = 0;

  Date utc_day() const { return std::chrono::floor<std::chrono::days>(utc); }
  friend bool operator==(const ZonedTimestamp&, const ZonedTimestamp&) = default;
};

// Parses ISO-8601 date-times of the form YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM|+HHMM).
// A space is accepted in place of 'T'. Fractional seconds are kept to millisecond precision.
std::optional<ZonedTimestamp> parse_timestamp(std::string_view text);

// Formats in the writer's original offset; a zero offset is written as 'Z'.
std::string format_timestamp(const ZonedTimestamp& ts);

}  // namespace echoscope
