#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace airq {

/// Hours since 1970-01-01T00:00, timezone-naive. All series are hourly;
/// finer-grained timestamps are bucketed down to the containing hour.
using HourStamp = std::int64_t;

/// Parses an ISO-8601 instant ("2015-01-01T06:00", "2015-01-01 06:00:00")
/// into an HourStamp. Returns nullopt on malformed or out-of-range input.
std::optional<HourStamp> parse_timestamp(std::string_view text);

/// Formats an HourStamp back as "YYYY-MM-DDTHH:00".
std::string format_timestamp(HourStamp hour);

}  // namespace airq
