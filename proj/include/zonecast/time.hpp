#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace zonecast {

/// Seconds since the Unix epoch, UTC.
struct Timestamp {
  std::int64_t epoch_seconds = 0;

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

/// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2 ? 1 : 0)), m, d};
}

constexpr Timestamp make_utc(int year, unsigned month, unsigned day, int hour = 0,
                             int minute = 0, int second = 0) {
  return {days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second};
}

CivilDate civil_date(Timestamp ts);

/// Seconds into the UTC day, [0, 86400).
std::int64_t seconds_of_day(Timestamp ts);

/// 0 = Monday ... 6 = Sunday.
int weekday(Timestamp ts);

/// Parses `YYYY-MM-DDTHH:MM:SS[.frac](Z|±HH:MM)`. A timestamp without a zone
/// designator (also accepted with a space instead of `T`) is read as local
/// time at `default_offset_minutes` east of UTC. Fractional seconds are
/// truncated. Throws ValidationError on malformed input or a negative epoch.
Timestamp parse_rfc3339(std::string_view text, int default_offset_minutes = 0);

/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_rfc3339(Timestamp ts);

}  // namespace zonecast
