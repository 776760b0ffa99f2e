#include "zonecast/time.hpp"

#include "zonecast/error.hpp"

#include <charconv>
#include <cstdio>

namespace zonecast {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return (m == 2 && leap) ? 29u : kDays[m - 1];
}

[[noreturn]] void bad_timestamp(std::string_view text, const char* why) {
  throw ValidationError("malformed timestamp '" + std::string(text) + "': " + why);
}

}  // namespace

CivilDate civil_date(Timestamp ts) { return civil_from_days(floor_div(ts.epoch_seconds, 86400)); }

std::int64_t seconds_of_day(Timestamp ts) {
  return ts.epoch_seconds - floor_div(ts.epoch_seconds, 86400) * 86400;
}

int weekday(Timestamp ts) {
  // 1970-01-01 was a Thursday.
  const std::int64_t days = floor_div(ts.epoch_seconds, 86400);
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

Timestamp parse_rfc3339(std::string_view text, int default_offset_minutes) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!read_digits(text, 0, 4, year) || text.size() < 19 || text[4] != '-' ||
      !read_digits(text, 5, 2, month) || text[7] != '-' || !read_digits(text, 8, 2, day) ||
      (text[10] != 'T' && text[10] != 't' && text[10] != ' ') ||
      !read_digits(text, 11, 2, hour) || text[13] != ':' || !read_digits(text, 14, 2, minute) ||
      text[16] != ':' || !read_digits(text, 17, 2, second)) {
    bad_timestamp(text, "expected YYYY-MM-DDTHH:MM:SS");
  }
  if (month < 1 || month > 12) bad_timestamp(text, "month out of range");
  if (day < 1 || static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month))) {
    bad_timestamp(text, "day out of range");
  }
  if (hour > 23 || minute > 59 || second > 60) bad_timestamp(text, "time of day out of range");

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t digits_start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == digits_start) bad_timestamp(text, "empty fractional seconds");
  }

  int offset_minutes = default_offset_minutes;
  if (pos < text.size()) {
    const char z = text[pos];
    if ((z == 'Z' || z == 'z') && pos + 1 == text.size()) {
      offset_minutes = 0;
    } else if ((z == '+' || z == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!read_digits(text, pos + 1, 2, oh) || !read_digits(text, pos + 4, 2, om) || oh > 23 ||
          om > 59) {
        bad_timestamp(text, "bad UTC offset");
      }
      offset_minutes = (z == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      bad_timestamp(text, "trailing characters");
    }
  }

  const Timestamp local = make_utc(year, static_cast<unsigned>(month), static_cast<unsigned>(day),
                                   hour, minute, second);
  const Timestamp utc{local.epoch_seconds - static_cast<std::int64_t>(offset_minutes) * 60};
  if (utc.epoch_seconds < 0) bad_timestamp(text, "before the Unix epoch");
  return utc;
}

std::string format_rfc3339(Timestamp ts) {
  const CivilDate d = civil_date(ts);
  const std::int64_t sod = seconds_of_day(ts);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year, d.month, d.day,
                static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60),
                static_cast<int>(sod % 60));
  return buf;
}

}  // namespace zonecast
