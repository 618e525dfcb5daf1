#include "dcw/dates.hpp"

#include <cstdio>
#include <cstdlib>

#include "dcw/errors.hpp"

namespace dcw {
namespace {

// Civil-from-days and days-from-civil, the standard O(1) Gregorian
// conversions on an era grid of 146097 days.
std::int32_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(std::int32_t z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int yr = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = yr + (m <= 2);
}

int parse_fixed_int(std::string_view s, size_t pos, size_t len, const char* what) {
  if (pos + len > s.size()) throw ParseError(std::string("truncated ") + what, 0);
  int v = 0;
  for (size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') throw ParseError(std::string("bad digit in ") + what, 0);
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

Date Date::from_ymd(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 1)
    throw ParseError("calendar field out of range", 0);
  static const int kMonthDays[12] = {31, 28, 31, 30, 31, 30,
                                     31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  int last = month == 2 && leap ? 29 : kMonthDays[month - 1];
  if (day > last) throw ParseError("calendar field out of range", 0);
  return Date(days_from_civil(year, month, day));
}

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
    throw ParseError("expected YYYY-MM-DD", 0);
  int y = parse_fixed_int(iso, 0, 4, "year");
  int m = parse_fixed_int(iso, 5, 2, "month");
  int d = parse_fixed_int(iso, 8, 2, "day");
  return from_ymd(y, m, d);
}

int Date::year() const {
  int y, m, d;
  civil_from_days(days_, y, m, d);
  return y;
}

int Date::month() const {
  int y, m, d;
  civil_from_days(days_, y, m, d);
  return m;
}

int Date::day() const {
  int y, m, d;
  civil_from_days(days_, y, m, d);
  return d;
}

int Date::weekday() const {
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  int w = (days_ + 3) % 7;
  return w < 0 ? w + 7 : w;
}

std::string Date::to_string() const {
  int y, m, d;
  civil_from_days(days_, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

Date next_business_day(Date d) {
  Date n = d + 1;
  while (n.is_weekend()) n = n + 1;
  return n;
}

Date LocalTimestamp::local_date() const {
  TimestampNs ln = local_ns();
  std::int64_t days = ln / kNsPerDay;
  if (ln < 0 && ln % kNsPerDay != 0) --days;
  return Date(static_cast<std::int32_t>(days));
}

std::int64_t LocalTimestamp::local_time_of_day_ns() const {
  TimestampNs ln = local_ns();
  std::int64_t r = ln % kNsPerDay;
  return r < 0 ? r + kNsPerDay : r;
}

LocalTimestamp parse_timestamp(std::string_view iso) {
  // Layout: YYYY-MM-DDTHH:MM:SS[.f{1..9}](Z|±HH:MM)
  if (iso.size() < 20) throw ParseError("timestamp too short", 0);
  if (iso[4] != '-' || iso[7] != '-' || (iso[10] != 'T' && iso[10] != ' ') ||
      iso[13] != ':' || iso[16] != ':')
    throw ParseError("timestamp separators malformed", 0);
  int y = parse_fixed_int(iso, 0, 4, "year");
  int mo = parse_fixed_int(iso, 5, 2, "month");
  int d = parse_fixed_int(iso, 8, 2, "day");
  int h = parse_fixed_int(iso, 11, 2, "hour");
  int mi = parse_fixed_int(iso, 14, 2, "minute");
  int s = parse_fixed_int(iso, 17, 2, "second");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60)
    throw ParseError("timestamp field out of range", 0);

  size_t pos = 19;
  std::int64_t frac_ns = 0;
  if (pos < iso.size() && iso[pos] == '.') {
    ++pos;
    size_t start = pos;
    std::int64_t scale = 100'000'000;
    while (pos < iso.size() && iso[pos] >= '0' && iso[pos] <= '9') {
      if (pos - start < 9) {
        frac_ns += (iso[pos] - '0') * scale;
        scale /= 10;
      }
      ++pos;
    }
    if (pos == start) throw ParseError("empty fractional seconds", 0);
  }

  if (pos >= iso.size()) throw ParseError("missing UTC offset", 0);
  std::int32_t offset_sec = 0;
  if (iso[pos] == 'Z') {
    if (pos + 1 != iso.size()) throw ParseError("trailing characters after Z", 0);
  } else if (iso[pos] == '+' || iso[pos] == '-') {
    int sign = iso[pos] == '+' ? 1 : -1;
    if (pos + 6 != iso.size() || iso[pos + 3] != ':')
      throw ParseError("offset must be ±HH:MM", 0);
    int oh = parse_fixed_int(iso, pos + 1, 2, "offset hour");
    int om = parse_fixed_int(iso, pos + 4, 2, "offset minute");
    if (oh > 18 || om > 59) throw ParseError("offset out of range", 0);
    offset_sec = sign * (oh * 3600 + om * 60);
  } else {
    throw ParseError("missing UTC offset", 0);
  }

  std::int64_t days = Date::from_ymd(y, mo, d).days();  // rejects Feb 30 etc.
  std::int64_t local_ns =
      days * kNsPerDay + (h * 3600LL + mi * 60 + s) * kNsPerSec + frac_ns;
  LocalTimestamp ts;
  ts.offset_sec = offset_sec;
  ts.utc_ns = local_ns - static_cast<std::int64_t>(offset_sec) * kNsPerSec;
  return ts;
}

std::string format_timestamp(const LocalTimestamp& ts) {
  TimestampNs ln = ts.local_ns();
  std::int64_t days = ln / kNsPerDay;
  if (ln < 0 && ln % kNsPerDay != 0) --days;
  std::int64_t tod = ln - days * kNsPerDay;
  int y, m, d;
  civil_from_days(static_cast<std::int32_t>(days), y, m, d);
  int h = static_cast<int>(tod / (3600 * kNsPerSec));
  int mi = static_cast<int>(tod / (60 * kNsPerSec) % 60);
  int s = static_cast<int>(tod / kNsPerSec % 60);
  auto ns = static_cast<long long>(tod % kNsPerSec);
  int osign = ts.offset_sec < 0 ? -1 : 1;
  int oabs = std::abs(ts.offset_sec);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%09lld%c%02d:%02d",
                y, m, d, h, mi, s, ns, osign < 0 ? '-' : '+', oabs / 3600,
                oabs % 3600 / 60);
  return buf;
}

}  // namespace dcw
