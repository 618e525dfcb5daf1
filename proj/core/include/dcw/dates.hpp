#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dcw {

/// Nanoseconds since the Unix epoch, UTC.
using TimestampNs = std::int64_t;

constexpr std::int64_t kNsPerSec = 1'000'000'000;
constexpr std::int64_t kNsPerDay = 86'400 * kNsPerSec;

/// Calendar date stored as days since 1970-01-01. Cheap value type; all
/// calendar math uses proleptic Gregorian rules.
class Date {
 public:
  Date() : days_(0) {}
  explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, int month, int day);
  /// Parses "YYYY-MM-DD". Throws ParseError on malformed input (line 0).
  static Date parse(std::string_view iso);

  std::int32_t days() const { return days_; }
  int year() const;
  int month() const;
  int day() const;
  /// 0 = Monday ... 6 = Sunday.
  int weekday() const;
  bool is_weekend() const { return weekday() >= 5; }

  std::string to_string() const;  // "YYYY-MM-DD"

  Date operator+(int n) const { return Date(days_ + n); }
  Date operator-(int n) const { return Date(days_ - n); }
  int operator-(Date o) const { return days_ - o.days_; }
  auto operator<=>(const Date&) const = default;

 private:
  std::int32_t days_;
};

/// Next Monday-to-Friday day strictly after `d`; holiday-free calendar.
Date next_business_day(Date d);

/// A point in time as parsed from an ISO-8601 string with numeric offset.
/// The offset is kept so session filtering can reason in exchange-local time.
struct LocalTimestamp {
  TimestampNs utc_ns = 0;
  std::int32_t offset_sec = 0;

  TimestampNs local_ns() const { return utc_ns + offset_sec * kNsPerSec; }
  Date local_date() const;
  /// Nanoseconds since local midnight.
  std::int64_t local_time_of_day_ns() const;
};

/// Parses "YYYY-MM-DDTHH:MM:SS[.fractional](Z|+HH:MM|-HH:MM)".
/// Fractional part up to 9 digits. Throws ParseError (line 0) on bad input.
LocalTimestamp parse_timestamp(std::string_view iso);

/// Formats a LocalTimestamp back to ISO-8601 with its offset, ns precision.
std::string format_timestamp(const LocalTimestamp& ts);

}  // namespace dcw
