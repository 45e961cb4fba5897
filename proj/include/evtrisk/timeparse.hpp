#pragma once

#include <cstdint>
#include <string>

namespace evtrisk {

// Minimal civil-time support for bar timestamps. Timestamps arrive as
// ISO-8601 with an explicit offset ("2015-03-02T09:31:00+08:00" or "...Z");
// we keep both the UTC epoch and the local wall-clock fields, because
// trading sessions are defined on the local clock.
struct CivilTime {
  std::int64_t epoch_sec = 0;  // seconds since 1970-01-01T00:00:00Z
  int tz_offset_min = 0;       // local = UTC + offset
  int local_date = 0;          // yyyymmdd on the local clock
  int local_minute = 0;        // minute of the local day, 0..1439
};

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, int m, int d);

// Inverse of days_from_civil.
void civil_from_days(std::int64_t z, int& y, int& m, int& d);

// Parses "YYYY-MM-DDTHH:MM:SS" with mandatory zone suffix "Z" or "+HH:MM" /
// "-HH:MM" (a space instead of 'T' is tolerated). Fractional seconds are
// accepted and truncated. Throws DataError on malformed input.
CivilTime parse_iso8601(const std::string& s);

// Renders epoch seconds at the given offset, e.g. "2015-03-02T09:31:00+08:00".
std::string format_iso8601(std::int64_t epoch_sec, int tz_offset_min);

}  // namespace evtrisk
