#include "evtrisk/timeparse.hpp"

#include <cctype>
#include <cstdio>

#include "evtrisk/errors.hpp"

namespace evtrisk {

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

namespace {

bool read_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

[[noreturn]] void bad(const std::string& s) {
  throw DataError("malformed ISO-8601 timestamp: '" + s + "'");
}

}  // namespace

CivilTime parse_iso8601(const std::string& s) {
  int y, mo, d, h, mi, sec;
  if (!read_int(s, 0, 4, y) || s.size() < 20 || s[4] != '-' || !read_int(s, 5, 2, mo) ||
      s[7] != '-' || !read_int(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') ||
      !read_int(s, 11, 2, h) || s[13] != ':' || !read_int(s, 14, 2, mi) || s[16] != ':' ||
      !read_int(s, 17, 2, sec))
    bad(s);
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) bad(s);

  std::size_t p = 19;
  if (p < s.size() && s[p] == '.') {  // fractional seconds: truncate
    ++p;
    while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) ++p;
  }
  if (p >= s.size()) bad(s);

  int offset = 0;
  if (s[p] == 'Z') {
    if (p + 1 != s.size()) bad(s);
  } else if (s[p] == '+' || s[p] == '-') {
    const int sign = s[p] == '+' ? 1 : -1;
    int oh, om;
    if (!read_int(s, p + 1, 2, oh) || p + 6 != s.size() || s[p + 3] != ':' ||
        !read_int(s, p + 4, 2, om) || oh > 23 || om > 59)
      bad(s);
    offset = sign * (oh * 60 + om);
  } else {
    bad(s);
  }

  CivilTime ct;
  ct.tz_offset_min = offset;
  ct.local_date = y * 10000 + mo * 100 + d;
  ct.local_minute = h * 60 + mi;
  const std::int64_t local_sec = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
  ct.epoch_sec = local_sec - static_cast<std::int64_t>(offset) * 60;
  return ct;
}

std::string format_iso8601(std::int64_t epoch_sec, int tz_offset_min) {
  const std::int64_t local = epoch_sec + static_cast<std::int64_t>(tz_offset_min) * 60;
  std::int64_t days = local / 86400;
  std::int64_t rem = local % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  const int h = static_cast<int>(rem / 3600);
  const int mi = static_cast<int>(rem % 3600 / 60);
  const int sec = static_cast<int>(rem % 60);
  char buf[40];
  if (tz_offset_min == 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d, h, mi, sec);
  } else {
    const int am = tz_offset_min < 0 ? -tz_offset_min : tz_offset_min;
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d%c%02d:%02d", y, m, d, h, mi,
                  sec, tz_offset_min < 0 ? '-' : '+', am / 60, am % 60);
  }
  return buf;
}

}  // namespace evtrisk
