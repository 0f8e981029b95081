#include "pvnet/common.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace pvnet {

uint64_t mix64(uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t stream_key(uint64_t seed, std::string_view label) {
  uint64_t h = mix64(seed ^ 0x5bf03635d3c8a9a1ULL);
  for (char c : label) h = mix64(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
  return h;
}

double uniform01(uint64_t key, uint64_t counter) {
  const uint64_t bits = mix64(key ^ mix64(counter));
  // top 53 bits -> [0, 1)
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double normal01(uint64_t key, uint64_t counter) {
  const uint64_t k2 = key_with(key, counter);
  double u1 = uniform01(k2, 0);
  const double u2 = uniform01(k2, 1);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// --- civil calendar (proleptic Gregorian), no leap seconds -----------------

namespace {

int64_t days_from_civil(int64_t y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const int64_t yoe = y - era * 400;
  const int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(int64_t z, int64_t& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int64_t doe = z - era * 146097;
  const int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = yoe + era * 400;
  const int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int64_t mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += m <= 2;
}

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t floor_mod(int64_t a, int64_t b) { return a - floor_div(a, b) * b; }

}  // namespace

std::string format_utc(UtcTime t) {
  const int64_t days = floor_div(t, 86400);
  const int64_t sod = floor_mod(t, 86400);
  int64_t y;
  int m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02d:%02d:%02dZ", static_cast<long long>(y), m, d,
                static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60));
  return buf;
}

UtcTime parse_utc(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char tz = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &sec, &tz) != 7 || tz != 'Z')
    throw FormatError("not an ISO-8601 UTC timestamp: '" + s + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
    throw FormatError("timestamp field out of range: '" + s + "'");
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

int day_of_year(UtcTime t) {
  const int64_t days = floor_div(t, 86400);
  int64_t y;
  int m, d;
  civil_from_days(days, y, m, d);
  return static_cast<int>(days - days_from_civil(y, 1, 1)) + 1;
}

double hour_of_day(UtcTime t) { return static_cast<double>(floor_mod(t, 86400)) / 3600.0; }

}  // namespace pvnet
