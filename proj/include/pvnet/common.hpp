#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pvnet {

// Error taxonomy. User-facing errors (bad input, bad file, bad config) map to
// CLI exit code 1, internal failures (numerics, logic) to exit code 2.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PhysDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Counter-based randomness.
//
// Every random draw in the project is a pure function of (seed, stream label,
// counters). This makes generation independent of evaluation order and thread
// count: two runs with the same seed produce bit-identical streams.

uint64_t mix64(uint64_t x);

// Combine a seed with a textual stream label into a stream key.
uint64_t stream_key(uint64_t seed, std::string_view label);

// Fold extra counters into a key.
inline uint64_t key_with(uint64_t key, uint64_t a) { return mix64(key ^ mix64(a + 0x9e3779b97f4a7c15ULL)); }
inline uint64_t key_with(uint64_t key, uint64_t a, uint64_t b) { return key_with(key_with(key, a), b); }

// Uniform draw in [0, 1) for a (key, counter) pair.
double uniform01(uint64_t key, uint64_t counter);

// Standard normal draw (Box-Muller on two counter-derived uniforms).
double normal01(uint64_t key, uint64_t counter);

// ---------------------------------------------------------------------------
// Time. All instants are UTC, held as seconds since the Unix epoch.

using UtcTime = int64_t;

std::string format_utc(UtcTime t);          // 2019-01-01T06:00:00Z
UtcTime parse_utc(const std::string& s);    // throws FormatError

int day_of_year(UtcTime t);                 // 1..366
double hour_of_day(UtcTime t);              // fractional UTC hour, [0, 24)

}  // namespace pvnet
