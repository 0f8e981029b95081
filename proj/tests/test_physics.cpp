#include <doctest.h>

#include <cmath>

#include "pvnet/common.hpp"
#include "pvnet/physics.hpp"

using namespace pvnet;
using namespace pvnet::physics;

namespace {

DiodeParams sample_cell() {
  DiodeParams p{};
  p.saturation_current = 1e-9;
  p.ideality = 1.0;
  p.junction_temp = 300.0;
  p.light_current = 8.0;
  p.series_resistance = 0.01;
  p.shunt_resistance = 50.0;
  p.ideality_cell = 1.3;
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("physics");

TEST_CASE("thermal voltage at 300 K and linearity in T") {
  CHECK(std::abs(thermal_voltage(300.0) - 0.025852) <= 1e-6);
  CHECK(thermal_voltage(600.0) == doctest::Approx(2.0 * thermal_voltage(300.0)).epsilon(1e-15));
  CHECK_THROWS_AS(thermal_voltage(0.0), PhysDomainError);
  CHECK_THROWS_AS(thermal_voltage(-5.0), PhysDomainError);
}

TEST_CASE("diode current limits") {
  DiodeParams p = sample_cell();
  CHECK(diode_current(0.0, p) == 0.0);

  // forward bias: I_0 exp(V / (n V_T)) dominates
  p.ideality = 1.0;
  const double i = diode_current(0.6, p);
  CHECK(std::abs(i - 12.0) / 12.0 <= 0.01);

  // deep reverse bias saturates at -I_0
  CHECK(diode_current(-5.0, p) == doctest::Approx(-1e-9).epsilon(1e-9));

  bool saturated = false;
  diode_current(1e4, p, &saturated);
  CHECK(saturated);
}

TEST_CASE("cell current reduces to the explicit form without resistances") {
  DiodeParams p = sample_cell();
  p.series_resistance = 0.0;
  p.shunt_resistance = 1e12;
  const double vt = thermal_voltage(p.junction_temp);
  for (const double v : {0.0, 0.1, 0.3, 0.5, 0.6}) {
    const double solved = cell_current(v, p);
    const double explicit_i =
        p.light_current - p.saturation_current * (std::exp(v / (p.ideality_cell * vt)) - 1.0) - v / p.shunt_resistance;
    CHECK(std::abs(solved - explicit_i) <= 1e-9);
  }
  CHECK(cell_current(0.0, p) == doctest::Approx(p.light_current).epsilon(1e-9));
}

TEST_CASE("bisection root agrees with a dense residual scan") {
  const uint64_t key = stream_key(7, "cell");
  for (int trial = 0; trial < 5; ++trial) {
    DiodeParams p = sample_cell();
    p.light_current = 2.0 + 8.0 * uniform01(key, static_cast<uint64_t>(trial) * 4);
    p.series_resistance = 0.02 * uniform01(key, static_cast<uint64_t>(trial) * 4 + 1);
    p.shunt_resistance = 20.0 + 100.0 * uniform01(key, static_cast<uint64_t>(trial) * 4 + 2);
    const double v = 0.4 * uniform01(key, static_cast<uint64_t>(trial) * 4 + 3);
    const double solved = cell_current(v, p);

    const double vt = thermal_voltage(p.junction_temp);
    auto residual = [&](double i) {
      const double vd = v + i * p.series_resistance;
      return p.light_current - p.saturation_current * (std::exp(vd / (p.ideality_cell * vt)) - 1.0) -
             vd / p.shunt_resistance - i;
    };
    // residual at the root stays inside the stated tolerance
    CHECK(std::abs(residual(solved)) <= 1e-9);
    // scan a million points; the sign change brackets the returned root
    const int n = 1000000;
    const double lo = -p.light_current, hi = 2.0 * p.light_current;
    int flip = -1;
    double prev = residual(lo);
    for (int k = 1; k < n; ++k) {
      const double i = lo + (hi - lo) * k / (n - 1);
      const double r = residual(i);
      if ((prev > 0.0) != (r > 0.0)) {
        flip = k;
        break;
      }
      prev = r;
    }
    REQUIRE(flip > 0);
    const double bracket_lo = lo + (hi - lo) * (flip - 1) / (n - 1);
    const double bracket_hi = lo + (hi - lo) * flip / (n - 1);
    CHECK(solved >= bracket_lo - 1e-9);
    CHECK(solved <= bracket_hi + 1e-9);
  }
}

TEST_CASE("cell current is monotone non-increasing in voltage") {
  const DiodeParams p = sample_cell();
  double prev = cell_current(0.0, p);
  for (int k = 1; k <= 60; ++k) {
    const double cur = cell_current(0.01 * k, p);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("cell power basics and max-power search") {
  DiodeParams p = sample_cell();
  CHECK(cell_power(0.0, p) == 0.0);

  DiodeParams dark = p;
  dark.light_current = 0.0;
  CHECK(cell_max_power(dark).power == 0.0);

  const MaxPowerPoint mpp = cell_max_power(p);
  CHECK(mpp.power > 0.0);
  // brute-force scan at much finer resolution lands within one grid cell
  const double vt = thermal_voltage(p.junction_temp);
  const double v_oc = p.ideality_cell * vt * std::log(p.light_current / p.saturation_current + 1.0);
  double best_v = 0.0, best_p = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double v = v_oc * k / (n - 1);
    const double pw = cell_power(v, p);
    if (pw > best_p) {
      best_p = pw;
      best_v = v;
    }
  }
  CHECK(std::abs(mpp.voltage - best_v) <= v_oc / 511.0);
  CHECK(mpp.power == doctest::Approx(best_p).epsilon(1e-3));
}

TEST_CASE("module temperature heuristic") {
  CHECK(module_temperature({25.0, 800.0, 5.0}) == doctest::Approx(32.35).epsilon(1e-12));
  CHECK(module_temperature({0.0, 0.0, 0.0}) == doctest::Approx(0.35).epsilon(1e-12));
  const double base = module_temperature({10.0, 500.0, 3.0});
  CHECK(module_temperature({10.0, 500.0, 4.0}) == doctest::Approx(base - 1.5).epsilon(1e-12));
  // affine: increments are independent of the base point
  const double d1 = module_temperature({11.0, 500.0, 3.0}) - module_temperature({10.0, 500.0, 3.0});
  const double d2 = module_temperature({21.0, 500.0, 3.0}) - module_temperature({20.0, 500.0, 3.0});
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
  CHECK_THROWS_AS(module_temperature({10.0, -1.0, 0.0}), PhysDomainError);
}

TEST_CASE("solar geometry sanity") {
  // equator, equinox, solar noon
  const UtcTime equinox_noon = parse_utc("2019-03-21T12:00:00Z");
  CHECK(solar_cos_zenith(equinox_noon, 0.0, 0.0) == doctest::Approx(1.0).epsilon(0.02));
  // local midnight at mid latitude
  const UtcTime midnight = parse_utc("2019-06-21T00:00:00Z");
  CHECK(solar_cos_zenith(midnight, 50.0, 0.0) < 0.0);
  // polar night: the sun stays below the horizon all day
  const UtcTime winter = parse_utc("2019-01-15T00:00:00Z");
  for (int h = 0; h < 24; ++h) CHECK(solar_cos_zenith(winter + h * 3600, 85.0, 10.0) < 0.0);
}

TEST_CASE("clear-sky irradiance") {
  CHECK(clearsky_ghi(0.0) == 0.0);
  CHECK(clearsky_ghi(-0.4) == 0.0);
  CHECK(std::abs(clearsky_ghi(1.0) - 1037.2) <= 0.1);
  double prev = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double g = clearsky_ghi(k / 1000.0);
    CHECK(g > prev);
    CHECK(g <= 1098.0);
    prev = g;
  }
}

TEST_CASE("plant power model") {
  // standard test conditions: T_m forced to 25 by solving the heuristic for T
  const double t_amb = (25.0 - 0.02 * 1000.0 + 1.5 * 2.0 - 0.35) / 0.94;
  CHECK(plant_power(7.5, {t_amb, 1000.0, 2.0}) == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(plant_power(7.5, {t_amb, 0.0, 2.0}) == 0.0);
  CHECK(plant_power(10.0, {25.0, 800.0, 5.0}) == doctest::Approx(7.7648).epsilon(1e-4));

  const uint64_t key = stream_key(9, "plant");
  for (int i = 0; i < 100000; ++i) {
    const double cap = 50.0 * uniform01(key, static_cast<uint64_t>(i) * 4);
    const ModuleWeather w{-20.0 + 70.0 * uniform01(key, static_cast<uint64_t>(i) * 4 + 1),
                          1400.0 * uniform01(key, static_cast<uint64_t>(i) * 4 + 2),
                          30.0 * uniform01(key, static_cast<uint64_t>(i) * 4 + 3)};
    const double p = plant_power(cap, w);
    CHECK(p >= 0.0);
    CHECK(p <= cap);
  }
}

TEST_SUITE_END();
