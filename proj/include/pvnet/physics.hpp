#pragma once

#include "pvnet/common.hpp"

namespace pvnet::physics {

// Fixed physical constants (CODATA).
inline constexpr double kBoltzmann = 1.380649e-23;       // J/K
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C

// Single-diode equivalent-circuit parameters of a PV cell.
struct DiodeParams {
  double saturation_current;   // I_0, A
  double ideality;             // n, dimensionless (diode equation)
  double junction_temp;        // T, K
  double light_current;        // I_l, A
  double series_resistance;    // R_s, ohm
  double shunt_resistance;     // R_sh, ohm
  double ideality_cell;        // A, dimensionless (implicit cell equation)

  void validate() const;  // throws PhysDomainError on invalid entries
};

struct ModuleWeather {
  double ambient_temp_c;  // °C
  double irradiance;      // W/m²
  double wind_speed;      // m/s

  void validate() const;
};

struct SolarPosition {
  double cos_zenith;  // in [-1, 1]
};

// V_T = k T / q
double thermal_voltage(double temp_kelvin);

// Shockley diode current I_D = I_0 (exp(V_j / (n V_T)) - 1). The exponent is
// clamped at 500; *saturated reports whether the clamp engaged.
double diode_current(double junction_voltage, const DiodeParams& p, bool* saturated = nullptr);

// Cell current from the implicit single-diode equation
//   I = I_l - I_0 (exp((V + I R_s)/(A V_T)) - 1) - (V + I R_s)/R_sh,
// solved by bisection on [-I_l, 2 I_l] to 1e-10 A.
double cell_current(double cell_voltage, const DiodeParams& p);

// P = V * I(V)
double cell_power(double cell_voltage, const DiodeParams& p);

// Max-power search over a 512-point voltage grid on [0, V_oc].
struct MaxPowerPoint {
  double voltage;
  double power;
};
MaxPowerPoint cell_max_power(const DiodeParams& p);

// T_m = 0.94 T + 0.02 I - 1.5 S + 0.35 (module temperature heuristic, °C)
double module_temperature(const ModuleWeather& w);

// Cosine of the solar zenith angle from day-angle declination and
// longitude-shifted hour angle. No equation-of-time or refraction terms.
double solar_cos_zenith(UtcTime t, double lat_deg, double lon_deg);

// Haurwitz clear-sky global horizontal irradiance, W/m².
double clearsky_ghi(double cos_zenith);

// Fleet-scale plant model: nameplate capacity derated linearly with module
// temperature (-0.4 %/°C around 25 °C), clamped to [0, capacity]. MW in, MW out.
double plant_power(double capacity_mw, const ModuleWeather& w);

}  // namespace pvnet::physics
