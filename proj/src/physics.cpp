#include "pvnet/physics.hpp"

#include <cmath>
#include <string>

namespace pvnet::physics {

namespace {
constexpr double kExpClamp = 500.0;
constexpr double kBisectTol = 1e-10;       // A
constexpr double kTempCoeff = -0.004;      // 1/°C
constexpr double kHaurwitzScale = 1098.0;  // W/m²
constexpr double kHaurwitzDecay = 0.057;

double clamped_exp(double x, bool* saturated) {
  if (x > kExpClamp) {
    if (saturated) *saturated = true;
    x = kExpClamp;
  }
  return std::exp(x);
}
}  // namespace

void DiodeParams::validate() const {
  if (saturation_current <= 0.0) throw PhysDomainError("diode params: saturation current must be > 0");
  if (junction_temp <= 0.0) throw PhysDomainError("diode params: junction temperature must be > 0 K");
  if (shunt_resistance <= 0.0) throw PhysDomainError("diode params: shunt resistance must be > 0");
  if (series_resistance < 0.0) throw PhysDomainError("diode params: series resistance must be >= 0");
  if (ideality < 1.0 || ideality_cell < 1.0) throw PhysDomainError("diode params: ideality factors must be >= 1");
  if (light_current < 0.0) throw PhysDomainError("diode params: light current must be >= 0");
}

void ModuleWeather::validate() const {
  if (irradiance < 0.0) throw PhysDomainError("module weather: irradiance must be >= 0");
  if (wind_speed < 0.0) throw PhysDomainError("module weather: wind speed must be >= 0");
}

double thermal_voltage(double temp_kelvin) {
  if (temp_kelvin <= 0.0)
    throw PhysDomainError("thermal_voltage: temperature must be > 0 K, got " + std::to_string(temp_kelvin));
  return kBoltzmann * temp_kelvin / kElementaryCharge;
}

double diode_current(double junction_voltage, const DiodeParams& p, bool* saturated) {
  p.validate();
  if (saturated) *saturated = false;
  const double vt = thermal_voltage(p.junction_temp);
  return p.saturation_current * (clamped_exp(junction_voltage / (p.ideality * vt), saturated) - 1.0);
}

namespace {
// residual of the implicit cell equation at current i
double cell_residual(double i, double v, const DiodeParams& p, double vt) {
  const double vd = v + i * p.series_resistance;
  return p.light_current - p.saturation_current * (clamped_exp(vd / (p.ideality_cell * vt), nullptr) - 1.0) -
         vd / p.shunt_resistance - i;
}
}  // namespace

double cell_current(double cell_voltage, const DiodeParams& p) {
  p.validate();
  const double vt = thermal_voltage(p.junction_temp);
  const double il = p.light_current;
  double lo = -il;
  double hi = 2.0 * il;
  if (lo == hi) {
    // dark cell: the bracket degenerates to a point
    if (std::abs(cell_residual(lo, cell_voltage, p, vt)) <= kBisectTol) return lo;
    throw NumericError("cell_current: degenerate bracket (I_l=0) holds no root at V=" + std::to_string(cell_voltage));
  }
  double f_lo = cell_residual(lo, cell_voltage, p, vt);
  double f_hi = cell_residual(hi, cell_voltage, p, vt);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0))
    throw NumericError("cell_current: no sign change on bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                       "] at V=" + std::to_string(cell_voltage) + " (residuals " + std::to_string(f_lo) + ", " +
                       std::to_string(f_hi) + ")");
  // The residual is strictly decreasing in i, so f_lo > 0 > f_hi.
  while (hi - lo > kBisectTol) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = cell_residual(mid, cell_voltage, p, vt);
    if (f_mid > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double cell_power(double cell_voltage, const DiodeParams& p) { return cell_voltage * cell_current(cell_voltage, p); }

MaxPowerPoint cell_max_power(const DiodeParams& p) {
  p.validate();
  const double vt = thermal_voltage(p.junction_temp);
  // open-circuit bound for the shunt-free cell; shunt only lowers true V_oc
  const double v_oc = p.ideality_cell * vt * std::log(p.light_current / p.saturation_current + 1.0);
  MaxPowerPoint best{0.0, 0.0};
  if (v_oc <= 0.0) return best;
  constexpr int kGrid = 512;
  for (int i = 0; i < kGrid; ++i) {
    const double v = v_oc * static_cast<double>(i) / (kGrid - 1);
    const double pw = cell_power(v, p);
    if (pw > best.power) best = {v, pw};
  }
  return best;
}

double module_temperature(const ModuleWeather& w) {
  w.validate();
  return 0.94 * w.ambient_temp_c + 0.02 * w.irradiance - 1.5 * w.wind_speed + 0.35;
}

double solar_cos_zenith(UtcTime t, double lat_deg, double lon_deg) {
  constexpr double kDegToRad = M_PI / 180.0;
  const int doy = day_of_year(t);
  // day-angle cosine approximation of the declination
  const double decl = -23.44 * kDegToRad * std::cos(2.0 * M_PI * (doy + 10) / 365.25);
  // true solar time from the longitude offset only
  const double solar_hour = hour_of_day(t) + lon_deg / 15.0;
  const double hour_angle = (solar_hour - 12.0) * 15.0 * kDegToRad;
  const double lat = lat_deg * kDegToRad;
  return std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
}

double clearsky_ghi(double cos_zenith) {
  if (cos_zenith <= 0.0) return 0.0;
  return kHaurwitzScale * cos_zenith * std::exp(-kHaurwitzDecay / cos_zenith);
}

double plant_power(double capacity_mw, const ModuleWeather& w) {
  if (capacity_mw < 0.0) throw ParameterError("plant_power: capacity must be >= 0");
  w.validate();
  const double t_m = module_temperature(w);
  const double raw = capacity_mw * (w.irradiance / 1000.0) * (1.0 + kTempCoeff * (t_m - 25.0));
  return std::min(std::max(raw, 0.0), capacity_mw);
}

}  // namespace pvnet::physics
