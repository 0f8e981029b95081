#pragma once

#include <string>

#include "pvnet/data.hpp"
#include "pvnet/io.hpp"

namespace pvnet::synth {

// Cloud-cover fraction stack [T, rows, cols] in [0,1]: a temporal AR(1)
// latent per cell (coefficient 0.85), three passes of a 3x3 box filter in
// space, then a logistic squash. Randomness is counter-based per (step,cell).
Tensor gen_cloud_field(const GridSpec& grid, int n_steps, uint64_t seed);

// Air temperature stack [T, rows, cols] in kelvin: 283 K baseline, annual
// sinusoid (amplitude 10 K), diurnal sinusoid (amplitude 5 K, local solar
// time), plus a smoothed AR(1) anomaly with 2 K std clamped to +-5 K.
Tensor gen_temperature_field(const GridSpec& grid, int n_steps, uint64_t seed, UtcTime t0, int64_t dt);

// DSWRF = clearsky * (1 - 0.75 * cloud^3.4), elementwise.
Tensor irradiance_from_cloud(const Tensor& clearsky, const Tensor& cloud);

// Plants drawn from a south-west-tilted density; capacities log-uniform in
// [1, 50] MW. concentration 0 is uniform.
Fleet gen_fleet(const GridSpec& grid, int n_plants, uint64_t seed, double concentration);

// Sum of plant_power over the fleet at each timestep, reading each plant's
// cell from the DSWRF/TMP channels with a fixed 2 m/s wind proxy.
PowerSeries aggregate_pv_power(const Fleet& fleet, const RasterSeries& weather);

struct SynthDataset {
  RasterSeries raster;
  PowerSeries power;
  Fleet fleet;
};

// Fixed artifact names inside a dataset directory.
std::string raster_path(const std::string& dir);
std::string power_path(const std::string& dir);
std::string fleet_path(const std::string& dir);

// End-to-end generation from a run config; writes the three artifact files
// into out_dir when it is non-empty.
SynthDataset generate_dataset(const io::RunConfig& cfg, const std::string& out_dir);

}  // namespace pvnet::synth
