#include "pvnet/synth.hpp"

#include <cmath>

#include "pvnet/features.hpp"
#include "pvnet/physics.hpp"

namespace pvnet::synth {

namespace {

constexpr double kArCoeff = 0.85;
constexpr double kLogisticGain = 12.0;
// share of the latent innovation variance carried by a domain-wide synoptic
// term; without it, patch-scale clouds average out over the grid and the
// aggregate barely varies day to day
constexpr double kSynopticShare = 0.10;
constexpr double kBaselineKelvin = 283.0;
constexpr double kAnnualAmp = 10.0;
constexpr double kDiurnalAmp = 5.0;
constexpr double kAnomalyStd = 2.0;
constexpr double kAnomalyClamp = 5.0;
constexpr double kWindProxy = 2.0;  // m/s

// one box-filter pass with edge renormalization, in place via scratch
void box3_pass(Tensor& field, int rows, int cols, Tensor& scratch) {
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= cols) continue;
          sum += field.at(rr, cc);
          ++count;
        }
      }
      scratch.at(r, c) = sum / count;
    }
  }
  std::swap(field, scratch);
}

}  // namespace

Tensor gen_cloud_field(const GridSpec& grid, int n_steps, uint64_t seed) {
  grid.validate();
  if (n_steps < 1) throw ParameterError("gen_cloud_field: n_steps must be >= 1");
  const int rows = grid.n_rows, cols = grid.n_cols;
  const uint64_t key = stream_key(seed, "synth.cloud");
  const double stationary = 1.0 / std::sqrt(1.0 - kArCoeff * kArCoeff);

  const uint64_t dom_key = key_with(key, 0x5d0u);
  const double w_cell = std::sqrt(1.0 - kSynopticShare);
  const double w_dom = std::sqrt(kSynopticShare);

  Tensor out({n_steps, rows, cols});
  Tensor latent({rows, cols}), smoothed({rows, cols}), scratch({rows, cols});
  for (int t = 0; t < n_steps; ++t) {
    const double eps_dom = normal01(dom_key, static_cast<uint64_t>(t));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const uint64_t ctr = (static_cast<uint64_t>(t) * rows + r) * cols + c;
        const double eps = w_cell * normal01(key, ctr) + w_dom * eps_dom;
        latent.at(r, c) = t == 0 ? stationary * eps : kArCoeff * latent.at(r, c) + eps;
      }
    }
    smoothed = latent;
    for (int pass = 0; pass < 3; ++pass) box3_pass(smoothed, rows, cols, scratch);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        out.at(t, r, c) = 1.0 / (1.0 + std::exp(-kLogisticGain * smoothed.at(r, c)));
  }
  return out;
}

Tensor gen_temperature_field(const GridSpec& grid, int n_steps, uint64_t seed, UtcTime t0, int64_t dt) {
  grid.validate();
  if (n_steps < 1) throw ParameterError("gen_temperature_field: n_steps must be >= 1");
  const int rows = grid.n_rows, cols = grid.n_cols;
  const uint64_t key = stream_key(seed, "synth.temp");
  const double stationary = 1.0 / std::sqrt(1.0 - kArCoeff * kArCoeff);
  // one box pass divides an iid field's std by 3 in the interior
  const double anomaly_scale = kAnomalyStd * 3.0 / stationary;

  Tensor out({n_steps, rows, cols});
  Tensor latent({rows, cols}), smoothed({rows, cols}), scratch({rows, cols});
  for (int t = 0; t < n_steps; ++t) {
    const UtcTime now = t0 + static_cast<int64_t>(t) * dt;
    const int doy = day_of_year(now);
    const double annual = kAnnualAmp * std::cos(2.0 * M_PI * (doy - 200) / 365.25);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const uint64_t ctr = (static_cast<uint64_t>(t) * rows + r) * cols + c;
        const double eps = normal01(key, ctr);
        latent.at(r, c) = t == 0 ? stationary * eps : kArCoeff * latent.at(r, c) + eps;
      }
    }
    smoothed = latent;
    box3_pass(smoothed, rows, cols, scratch);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double local_hour = hour_of_day(now) + grid.cell_lon(c) / 15.0;
        const double diurnal = kDiurnalAmp * std::cos(2.0 * M_PI * (local_hour - 12.0) / 24.0);
        double anomaly = anomaly_scale * smoothed.at(r, c);
        anomaly = std::min(std::max(anomaly, -kAnomalyClamp), kAnomalyClamp);
        out.at(t, r, c) = kBaselineKelvin + annual + diurnal + anomaly;
      }
    }
  }
  return out;
}

Tensor irradiance_from_cloud(const Tensor& clearsky, const Tensor& cloud) {
  if (!clearsky.same_shape(cloud))
    throw DimensionError("irradiance_from_cloud: shape mismatch " + shape_str(clearsky.shape()) + " vs " +
                         shape_str(cloud.shape()));
  Tensor out(clearsky.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = clearsky[i] * (1.0 - 0.75 * std::pow(cloud[i], 3.4));
  return out;
}

Fleet gen_fleet(const GridSpec& grid, int n_plants, uint64_t seed, double concentration) {
  grid.validate();
  if (n_plants < 1) throw ParameterError("gen_fleet: n_plants must be >= 1");
  if (concentration < 0.0) throw ParameterError("gen_fleet: concentration must be >= 0");
  const uint64_t key = stream_key(seed, "synth.fleet");
  const double north_edge = grid.lat0 + grid.dlat / 2.0;
  const double west_edge = grid.lon0 - grid.dlon / 2.0;
  const double lat_span = grid.n_rows * grid.dlat;
  const double lon_span = grid.n_cols * grid.dlon;
  const double expo = 1.0 / (1.0 + concentration);

  std::vector<Plant> plants;
  plants.reserve(static_cast<size_t>(n_plants));
  for (int j = 0; j < n_plants; ++j) {
    const uint64_t base = static_cast<uint64_t>(j) * 3;
    const double u = uniform01(key, base);
    const double v = uniform01(key, base + 1);
    const double w = uniform01(key, base + 2);
    // power-law tilt: south fraction toward 1, west fraction toward 0
    double south_frac = std::pow(u, expo);
    double west_frac = 1.0 - std::pow(v, expo);
    south_frac = std::min(std::max(south_frac, 1e-9), 1.0 - 1e-9);
    west_frac = std::min(std::max(west_frac, 1e-9), 1.0 - 1e-9);
    Plant p{};
    p.lat = north_edge - south_frac * lat_span;
    p.lon = west_edge + west_frac * lon_span;
    p.capacity_mw = std::pow(50.0, w);  // log-uniform in [1, 50)
    plants.push_back(p);
  }
  return Fleet::create(std::move(plants), grid);
}

PowerSeries aggregate_pv_power(const Fleet& fleet, const RasterSeries& weather) {
  weather.validate();
  const int i_dswrf = weather.channel_index("DSWRF");
  const int i_tmp = weather.channel_index("TMP");
  if (i_dswrf < 0 || i_tmp < 0)
    throw ParameterError("aggregate_pv_power: weather raster must carry DSWRF and TMP channels");

  const GridSpec& grid = weather.grid;
  std::vector<int64_t> cell_offsets;
  cell_offsets.reserve(fleet.plants.size());
  for (const Plant& p : fleet.plants) {
    int row = 0, col = 0;
    if (!grid.locate(p.lat, p.lon, &row, &col))
      throw ParameterError("aggregate_pv_power: fleet plant outside weather grid");
    cell_offsets.push_back(static_cast<int64_t>(row) * grid.n_cols + col);
  }

  const int64_t plane = static_cast<int64_t>(grid.n_rows) * grid.n_cols;
  const int c_count = weather.n_channels();
  PowerSeries series;
  series.t0 = weather.t0;
  series.dt = weather.dt;
  series.values_mw.resize(static_cast<size_t>(weather.n_frames()));
  for (int t = 0; t < weather.n_frames(); ++t) {
    const double* dswrf = weather.frames.ptr() + (static_cast<int64_t>(t) * c_count + i_dswrf) * plane;
    const double* tmp = weather.frames.ptr() + (static_cast<int64_t>(t) * c_count + i_tmp) * plane;
    double total = 0.0;
    for (size_t j = 0; j < fleet.plants.size(); ++j) {
      const int64_t cell = cell_offsets[j];
      const physics::ModuleWeather w{tmp[cell] - 273.15, dswrf[cell], kWindProxy};
      total += physics::plant_power(fleet.plants[j].capacity_mw, w);
    }
    series.values_mw[static_cast<size_t>(t)] = total;
  }
  return series;
}

std::string raster_path(const std::string& dir) { return dir + "/nwp.pvrs"; }
std::string power_path(const std::string& dir) { return dir + "/power.csv"; }
std::string fleet_path(const std::string& dir) { return dir + "/fleet.pvfl"; }

SynthDataset generate_dataset(const io::RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const GridSpec grid = cfg.grid();
  const UtcTime t0 = parse_utc(cfg.start_time);
  const int steps_per_day = static_cast<int>(86400 / cfg.step_seconds);
  const int n_steps = cfg.days * steps_per_day;

  const Tensor cloud = gen_cloud_field(grid, n_steps, cfg.seed);
  const Tensor temp = gen_temperature_field(grid, n_steps, cfg.seed, t0, cfg.step_seconds);

  SynthDataset ds;
  ds.raster.grid = grid;
  ds.raster.channels = kNwpChannels;
  ds.raster.t0 = t0;
  ds.raster.dt = cfg.step_seconds;
  ds.raster.frames = Tensor({n_steps, 3, grid.n_rows, grid.n_cols});

  const int64_t plane = static_cast<int64_t>(grid.n_rows) * grid.n_cols;
  Tensor cloud_t({grid.n_rows, grid.n_cols});
  for (int t = 0; t < n_steps; ++t) {
    const Tensor clearsky = features::csm_channel(grid, t0 + static_cast<int64_t>(t) * cfg.step_seconds);
    std::copy(cloud.ptr() + t * plane, cloud.ptr() + (t + 1) * plane, cloud_t.ptr());
    const Tensor dswrf = irradiance_from_cloud(clearsky, cloud_t);
    double* frame = ds.raster.frames.ptr() + static_cast<int64_t>(t) * 3 * plane;
    std::copy(dswrf.ptr(), dswrf.ptr() + plane, frame);
    std::copy(cloud_t.ptr(), cloud_t.ptr() + plane, frame + plane);
    std::copy(temp.ptr() + t * plane, temp.ptr() + (t + 1) * plane, frame + 2 * plane);
  }

  ds.fleet = gen_fleet(grid, cfg.n_plants, cfg.seed, cfg.concentration);
  ds.power = aggregate_pv_power(ds.fleet, ds.raster);

  if (!out_dir.empty()) {
    try {
      io::write_raster(raster_path(out_dir), ds.raster);
      io::write_series(power_path(out_dir), ds.power);
      io::write_fleet(fleet_path(out_dir), ds.fleet);
    } catch (const IoError& e) {
      throw IoError(std::string(e.what()) + " (while writing dataset to " + out_dir + ")");
    }
  }
  return ds;
}

}  // namespace pvnet::synth
