#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pvnet/features.hpp"
#include "pvnet/physics.hpp"
#include "pvnet/synth.hpp"

using namespace pvnet;
using namespace pvnet::synth;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.n_rows = 8;
  g.n_cols = 8;
  return g;
}

io::RunConfig small_config() {
  io::RunConfig cfg;
  cfg.grid_rows = 8;
  cfg.grid_cols = 8;
  cfg.days = 20;
  cfg.n_plants = 40;
  cfg.conv_channels = {4, 4, 8, 8};  // grid 8x8 supports two pools
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("cloud field stays in [0,1] and is seed deterministic") {
  const GridSpec g = small_grid();
  const Tensor a = gen_cloud_field(g, 50, 7);
  const Tensor b = gen_cloud_field(g, 50, 7);
  const Tensor c = gen_cloud_field(g, 50, 8);
  CHECK(a.min() >= 0.0);
  CHECK(a.max() <= 1.0);
  bool differs = false;
  for (int64_t i = 0; i < a.numel(); ++i) {
    CHECK(a[i] == b[i]);
    differs = differs || a[i] != c[i];
  }
  CHECK(differs);
  CHECK_THROWS_AS(gen_cloud_field(g, 0, 7), ParameterError);
}

TEST_CASE("cloud field lag-1 autocorrelation sits in the AR band") {
  const GridSpec g = small_grid();
  const int steps = 1000;
  const Tensor field = gen_cloud_field(g, steps, 21);
  const int64_t plane = static_cast<int64_t>(g.n_rows) * g.n_cols;
  double corr_sum = 0.0;
  int cells = 0;
  for (int64_t cell = 0; cell < plane; cell += 7) {
    double sum = 0.0, sum_sq = 0.0, cross = 0.0;
    for (int t = 0; t < steps; ++t) {
      const double v = field[t * plane + cell];
      sum += v;
      sum_sq += v * v;
      if (t > 0) cross += v * field[(t - 1) * plane + cell];
    }
    const double mean = sum / steps;
    const double var = sum_sq / steps - mean * mean;
    const double cov = cross / (steps - 1) - mean * mean;
    corr_sum += cov / var;
    ++cells;
  }
  const double corr = corr_sum / cells;
  CHECK(corr >= 0.5);
  CHECK(corr <= 0.95);
}

TEST_CASE("temperature field stays within the stated band over a year") {
  GridSpec g = small_grid();
  const UtcTime t0 = parse_utc("2019-01-01T00:00:00Z");
  const int steps = 365 * 8;
  const Tensor temp = gen_temperature_field(g, steps, 3, t0, 10800);
  CHECK(temp.min() >= 283.0 - 20.0);
  CHECK(temp.max() <= 283.0 + 20.0);

  // diurnal cycle: the sample closest to local noon beats local midnight
  const int64_t plane = static_cast<int64_t>(g.n_rows) * g.n_cols;
  const int cell = 3 * g.n_cols + 4;
  const double lon = g.cell_lon(4);
  double noon_sum = 0.0, midnight_sum = 0.0;
  int noon_n = 0, midnight_n = 0;
  for (int t = 0; t < steps; ++t) {
    const double local = std::fmod(hour_of_day(t0 + t * 10800) + lon / 15.0 + 24.0, 24.0);
    if (std::abs(local - 12.0) <= 1.5) {
      noon_sum += temp[t * plane + cell];
      ++noon_n;
    }
    if (local <= 1.5 || local >= 22.5) {
      midnight_sum += temp[t * plane + cell];
      ++midnight_n;
    }
  }
  REQUIRE(noon_n > 0);
  REQUIRE(midnight_n > 0);
  CHECK(noon_sum / noon_n - midnight_sum / midnight_n > 5.0);

  const Tensor again = gen_temperature_field(g, 16, 3, t0, 10800);
  const Tensor first = gen_temperature_field(g, 16, 3, t0, 10800);
  for (int64_t i = 0; i < again.numel(); ++i) CHECK(again[i] == first[i]);
}

TEST_CASE("irradiance attenuation formula") {
  Tensor clearsky({2, 2}, {800.0, 400.0, 100.0, 0.0});
  Tensor cloud0({2, 2});
  const Tensor same = irradiance_from_cloud(clearsky, cloud0);
  for (int64_t i = 0; i < 4; ++i) CHECK(same[i] == clearsky[i]);

  Tensor cloud1 = Tensor::full({2, 2}, 1.0);
  const Tensor quarter = irradiance_from_cloud(clearsky, cloud1);
  for (int64_t i = 0; i < 4; ++i) CHECK(quarter[i] == doctest::Approx(0.25 * clearsky[i]).epsilon(1e-12));

  Tensor half = Tensor::full({2, 2}, 0.5);
  const Tensor mid = irradiance_from_cloud(clearsky, half);
  for (int64_t i = 0; i < 4; ++i) {
    CHECK(mid[i] <= clearsky[i]);
    CHECK(mid[i] == doctest::Approx(clearsky[i] * (1.0 - 0.75 * std::pow(0.5, 3.4))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(irradiance_from_cloud(clearsky, Tensor({3, 2})), DimensionError);
}

TEST_CASE("uniform fleet spreads capacity evenly across quadrants") {
  const GridSpec g = small_grid();
  const Fleet f = gen_fleet(g, 10000, 5, 0.0);
  CHECK(f.plants.size() == 10000);
  double quad[2][2] = {};
  const double lat_mid = g.lat0 + g.dlat / 2.0 - g.n_rows * g.dlat / 2.0;
  const double lon_mid = g.lon0 - g.dlon / 2.0 + g.n_cols * g.dlon / 2.0;
  double total = 0.0;
  for (const Plant& p : f.plants) {
    quad[p.lat < lat_mid ? 1 : 0][p.lon < lon_mid ? 0 : 1] += p.capacity_mw;
    total += p.capacity_mw;
  }
  CHECK(total == doctest::Approx(f.total_capacity_mw).epsilon(1e-12));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(quad[r][c] / total - 0.25) <= 0.05);
  for (const Plant& p : f.plants) {
    CHECK(p.capacity_mw >= 1.0);
    CHECK(p.capacity_mw <= 50.0);
  }
}

TEST_CASE("concentrated fleet piles capacity into the south-west quadrant") {
  const GridSpec g = small_grid();
  const Fleet f = gen_fleet(g, 10000, 5, 1.0);
  const double lat_mid = g.lat0 + g.dlat / 2.0 - g.n_rows * g.dlat / 2.0;
  const double lon_mid = g.lon0 - g.dlon / 2.0 + g.n_cols * g.dlon / 2.0;
  double sw = 0.0, total = 0.0;
  for (const Plant& p : f.plants) {
    if (p.lat < lat_mid && p.lon < lon_mid) sw += p.capacity_mw;
    total += p.capacity_mw;
  }
  CHECK(sw / total >= 0.40);
}

TEST_CASE("aggregate power: nights are zero and STC hits nameplate") {
  GridSpec g = small_grid();
  RasterSeries weather;
  weather.grid = g;
  weather.channels = kNwpChannels;
  weather.t0 = parse_utc("2019-06-01T00:00:00Z");
  weather.dt = 10800;
  weather.frames = Tensor({2, 3, g.n_rows, g.n_cols});
  // frame 0: night everywhere. frame 1: STC at every cell.
  const double t_amb_stc = (25.0 - 0.02 * 1000.0 + 1.5 * 2.0 - 0.35) / 0.94;
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      weather.frames.at(0, 2, r, c) = 283.0;
      weather.frames.at(1, 0, r, c) = 1000.0;
      weather.frames.at(1, 2, r, c) = t_amb_stc + 273.15;
    }
  const Fleet fleet = Fleet::create({{54.0, 6.0, 5.0}, {52.0, 8.0, 7.0}}, g);
  const PowerSeries power = aggregate_pv_power(fleet, weather);
  REQUIRE(power.size() == 2);
  CHECK(power.values_mw[0] == 0.0);
  CHECK(power.values_mw[1] == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("three-plant aggregate matches a by-hand composition") {
  GridSpec g = small_grid();
  RasterSeries weather;
  weather.grid = g;
  weather.channels = kNwpChannels;
  weather.t0 = parse_utc("2019-06-01T12:00:00Z");
  weather.dt = 10800;
  weather.frames = Tensor({1, 3, g.n_rows, g.n_cols});
  for (int r = 0; r < g.n_rows; ++r)
    for (int c = 0; c < g.n_cols; ++c) {
      weather.frames.at(0, 0, r, c) = 100.0 * r + 10.0 * c;  // DSWRF varies by cell
      weather.frames.at(0, 2, r, c) = 283.15 + r;            // TMP varies by row
    }
  const Fleet fleet = Fleet::create({{54.5, 5.5, 5.0}, {54.0, 6.0, 10.0}, {52.5, 8.5, 20.0}}, g);
  const PowerSeries power = aggregate_pv_power(fleet, weather);

  double expect = 0.0;
  const int cells[3][2] = {{0, 0}, {1, 1}, {4, 6}};
  const double caps[3] = {5.0, 10.0, 20.0};
  for (int j = 0; j < 3; ++j) {
    const double irr = 100.0 * cells[j][0] + 10.0 * cells[j][1];
    const double amb = 283.15 + cells[j][0] - 273.15;
    const double tm = 0.94 * amb + 0.02 * irr - 1.5 * 2.0 + 0.35;
    double pw = caps[j] * (irr / 1000.0) * (1.0 - 0.004 * (tm - 25.0));
    pw = std::min(std::max(pw, 0.0), caps[j]);
    expect += pw;
  }
  CHECK(std::abs(power.values_mw[0] - expect) <= 1e-9);
}

TEST_CASE("generate_dataset writes consistent artifacts and is reproducible") {
  io::RunConfig cfg = small_config();
  const std::string dir = "/tmp/pvnet_synth_test";
  std::remove((dir + "/nwp.pvrs").c_str());
  std::filesystem::create_directories(dir);
  const SynthDataset ds = generate_dataset(cfg, dir);

  const int steps = cfg.days * 8;
  CHECK(ds.raster.frames.shape() == std::vector<int>{steps, 3, 8, 8});
  CHECK(ds.power.size() == steps);
  CHECK(ds.fleet.plants.size() == 40);

  // power is zero whenever the whole-grid clear sky is zero, and bounded
  for (int t = 0; t < steps; ++t) {
    const Tensor cs = features::csm_channel(ds.raster.grid, ds.raster.time_at(t));
    if (cs.max() == 0.0) CHECK(ds.power.values_mw[static_cast<size_t>(t)] == 0.0);
    CHECK(ds.power.values_mw[static_cast<size_t>(t)] <= ds.fleet.total_capacity_mw + 1e-12);
    CHECK(ds.power.values_mw[static_cast<size_t>(t)] >= 0.0);
  }

  // irradiance never exceeds clear sky
  const int64_t plane = 64;
  for (int t = 0; t < steps; t += 17) {
    const Tensor cs = features::csm_channel(ds.raster.grid, ds.raster.time_at(t));
    for (int64_t i = 0; i < plane; ++i)
      CHECK(ds.raster.frames[static_cast<int64_t>(t) * 3 * plane + i] <= cs[i] + 1e-9);
  }

  // regenerating with the same seed reproduces the files byte for byte
  const std::string bytes_raster = slurp(raster_path(dir));
  const std::string bytes_power = slurp(power_path(dir));
  const std::string bytes_fleet = slurp(fleet_path(dir));
  generate_dataset(cfg, dir);
  CHECK(slurp(raster_path(dir)) == bytes_raster);
  CHECK(slurp(power_path(dir)) == bytes_power);
  CHECK(slurp(fleet_path(dir)) == bytes_fleet);

  // cloudier skies never increase aggregate power
  RasterSeries cloudier = ds.raster;
  const int i_eacc = 1;
  for (int t = 0; t < steps; ++t) {
    const Tensor cs = features::csm_channel(ds.raster.grid, ds.raster.time_at(t));
    for (int64_t i = 0; i < plane; ++i) {
      double& cloud = cloudier.frames[(static_cast<int64_t>(t) * 3 + i_eacc) * plane + i];
      cloud = std::min(1.0, cloud + 0.3);
      cloudier.frames[static_cast<int64_t>(t) * 3 * plane + i] = cs[i] * (1.0 - 0.75 * std::pow(cloud, 3.4));
    }
  }
  const PowerSeries power2 = aggregate_pv_power(ds.fleet, cloudier);
  for (int t = 0; t < steps; ++t)
    CHECK(power2.values_mw[static_cast<size_t>(t)] <= ds.power.values_mw[static_cast<size_t>(t)] + 1e-9);
}

TEST_SUITE_END();
