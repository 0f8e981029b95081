#include <doctest.h>

#include <cmath>

#include "pvnet/features.hpp"
#include "pvnet/synth.hpp"

using namespace pvnet;
using namespace pvnet::features;

namespace {

// small synthetic source shared by the feature tests
struct Source {
  RasterSeries raster;
  PowerSeries power;
  Fleet fleet;
};

Source make_source(int days = 8) {
  io::RunConfig cfg;
  cfg.grid_rows = 8;
  cfg.grid_cols = 8;
  cfg.days = days;
  cfg.n_plants = 25;
  cfg.conv_channels = {4, 4, 8, 8};
  const synth::SynthDataset ds = synth::generate_dataset(cfg, "");
  return {ds.raster, ds.power, ds.fleet};
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("csm plane is zero at winter midnight and bounded by the model maximum") {
  GridSpec g;
  const Tensor night = csm_channel(g, parse_utc("2019-01-15T00:00:00Z"));
  CHECK(night.max() == 0.0);
  const Tensor noon = csm_channel(g, parse_utc("2019-06-21T12:00:00Z"));
  CHECK(noon.max() > 0.0);
  CHECK(noon.max() <= 1098.0);
  CHECK(noon.min() >= 0.0);

  // at local noon, lower latitude rows see at least as much clear-sky light
  for (int c = 0; c < g.n_cols; ++c)
    for (int r = 0; r + 1 < g.n_rows; ++r) CHECK(noon.at(r + 1, c) >= noon.at(r, c) - 1e-9);
}

TEST_CASE("downsample keeps every stride-th sample") {
  PowerSeries fine;
  fine.t0 = parse_utc("2019-01-01T00:00:00Z");
  fine.dt = 900;  // 15 min
  for (int i = 0; i < 48; ++i) fine.values_mw.push_back(static_cast<double>(i));

  const PowerSeries same = downsample_power(fine, 900);
  CHECK(same.size() == fine.size());

  const PowerSeries coarse = downsample_power(fine, 10800);
  CHECK(coarse.dt == 10800);
  REQUIRE(coarse.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(coarse.values_mw[static_cast<size_t>(i)] == 12.0 * i);

  PowerSeries constant = fine;
  std::fill(constant.values_mw.begin(), constant.values_mw.end(), 3.5);
  const PowerSeries cc = downsample_power(constant, 1800);
  for (double v : cc.values_mw) CHECK(v == 3.5);

  CHECK_THROWS_AS(downsample_power(fine, 1000), ParameterError);
}

TEST_CASE("persistence plane broadcasts the lagged scalar") {
  GridSpec g;
  PowerSeries p;
  p.t0 = parse_utc("2019-01-01T00:00:00Z");
  p.dt = 10800;
  for (int i = 0; i < 40; ++i) p.values_mw.push_back(10.0 + i);

  // exactly 48 h after the start -> the first sample
  const Tensor plane = persistence_channel(p, p.t0 + 48 * 3600, g);
  CHECK(plane.shape() == std::vector<int>{16, 16});
  for (int64_t i = 0; i < plane.numel(); ++i) CHECK(plane[i] == 10.0);

  // index arithmetic matches a timestamp map
  for (int idx = 16; idx < 40; ++idx) {
    const Tensor pl = persistence_channel(p, p.time_at(idx), g);
    CHECK(pl[0] == p.values_mw[static_cast<size_t>(idx - 16)]);
  }

  CHECK_THROWS_AS(persistence_channel(p, p.t0 + 45 * 3600, g), ParameterError);

  PowerSeries constant = p;
  std::fill(constant.values_mw.begin(), constant.values_mw.end(), 7.5);
  const Tensor cp = persistence_channel(constant, p.time_at(20), g);
  for (int64_t i = 0; i < cp.numel(); ++i) CHECK(cp[i] == 7.5);
}

TEST_CASE("windows have the documented shape, order and alignment") {
  const Source src = make_source();
  const Dataset ds = Dataset::build(src.raster, src.power);
  const int n = src.raster.n_frames();
  CHECK(ds.n_windows() == n - 16);

  const FeatureWindow w = ds.window(0);
  CHECK(w.inputs.shape() == std::vector<int>{8, 5, 8, 8});
  CHECK(w.target_time == src.raster.time_at(16));
  CHECK(w.target == src.power.values_mw[16]);

  // window instants are consecutive steps ending at the target
  for (int k = 0; k < 8; ++k)
    CHECK(w.window_times[static_cast<size_t>(k)] == w.target_time - (7 - k) * src.raster.dt);

  // channel 0 of the last frame equals the raster DSWRF frame at target time
  const int64_t plane = 64;
  for (int64_t i = 0; i < plane; ++i)
    CHECK(w.inputs[(7 * 5 + 0) * plane + i] == src.raster.frames[(16 * 3 + 0) * plane + i]);

  // windows are strictly ordered by target time
  for (int i = 1; i < ds.n_windows(); ++i) CHECK(ds.target_time(i) > ds.target_time(i - 1));
}

TEST_CASE("no window references data after its target time") {
  const Source src = make_source();
  const Dataset ds = Dataset::build(src.raster, src.power);
  for (int i = 0; i < ds.n_windows(); i += 5) {
    const FeatureWindow w = ds.window(i);
    for (UtcTime t : w.window_times) CHECK(t <= w.target_time);
  }
}

TEST_CASE("per-frame persistence values track the minus-48h power with clamping") {
  const Source src = make_source();
  const Dataset ds = Dataset::build(src.raster, src.power);
  const int64_t plane = 64;
  const int lag_steps = 16;
  for (int w = 0; w < ds.n_windows(); w += 3) {
    const int target_idx = w + kFirstTargetIndex;
    const FeatureWindow fw = ds.window(w);
    for (int k = 0; k < 8; ++k) {
      const int frame_idx = target_idx - 7 + k;
      const int expect_idx = std::max(0, frame_idx - lag_steps);
      const double expect = src.power.values_mw[static_cast<size_t>(expect_idx)];
      CHECK(fw.inputs[(static_cast<int64_t>(k) * 5 + 3) * plane] == expect);
      // the persistence input never postdates target - 48 h
      CHECK(src.power.time_at(expect_idx) <= fw.target_time - 48 * 3600);
    }
  }
}

TEST_CASE("minimum viable dataset has exactly one window") {
  const Source src = make_source();
  RasterSeries r17 = src.raster;
  r17.frames = Tensor({17, 3, 8, 8});
  std::copy(src.raster.frames.ptr(), src.raster.frames.ptr() + r17.frames.numel(), r17.frames.ptr());
  PowerSeries p17 = src.power;
  p17.values_mw.resize(17);
  const Dataset ds = Dataset::build(r17, p17);
  CHECK(ds.n_windows() == 1);

  RasterSeries r16 = src.raster;
  r16.frames = Tensor({16, 3, 8, 8});
  std::copy(src.raster.frames.ptr(), src.raster.frames.ptr() + r16.frames.numel(), r16.frames.ptr());
  PowerSeries p16 = src.power;
  p16.values_mw.resize(16);
  CHECK_THROWS_AS(Dataset::build(r16, p16), ParameterError);
}

TEST_CASE("normalization: train stats give zero mean unit variance on the train split") {
  const Source src = make_source(12);
  Dataset ds = Dataset::build(src.raster, src.power);
  const Split split = split_train_val(ds, 0.75);
  const NormStats st = ds.normalize(split.n_train, src.fleet.total_capacity_mw);

  // recompute over the train windows exactly as they are consumed
  const int64_t plane = 64;
  for (int c = 0; c < 5; ++c) {
    double sum = 0.0, sq = 0.0;
    int64_t count = 0;
    for (int w = 0; w < split.n_train; ++w) {
      const FeatureWindow fw = ds.window(w);
      for (int k = 0; k < 8; ++k)
        for (int64_t i = 0; i < plane; ++i) {
          const double v = fw.inputs[(static_cast<int64_t>(k) * 5 + c) * plane + i];
          sum += v;
          sq += v * v;
          ++count;
        }
    }
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    CHECK(std::abs(mean) <= 1e-10);
    if (st.std[static_cast<size_t>(c)] > 1e-6)  // not a floored channel
      CHECK(std::abs(std::sqrt(std::max(var, 0.0)) - 1.0) <= 1e-6);
  }

  // targets are normalized by total capacity
  for (int w = 0; w < ds.n_windows(); ++w) {
    CHECK(ds.target(w) >= 0.0);
    CHECK(ds.target(w) <= 1.0);
  }

  CHECK_THROWS_AS(ds.normalize(split.n_train, src.fleet.total_capacity_mw), ParameterError);
}

TEST_CASE("a constant channel normalizes to zeros through the std floor") {
  const Source src = make_source();
  RasterSeries flat = src.raster;
  const int64_t plane = 64;
  for (int t = 0; t < flat.n_frames(); ++t)
    for (int64_t i = 0; i < plane; ++i) flat.frames[(static_cast<int64_t>(t) * 3 + 2) * plane + i] = 300.0;
  Dataset ds = Dataset::build(flat, src.power);
  ds.normalize(ds.n_windows() / 2, src.fleet.total_capacity_mw);
  const FeatureWindow w = ds.window(0);
  for (int k = 0; k < 8; ++k)
    for (int64_t i = 0; i < plane; ++i) CHECK(w.inputs[(static_cast<int64_t>(k) * 5 + 2) * plane + i] == 0.0);
}

TEST_CASE("normalize then denormalize restores the target scale") {
  const Source src = make_source();
  Dataset ds = Dataset::build(src.raster, src.power);
  std::vector<double> raw;
  for (int w = 0; w < ds.n_windows(); ++w) raw.push_back(ds.target(w));
  ds.normalize(ds.n_windows() / 2, src.fleet.total_capacity_mw);
  std::vector<double> norm;
  for (int w = 0; w < ds.n_windows(); ++w) norm.push_back(ds.target(w));
  ds.denormalize_target(norm);
  for (size_t i = 0; i < raw.size(); ++i) CHECK(norm[i] == doctest::Approx(raw[i]).epsilon(1e-12));
}

TEST_CASE("chronological split arithmetic") {
  const Source src = make_source(12);
  const Dataset ds = Dataset::build(src.raster, src.power);
  const Split s = split_train_val(ds, 0.75);
  CHECK(s.n_train == static_cast<int>(std::floor(0.75 * ds.n_windows())));
  CHECK(s.n_train + s.n_val == ds.n_windows());
  CHECK(ds.target_time(s.n_train - 1) < ds.target_time(s.n_train));

  CHECK_THROWS_AS(split_train_val(ds, 0.0), ParameterError);
  CHECK_THROWS_AS(split_train_val(ds, 1.0), ParameterError);

  // fraction one half of four windows -> two and two
  RasterSeries r20 = src.raster;
  r20.frames = Tensor({20, 3, 8, 8});
  std::copy(src.raster.frames.ptr(), src.raster.frames.ptr() + r20.frames.numel(), r20.frames.ptr());
  PowerSeries p20 = src.power;
  p20.values_mw.resize(20);
  const Dataset small = Dataset::build(r20, p20);
  CHECK(small.n_windows() == 4);
  const Split half = split_train_val(small, 0.5);
  CHECK(half.n_train == 2);
  CHECK(half.n_val == 2);
}

TEST_CASE("encoder layout carries the same values as the feature window") {
  const Source src = make_source();
  Dataset ds = Dataset::build(src.raster, src.power);
  const FeatureWindow fw = ds.window(3);
  Tensor enc({5, 8, 8, 8});
  ds.fill_encoder_input(3, enc);
  const int64_t plane = 64;
  for (int c = 0; c < 5; ++c)
    for (int t = 0; t < 8; ++t)
      for (int64_t i = 0; i < plane; ++i)
        CHECK(enc[(static_cast<int64_t>(c) * 8 + t) * plane + i] ==
              fw.inputs[(static_cast<int64_t>(t) * 5 + c) * plane + i]);
}

TEST_SUITE_END();
