#include "pvnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pvnet/physics.hpp"

namespace pvnet::features {

Tensor csm_channel(const GridSpec& grid, UtcTime t) {
  grid.validate();
  Tensor plane({grid.n_rows, grid.n_cols});
  for (int r = 0; r < grid.n_rows; ++r)
    for (int c = 0; c < grid.n_cols; ++c)
      plane.at(r, c) = physics::clearsky_ghi(physics::solar_cos_zenith(t, grid.cell_lat(r), grid.cell_lon(c)));
  return plane;
}

PowerSeries downsample_power(const PowerSeries& series, int64_t target_dt) {
  if (series.dt <= 0) throw ParameterError("downsample_power: source step must be positive");
  if (target_dt <= 0 || target_dt % series.dt != 0)
    throw ParameterError("downsample_power: target step " + std::to_string(target_dt) +
                         " is not a multiple of source step " + std::to_string(series.dt));
  const int64_t stride = target_dt / series.dt;
  PowerSeries out;
  out.t0 = series.t0;
  out.dt = target_dt;
  for (int64_t i = 0; i < series.size(); i += stride) out.values_mw.push_back(series.values_mw[static_cast<size_t>(i)]);
  return out;
}

namespace {

// index of the sample at exactly time t (series are gapless and regular)
int series_index(const PowerSeries& power, UtcTime t, const char* what) {
  if (power.dt <= 0) throw ParameterError(std::string(what) + ": power series step must be positive");
  const int64_t off = t - power.t0;
  if (off % power.dt != 0)
    throw ParameterError(std::string(what) + ": instant " + format_utc(t) + " is not on the series time grid");
  const int64_t idx = off / power.dt;
  if (idx < 0 || idx >= power.size())
    throw ParameterError(std::string(what) + ": instant " + format_utc(t) + " outside series range");
  return static_cast<int>(idx);
}

}  // namespace

Tensor persistence_channel(const PowerSeries& power, UtcTime t, const GridSpec& grid, int64_t lag) {
  if (t - lag < power.t0)
    throw ParameterError("persistence_channel: " + format_utc(t) + " minus lag precedes series start " +
                         format_utc(power.t0));
  const int idx = series_index(power, t - lag, "persistence_channel");
  return Tensor::full({grid.n_rows, grid.n_cols}, power.values_mw[static_cast<size_t>(idx)]);
}

Dataset Dataset::build(const RasterSeries& raster, const PowerSeries& power) {
  raster.validate();
  if (raster.t0 != power.t0 || raster.dt != power.dt)
    throw ParameterError("build_dataset: raster and power series are not aligned (t0/dt differ)");
  if (power.size() != raster.n_frames())
    throw ParameterError("build_dataset: raster has " + std::to_string(raster.n_frames()) + " frames but power has " +
                         std::to_string(power.size()) + " samples");
  if (kPersistenceLag % raster.dt != 0)
    throw ParameterError("build_dataset: the persistence lag is not a whole number of steps");
  const int lag_steps = static_cast<int>(kPersistenceLag / raster.dt);
  const int first_target = std::max(kWindowLen - 1, lag_steps);
  const int n = raster.n_frames();
  if (n < first_target + 1)
    throw ParameterError("build_dataset: need at least " + std::to_string(first_target + 1) + " timesteps, got " +
                         std::to_string(n));
  const int i_dswrf = raster.channel_index("DSWRF");
  const int i_eacc = raster.channel_index("EACC");
  const int i_tmp = raster.channel_index("TMP");
  if (i_dswrf < 0 || i_eacc < 0 || i_tmp < 0)
    throw ParameterError("build_dataset: raster must carry DSWRF, EACC and TMP channels");

  Dataset ds;
  ds.grid_ = raster.grid;
  ds.first_target_ = first_target;
  const int rows = raster.grid.n_rows, cols = raster.grid.n_cols;
  const int64_t plane = static_cast<int64_t>(rows) * cols;
  ds.frames_ = Tensor({n, 5, rows, cols});
  ds.times_.resize(static_cast<size_t>(n));

  const int src_c = raster.n_channels();
  for (int t = 0; t < n; ++t) {
    ds.times_[static_cast<size_t>(t)] = raster.time_at(t);
    double* dst = ds.frames_.ptr() + static_cast<int64_t>(t) * 5 * plane;
    const double* src = raster.frames.ptr() + static_cast<int64_t>(t) * src_c * plane;
    std::memcpy(dst + 0 * plane, src + static_cast<int64_t>(i_dswrf) * plane, sizeof(double) * plane);
    std::memcpy(dst + 1 * plane, src + static_cast<int64_t>(i_eacc) * plane, sizeof(double) * plane);
    std::memcpy(dst + 2 * plane, src + static_cast<int64_t>(i_tmp) * plane, sizeof(double) * plane);
    // per-instant persistence, clamped to the series start for the frames
    // that precede the first full lag (they only appear as window history)
    const int p_idx = std::max(0, t - lag_steps);
    const double pss = power.values_mw[static_cast<size_t>(p_idx)];
    std::fill_n(dst + 3 * plane, plane, pss);
    const Tensor csm = csm_channel(raster.grid, raster.time_at(t));
    std::memcpy(dst + 4 * plane, csm.ptr(), sizeof(double) * plane);
  }

  ds.targets_.resize(static_cast<size_t>(ds.n_windows()));
  for (int w = 0; w < ds.n_windows(); ++w)
    ds.targets_[static_cast<size_t>(w)] = power.values_mw[static_cast<size_t>(w + first_target)];
  return ds;
}

FeatureWindow Dataset::window(int i) const {
  if (i < 0 || i >= n_windows())
    throw ParameterError("window index " + std::to_string(i) + " out of range [0, " + std::to_string(n_windows()) + ")");
  const int target_idx = i + first_target_;
  const int rows = grid_.n_rows, cols = grid_.n_cols;
  const int64_t frame_sz = 5 * static_cast<int64_t>(rows) * cols;
  FeatureWindow w;
  w.inputs = Tensor({kWindowLen, 5, rows, cols});
  for (int k = 0; k < kWindowLen; ++k) {
    const int f = target_idx - (kWindowLen - 1) + k;
    std::memcpy(w.inputs.ptr() + static_cast<int64_t>(k) * frame_sz, frames_.ptr() + static_cast<int64_t>(f) * frame_sz,
                sizeof(double) * frame_sz);
    w.window_times[static_cast<size_t>(k)] = times_[static_cast<size_t>(f)];
  }
  w.target = targets_[static_cast<size_t>(i)];
  w.target_time = times_[static_cast<size_t>(target_idx)];
  return w;
}

void Dataset::fill_encoder_input(int window, Tensor& dst) const {
  const int rows = grid_.n_rows, cols = grid_.n_cols;
  dst.require_shape({5, kWindowLen, rows, cols}, "encoder input");
  const int target_idx = window + first_target_;
  const int64_t plane = static_cast<int64_t>(rows) * cols;
  for (int c = 0; c < 5; ++c) {
    for (int k = 0; k < kWindowLen; ++k) {
      const int f = target_idx - (kWindowLen - 1) + k;
      std::memcpy(dst.ptr() + (static_cast<int64_t>(c) * kWindowLen + k) * plane,
                  frames_.ptr() + (static_cast<int64_t>(f) * 5 + c) * plane, sizeof(double) * plane);
    }
  }
}

NormStats Dataset::normalize(int n_train, double total_capacity_mw) {
  if (normalized_) throw ParameterError("dataset already normalized");
  if (n_train < 1 || n_train > n_windows()) throw ParameterError("normalize: train split empty or out of range");
  if (total_capacity_mw <= 0.0) throw ParameterError("normalize: capacity must be positive");

  const int64_t plane = static_cast<int64_t>(grid_.n_rows) * grid_.n_cols;
  NormStats st;
  st.mean.assign(5, 0.0);
  st.std.assign(5, 0.0);
  st.target_scale = total_capacity_mw;

  // statistics weighted exactly as the train windows see the frames
  // (a frame contributes once per window that contains it)
  for (int c = 0; c < 5; ++c) {
    double sum = 0.0, sum_sq = 0.0;
    int64_t count = 0;
    for (int w = 0; w < n_train; ++w) {
      const int target_idx = w + first_target_;
      for (int k = 0; k < kWindowLen; ++k) {
        const int f = target_idx - (kWindowLen - 1) + k;
        const double* p = frames_.ptr() + (static_cast<int64_t>(f) * 5 + c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          sum += p[i];
          sum_sq += p[i] * p[i];
        }
        count += plane;
      }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
    st.mean[static_cast<size_t>(c)] = mean;
    st.std[static_cast<size_t>(c)] = std::max(std::sqrt(var), 1e-6);
  }

  normalize_with(st);
  return st;
}

void Dataset::normalize_with(const NormStats& st) {
  if (normalized_) throw ParameterError("dataset already normalized");
  if (st.mean.size() != 5 || st.std.size() != 5 || st.target_scale <= 0.0)
    throw ParameterError("normalize_with: malformed statistics");
  const int64_t plane = static_cast<int64_t>(grid_.n_rows) * grid_.n_cols;
  for (int f = 0; f < n_frames(); ++f) {
    for (int c = 0; c < 5; ++c) {
      double* p = frames_.ptr() + (static_cast<int64_t>(f) * 5 + c) * plane;
      const double mean = st.mean[static_cast<size_t>(c)];
      const double inv = 1.0 / std::max(st.std[static_cast<size_t>(c)], 1e-6);
      for (int64_t i = 0; i < plane; ++i) p[i] = (p[i] - mean) * inv;
    }
  }
  for (double& t : targets_) t /= st.target_scale;
  stats_ = st;
  normalized_ = true;
}

void Dataset::denormalize_target(std::vector<double>& values) const {
  if (!normalized_) return;
  for (double& v : values) v *= stats_.target_scale;
}

Split split_train_val(const Dataset& dataset, double fraction) {
  if (dataset.n_windows() < 1) throw ParameterError("split_train_val: empty dataset");
  if (fraction <= 0.0 || fraction >= 1.0) throw ParameterError("split_train_val: fraction must be in (0,1)");
  Split s;
  s.n_train = static_cast<int>(std::floor(fraction * dataset.n_windows()));
  s.n_val = dataset.n_windows() - s.n_train;
  if (s.n_train < 1 || s.n_val < 1)
    throw ParameterError("split_train_val: a side of the split is empty (n=" + std::to_string(dataset.n_windows()) +
                         ", fraction=" + std::to_string(fraction) + ")");
  return s;
}

}  // namespace pvnet::features
