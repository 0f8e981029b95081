#pragma once

#include <array>
#include <vector>

#include "pvnet/data.hpp"

namespace pvnet::features {

inline constexpr int kWindowLen = 8;
inline constexpr int64_t kPersistenceLag = 48 * 3600;
inline constexpr int kFirstTargetIndex = 16;  // 48 h of 3 h steps (default grid)

// Clear-sky irradiance plane [rows, cols] at an instant.
Tensor csm_channel(const GridSpec& grid, UtcTime t);

// Decimation to a coarser step; target_dt must be a multiple of the source dt.
PowerSeries downsample_power(const PowerSeries& series, int64_t target_dt);

// P(t - lag) broadcast to an H x W plane. Throws when t - lag precedes the
// series start; the window assembler clamps instead (see build_dataset).
Tensor persistence_channel(const PowerSeries& power, UtcTime t, const GridSpec& grid,
                           int64_t lag = kPersistenceLag);

// One training sample.
struct FeatureWindow {
  Tensor inputs;  // [T=8, C=5, H, W], channel order DSWRF, EACC, TMP, PSS, CSM
  double target;  // MW, or normalized units after normalize()
  UtcTime target_time;
  std::array<UtcTime, kWindowLen> window_times;
};

struct NormStats {
  std::vector<double> mean;  // per channel
  std::vector<double> std;   // per channel, floored at 1e-6
  double target_scale = 1.0;  // MW; targets divide by this
};

// Window collection backed by one stacked frame tensor [N, 5, H, W]; windows
// are materialized on demand. Window i targets frame index first_target() + i,
// where first_target = max(window history, persistence lag in steps) — 16 at
// the default 3 h step, so an N-step source yields N-16 windows.
class Dataset {
 public:
  static Dataset build(const RasterSeries& raster, const PowerSeries& power);

  int n_windows() const { return n_frames() - first_target_; }
  int n_frames() const { return frames_.ndim() == 4 ? frames_.dim(0) : 0; }
  int first_target() const { return first_target_; }
  const GridSpec& grid() const { return grid_; }
  const Tensor& stacked_frames() const { return frames_; }

  UtcTime target_time(int window) const { return times_[static_cast<size_t>(window + first_target_)]; }
  double target(int window) const { return targets_[static_cast<size_t>(window)]; }
  UtcTime frame_time(int frame) const { return times_[static_cast<size_t>(frame)]; }

  FeatureWindow window(int i) const;

  // Copies window i into dst laid out [C, T, H, W] for the encoder.
  void fill_encoder_input(int window, Tensor& dst) const;

  // z-score inputs and scale targets by total capacity, using statistics from
  // the first n_train windows only. Idempotent guard: throws if repeated.
  NormStats normalize(int n_train, double total_capacity_mw);

  // Applies previously computed statistics (e.g. from a checkpoint).
  void normalize_with(const NormStats& stats);

  void denormalize_target(std::vector<double>& values) const;

  bool is_normalized() const { return normalized_; }
  const NormStats& stats() const { return stats_; }

 private:
  GridSpec grid_;
  Tensor frames_;  // [N, 5, H, W]
  std::vector<UtcTime> times_;
  std::vector<double> targets_;
  NormStats stats_;
  int first_target_ = kFirstTargetIndex;
  bool normalized_ = false;
};

struct Split {
  int n_train = 0;
  int n_val = 0;
};

// First floor(fraction * n) windows train, the rest validation, no shuffling.
Split split_train_val(const Dataset& dataset, double fraction = 0.75);

}  // namespace pvnet::features
