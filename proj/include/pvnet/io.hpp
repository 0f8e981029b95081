#pragma once

#include <string>
#include <vector>

#include "pvnet/data.hpp"

namespace pvnet::io {

// All binary payloads are 32-bit little-endian floats behind an ASCII header;
// text files are plain UTF-8. Writers stage to a temp file and rename, so a
// crashed run never leaves a half-written artifact behind.

// --- gridded raster stack, magic PVRS1 -------------------------------------

void write_raster(const std::string& path, const RasterSeries& series);
RasterSeries read_raster(const std::string& path);

// --- power time series, text, magic-less CSV with fixed header -------------

void write_series(const std::string& path, const PowerSeries& series);
PowerSeries read_series(const std::string& path);

// --- plant fleet, magic PVFL1 ----------------------------------------------

void write_fleet(const std::string& path, const Fleet& fleet);
Fleet read_fleet(const std::string& path, const GridSpec& grid);

// --- model checkpoint, magic PVNW1 ------------------------------------------

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::vector<std::string> config_echo;  // key = value lines
  std::vector<NamedTensor> tensors;

  const Tensor& find(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// Round a tensor through 32-bit floats, the precision parameters carry on disk.
Tensor quantize_f32(const Tensor& t);

// --- run configuration -----------------------------------------------------

struct RunConfig {
  uint64_t seed = 42;

  // synthetic dataset
  int grid_rows = 16;
  int grid_cols = 16;
  double lat0 = 54.5;
  double lon0 = 5.5;
  double dlat = 0.5;
  double dlon = 0.5;
  std::string start_time = "2019-01-01T00:00:00Z";
  int days = 480;
  int64_t step_seconds = 10800;
  int n_plants = 1000;
  double concentration = 1.0;

  // model
  std::vector<int> conv_channels = {64, 64, 128, 128, 256, 256};  // pool after each pair
  int fc_dim = 512;
  int lstm_units = 128;
  double dropout_conv = 0.20;
  double dropout_fc = 0.30;

  // training
  double lr = 0.0015;
  int batch_size = 32;
  int epochs = 60;
  double train_fraction = 0.75;

  // evaluation / occlusion
  std::string eval_filter = "measured";  // or "both"
  int occlusion_samples = 64;

  GridSpec grid() const;
  void validate() const;  // throws ConfigError naming the offending key
};

// Parse `key = value` lines with `#` comments; unknown keys are rejected.
// Missing keys keep their documented defaults. An empty file is a valid
// all-defaults config.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Canonical `key = value` serialization of the effective config.
std::vector<std::string> echo_config(const RunConfig& cfg);

}  // namespace pvnet::io
