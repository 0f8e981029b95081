#pragma once

#include <string>
#include <vector>

#include "pvnet/common.hpp"
#include "pvnet/tensor.hpp"

namespace pvnet {

// Regular lat/lon grid. Row 0 is the northernmost row of cell centers,
// column 0 the westernmost; latitude decreases with row index.
struct GridSpec {
  double lat0 = 54.5;  // northernmost row center, degrees
  double lon0 = 5.5;   // westernmost column center, degrees
  double dlat = 0.5;
  double dlon = 0.5;
  int n_rows = 16;
  int n_cols = 16;

  void validate() const;
  double cell_lat(int row) const { return lat0 - row * dlat; }
  double cell_lon(int col) const { return lon0 + col * dlon; }

  // Cell containing a point; ties on cell edges go to the north-west cell.
  // Returns false when the point lies outside the grid.
  bool locate(double lat, double lon, int* row, int* col) const;
};

// Time-indexed multi-channel raster stack: frames is [T, C, n_rows, n_cols].
struct RasterSeries {
  GridSpec grid;
  std::vector<std::string> channels;
  UtcTime t0 = 0;
  int64_t dt = 10800;
  Tensor frames;

  int n_frames() const { return frames.ndim() == 4 ? frames.dim(0) : 0; }
  int n_channels() const { return static_cast<int>(channels.size()); }
  UtcTime time_at(int frame) const { return t0 + static_cast<int64_t>(frame) * dt; }
  int channel_index(const std::string& name) const;  // -1 if absent

  void validate() const;
};

struct Plant {
  double lat;
  double lon;
  double capacity_mw;
};

struct Fleet {
  std::vector<Plant> plants;
  double total_capacity_mw = 0.0;

  // Validates plant positions against the grid and recomputes total capacity.
  static Fleet create(std::vector<Plant> plants, const GridSpec& grid);
};

struct PowerSeries {
  UtcTime t0 = 0;
  int64_t dt = 10800;
  std::vector<double> values_mw;

  int size() const { return static_cast<int>(values_mw.size()); }
  UtcTime time_at(int i) const { return t0 + static_cast<int64_t>(i) * dt; }
};

inline const std::vector<std::string> kNwpChannels = {"DSWRF", "EACC", "TMP"};
inline const std::vector<std::string> kModelChannels = {"DSWRF", "EACC", "TMP", "PSS", "CSM"};

}  // namespace pvnet
