#include "pvnet/data.hpp"

#include <algorithm>
#include <cmath>

namespace pvnet {

void GridSpec::validate() const {
  if (dlat <= 0.0 || dlon <= 0.0) throw ParameterError("grid: cell size must be positive");
  if (n_rows < 4 || n_cols < 4 || n_rows % 2 != 0 || n_cols % 2 != 0)
    throw ParameterError("grid: rows/cols must be even and >= 4, got " + std::to_string(n_rows) + "x" +
                         std::to_string(n_cols));
}

bool GridSpec::locate(double lat, double lon, int* row, int* col) const {
  // north and west cell edges are inclusive
  const double r = std::ceil((lat0 + dlat / 2.0 - lat) / dlat) - 1.0;
  const double c = std::ceil((lon - lon0) / dlon + 0.5) - 1.0;
  if (r < 0 || r >= n_rows || c < 0 || c >= n_cols) return false;
  *row = static_cast<int>(r);
  *col = static_cast<int>(c);
  return true;
}

int RasterSeries::channel_index(const std::string& name) const {
  const auto it = std::find(channels.begin(), channels.end(), name);
  return it == channels.end() ? -1 : static_cast<int>(it - channels.begin());
}

void RasterSeries::validate() const {
  grid.validate();
  if (frames.ndim() != 4)
    throw DimensionError("raster: frames must be [T,C,rows,cols], got " + shape_str(frames.shape()));
  if (frames.dim(1) != n_channels())
    throw DimensionError("raster: " + std::to_string(channels.size()) + " channel names for C=" +
                         std::to_string(frames.dim(1)));
  if (frames.dim(2) != grid.n_rows || frames.dim(3) != grid.n_cols)
    throw DimensionError("raster: frame shape " + shape_str(frames.shape()) + " does not match grid " +
                         std::to_string(grid.n_rows) + "x" + std::to_string(grid.n_cols));
  if (dt <= 0) throw ParameterError("raster: dt must be positive");
  frames.require_finite("raster frames");
  const int cloud = channel_index("EACC");
  if (cloud >= 0) {
    const int64_t plane = static_cast<int64_t>(grid.n_rows) * grid.n_cols;
    for (int t = 0; t < n_frames(); ++t) {
      const double* p = frames.ptr() + (static_cast<int64_t>(t) * n_channels() + cloud) * plane;
      for (int64_t i = 0; i < plane; ++i)
        if (p[i] < 0.0 || p[i] > 1.0)
          throw ParameterError("raster: cloud-cover value " + std::to_string(p[i]) + " outside [0,1] at frame " +
                               std::to_string(t));
    }
  }
}

Fleet Fleet::create(std::vector<Plant> plants, const GridSpec& grid) {
  grid.validate();
  Fleet f;
  f.plants = std::move(plants);
  int row = 0, col = 0;
  for (size_t i = 0; i < f.plants.size(); ++i) {
    const Plant& p = f.plants[i];
    if (p.capacity_mw <= 0.0)
      throw ParameterError("fleet: plant " + std::to_string(i) + " capacity must be > 0 MW");
    if (!grid.locate(p.lat, p.lon, &row, &col))
      throw ParameterError("fleet: plant " + std::to_string(i) + " at (" + std::to_string(p.lat) + ", " +
                           std::to_string(p.lon) + ") lies outside the grid");
    f.total_capacity_mw += p.capacity_mw;
  }
  return f;
}

}  // namespace pvnet
