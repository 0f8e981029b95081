#pragma once

#include <string>
#include <vector>

#include "pvnet/features.hpp"
#include "pvnet/model.hpp"

namespace pvnet::occlusion {

struct SensitivityMap {
  std::string channel;
  GridSpec grid;
  Tensor values;  // [rows, cols], mean absolute prediction change, MW
};

struct DensityMap {
  GridSpec grid;   // quarter-degree refinement of the model grid
  Tensor values;   // [2*rows, 2*cols], installed capacity per cell, MW
};

// Sets one channel's 2x2 spatial patch to `fill` across all window frames.
Tensor occlude_patch(const Tensor& window_inputs, int channel, int row, int col, double fill);

// Mean |prediction change| per grid cell over the sampled windows, probing
// every 2x2 patch position at stride 1. Fill defaults to the channel's
// training mean, which is 0 in normalized units.
SensitivityMap sensitivity_map(const model::PVNetParams& params, const features::Dataset& ds,
                               const std::vector<int>& window_indices, int channel, double fill = 0.0);

// Seeded sample of validation-window indices for the sensitivity analysis.
std::vector<int> sample_windows(int first, int count, int sample_size, uint64_t seed);

// Plant capacity summed per 0.25-degree cell; ties go to the north-west cell.
DensityMap density_map(const Fleet& fleet, const GridSpec& model_grid);

// Channels ordered by total map sensitivity, descending; ties keep the fixed
// channel order.
std::vector<std::string> channel_ranking(const std::vector<SensitivityMap>& maps);

// 8-bit binary PGM, value-scaled so the highest sensitivity is darkest.
void write_pgm(const std::string& path, const Tensor& values);

// Spearman rank correlation with average ranks on ties.
double spearman(const Tensor& a, const Tensor& b);

// Sum 2x2 blocks of the fine map so it matches the coarse model grid.
Tensor downsample_2x2_sum(const Tensor& fine);

}  // namespace pvnet::occlusion
