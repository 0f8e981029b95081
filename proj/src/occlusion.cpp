#include "pvnet/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pvnet::occlusion {

Tensor occlude_patch(const Tensor& window_inputs, int channel, int row, int col, double fill) {
  if (window_inputs.ndim() != 4)
    throw DimensionError("occlude_patch: expected [T,C,H,W], got " + shape_str(window_inputs.shape()));
  const int t_len = window_inputs.dim(0), c_count = window_inputs.dim(1);
  const int h = window_inputs.dim(2), w = window_inputs.dim(3);
  if (channel < 0 || channel >= c_count) throw ParameterError("occlude_patch: channel index out of range");
  if (row < 0 || col < 0 || row + 2 > h || col + 2 > w)
    throw ParameterError("occlude_patch: 2x2 patch at (" + std::to_string(row) + "," + std::to_string(col) +
                         ") not fully inside " + std::to_string(h) + "x" + std::to_string(w) + " grid");
  Tensor out = window_inputs;
  for (int t = 0; t < t_len; ++t) {
    for (int dy = 0; dy < 2; ++dy) {
      double* base = out.ptr() + ((static_cast<int64_t>(t) * c_count + channel) * h + row + dy) * w + col;
      base[0] = fill;
      base[1] = fill;
    }
  }
  return out;
}

SensitivityMap sensitivity_map(const model::PVNetParams& params, const features::Dataset& ds,
                               const std::vector<int>& window_indices, int channel, double fill) {
  if (window_indices.empty()) throw ParameterError("sensitivity_map: need at least one window");
  const GridSpec& grid = ds.grid();
  const int h = grid.n_rows, w = grid.n_cols;
  const double scale = ds.is_normalized() ? ds.stats().target_scale : 1.0;

  Tensor patch_sum({h - 1, w - 1});
  model::WindowWorkPtr work(params.config);
  for (int idx : window_indices) {
    const features::FeatureWindow fw = ds.window(idx);
    const double base = model::predict_window(params, fw.inputs, work.p);
    for (int r = 0; r + 1 < h; ++r) {
      for (int c = 0; c + 1 < w; ++c) {
        const Tensor occluded = occlude_patch(fw.inputs, channel, r, c, fill);
        const double pred = model::predict_window(params, occluded, work.p);
        patch_sum.at(r, c) += std::abs(pred - base) * scale;
      }
    }
  }
  for (int64_t i = 0; i < patch_sum.numel(); ++i) patch_sum[i] /= static_cast<double>(window_indices.size());

  // cell value = mean over the patches covering it
  SensitivityMap map;
  map.channel = channel < static_cast<int>(kModelChannels.size()) ? kModelChannels[static_cast<size_t>(channel)]
                                                                  : std::to_string(channel);
  map.grid = grid;
  map.values = Tensor({h, w});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int pr = std::max(0, r - 1); pr <= std::min(h - 2, r); ++pr) {
        for (int pc = std::max(0, c - 1); pc <= std::min(w - 2, c); ++pc) {
          sum += patch_sum.at(pr, pc);
          ++count;
        }
      }
      map.values.at(r, c) = sum / count;
    }
  }
  return map;
}

std::vector<int> sample_windows(int first, int count, int sample_size, uint64_t seed) {
  if (count < 1) throw ParameterError("sample_windows: empty source range");
  sample_size = std::min(sample_size, count);
  // partial Fisher-Yates over the index range
  std::vector<int> pool(static_cast<size_t>(count));
  std::iota(pool.begin(), pool.end(), first);
  const uint64_t key = stream_key(seed, "occlusion.sample");
  for (int i = 0; i < sample_size; ++i) {
    const int j = i + static_cast<int>(uniform01(key, static_cast<uint64_t>(i)) * (count - i));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(std::min(j, count - 1))]);
  }
  pool.resize(static_cast<size_t>(sample_size));
  std::sort(pool.begin(), pool.end());
  return pool;
}

DensityMap density_map(const Fleet& fleet, const GridSpec& model_grid) {
  model_grid.validate();
  DensityMap dm;
  dm.grid.lat0 = model_grid.lat0 + model_grid.dlat / 4.0;
  dm.grid.lon0 = model_grid.lon0 - model_grid.dlon / 4.0;
  dm.grid.dlat = model_grid.dlat / 2.0;
  dm.grid.dlon = model_grid.dlon / 2.0;
  dm.grid.n_rows = model_grid.n_rows * 2;
  dm.grid.n_cols = model_grid.n_cols * 2;
  dm.values = Tensor({dm.grid.n_rows, dm.grid.n_cols});
  for (const Plant& p : fleet.plants) {
    int row = 0, col = 0;
    if (!dm.grid.locate(p.lat, p.lon, &row, &col))
      throw ParameterError("density_map: plant outside the refined grid");
    dm.values.at(row, col) += p.capacity_mw;
  }
  return dm;
}

std::vector<std::string> channel_ranking(const std::vector<SensitivityMap>& maps) {
  std::vector<std::pair<double, size_t>> keyed;
  for (size_t i = 0; i < maps.size(); ++i) keyed.emplace_back(maps[i].values.sum(), i);
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (const auto& [sum, i] : keyed) out.push_back(maps[i].channel);
  return out;
}

void write_pgm(const std::string& path, const Tensor& values) {
  if (values.ndim() != 2) throw DimensionError("write_pgm: expected a 2-d map");
  const double vmax = values.max();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P5\n" << values.dim(1) << ' ' << values.dim(0) << "\n255\n";
  for (int64_t i = 0; i < values.numel(); ++i) {
    const double frac = vmax > 0.0 ? values[i] / vmax : 0.0;
    out.put(static_cast<char>(static_cast<int>(std::lround(255.0 * (1.0 - frac)))));
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {
std::vector<double> ranks_with_ties(const Tensor& t) {
  const int64_t n = t.numel();
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) { return t[a] < t[b]; });
  std::vector<double> ranks(static_cast<size_t>(n));
  int64_t i = 0;
  while (i < n) {
    int64_t j = i;
    while (j + 1 < n && t[idx[static_cast<size_t>(j + 1)]] == t[idx[static_cast<size_t>(i)]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (int64_t k = i; k <= j; ++k) ranks[static_cast<size_t>(idx[static_cast<size_t>(k)])] = avg;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel() || a.numel() < 2) throw ParameterError("spearman: need two equal-length vectors");
  const std::vector<double> ra = ranks_with_ties(a);
  const std::vector<double> rb = ranks_with_ties(b);
  const double n = static_cast<double>(a.numel());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - ma, db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

Tensor downsample_2x2_sum(const Tensor& fine) {
  if (fine.ndim() != 2 || fine.dim(0) % 2 != 0 || fine.dim(1) % 2 != 0)
    throw DimensionError("downsample_2x2_sum: expected even 2-d map");
  Tensor out({fine.dim(0) / 2, fine.dim(1) / 2});
  for (int r = 0; r < out.dim(0); ++r)
    for (int c = 0; c < out.dim(1); ++c)
      out.at(r, c) = fine.at(2 * r, 2 * c) + fine.at(2 * r, 2 * c + 1) + fine.at(2 * r + 1, 2 * c) +
                     fine.at(2 * r + 1, 2 * c + 1);
  return out;
}

}  // namespace pvnet::occlusion
