#pragma once

#include <string>
#include <vector>

#include "pvnet/data.hpp"

namespace pvnet::eval {

struct MetricsReport {
  double rmse_mw = 0.0;
  double mae_mw = 0.0;
  double nrmse_pct = 0.0;
  double nmae_pct = 0.0;
  int n_points = 0;
  double capacity_mw = 0.0;
  std::string filter_rule;
};

struct PairedSamples {
  std::vector<UtcTime> times;
  std::vector<double> measured;
  std::vector<double> predicted;
  std::string filter_rule;
};

// Pairs the overlapping instants of two aligned series and keeps those with
// measured > 0 (and, optionally, predicted > 0 as well).
PairedSamples daylight_filter(const PowerSeries& measured, const PowerSeries& predicted,
                              bool require_predicted_positive = false);

// Filters model and baseline against the measurements on one shared index
// set, so the two reports are always comparable.
struct ComparableSamples {
  PairedSamples model;
  PairedSamples baseline;
};
ComparableSamples filter_for_comparison(const PowerSeries& measured, const PowerSeries& model,
                                        const PowerSeries& baseline, bool require_predicted_positive = false);

MetricsReport compute_metrics(const PairedSamples& pairs, double capacity_mw);

// prediction(t) = measured(t - horizon); the returned series starts one
// horizon after the input, where predictions first exist.
PowerSeries persistence_baseline(const PowerSeries& power, int64_t horizon_seconds = 24 * 3600);

struct Comparison {
  MetricsReport model;
  MetricsReport baseline;
  std::string text_table;
  std::string machine_lines;  // name,value,unit per line
};

Comparison compare_report(const MetricsReport& model, const MetricsReport& baseline);

}  // namespace pvnet::eval
