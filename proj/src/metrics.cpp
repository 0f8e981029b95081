#include "pvnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pvnet::eval {

PairedSamples daylight_filter(const PowerSeries& measured, const PowerSeries& predicted,
                              bool require_predicted_positive) {
  if (measured.dt <= 0 || predicted.dt <= 0) throw ParameterError("daylight_filter: series steps must be positive");
  if (measured.dt != predicted.dt)
    throw ParameterError("daylight_filter: series steps differ (" + std::to_string(measured.dt) + " vs " +
                         std::to_string(predicted.dt) + ")");
  if ((predicted.t0 - measured.t0) % measured.dt != 0)
    throw ParameterError("daylight_filter: series time grids are not aligned");

  const UtcTime start = std::max(measured.t0, predicted.t0);
  const UtcTime end = std::min(measured.time_at(measured.size() - 1), predicted.time_at(predicted.size() - 1));
  if (end < start) throw ParameterError("daylight_filter: series do not overlap");

  PairedSamples out;
  out.filter_rule = require_predicted_positive ? "measured > 0 and predicted > 0" : "measured > 0";
  for (UtcTime t = start; t <= end; t += measured.dt) {
    const double m = measured.values_mw[static_cast<size_t>((t - measured.t0) / measured.dt)];
    const double p = predicted.values_mw[static_cast<size_t>((t - predicted.t0) / predicted.dt)];
    if (m <= 0.0) continue;
    if (require_predicted_positive && p <= 0.0) continue;
    out.times.push_back(t);
    out.measured.push_back(m);
    out.predicted.push_back(p);
  }
  return out;
}

ComparableSamples filter_for_comparison(const PowerSeries& measured, const PowerSeries& model,
                                        const PowerSeries& baseline, bool require_predicted_positive) {
  if (measured.dt != model.dt || measured.dt != baseline.dt)
    throw ParameterError("filter_for_comparison: series steps differ");
  if ((model.t0 - measured.t0) % measured.dt != 0 || (baseline.t0 - measured.t0) % measured.dt != 0)
    throw ParameterError("filter_for_comparison: series time grids are not aligned");
  const UtcTime start = std::max({measured.t0, model.t0, baseline.t0});
  const UtcTime end = std::min({measured.time_at(measured.size() - 1), model.time_at(model.size() - 1),
                                baseline.time_at(baseline.size() - 1)});
  if (end < start) throw ParameterError("filter_for_comparison: series do not overlap");

  ComparableSamples out;
  out.model.filter_rule = out.baseline.filter_rule =
      require_predicted_positive ? "measured > 0 and both predictions > 0" : "measured > 0";
  for (UtcTime t = start; t <= end; t += measured.dt) {
    const double m = measured.values_mw[static_cast<size_t>((t - measured.t0) / measured.dt)];
    const double pm = model.values_mw[static_cast<size_t>((t - model.t0) / model.dt)];
    const double pb = baseline.values_mw[static_cast<size_t>((t - baseline.t0) / baseline.dt)];
    if (m <= 0.0) continue;
    if (require_predicted_positive && (pm <= 0.0 || pb <= 0.0)) continue;
    out.model.times.push_back(t);
    out.model.measured.push_back(m);
    out.model.predicted.push_back(pm);
    out.baseline.times.push_back(t);
    out.baseline.measured.push_back(m);
    out.baseline.predicted.push_back(pb);
  }
  return out;
}

MetricsReport compute_metrics(const PairedSamples& pairs, double capacity_mw) {
  if (pairs.measured.empty())
    throw ParameterError("compute_metrics: no samples left after filtering, metrics are undefined");
  if (capacity_mw <= 0.0) throw ParameterError("compute_metrics: capacity must be positive");
  double se = 0.0, ae = 0.0;
  for (size_t i = 0; i < pairs.measured.size(); ++i) {
    const double e = pairs.predicted[i] - pairs.measured[i];
    se += e * e;
    ae += std::abs(e);
  }
  const double n = static_cast<double>(pairs.measured.size());
  MetricsReport r;
  r.rmse_mw = std::sqrt(se / n);
  r.mae_mw = ae / n;
  r.nrmse_pct = 100.0 * r.rmse_mw / capacity_mw;
  r.nmae_pct = 100.0 * r.mae_mw / capacity_mw;
  r.n_points = static_cast<int>(pairs.measured.size());
  r.capacity_mw = capacity_mw;
  r.filter_rule = pairs.filter_rule;
  return r;
}

PowerSeries persistence_baseline(const PowerSeries& power, int64_t horizon_seconds) {
  if (power.dt <= 0) throw ParameterError("persistence_baseline: series step must be positive");
  if (horizon_seconds <= 0 || horizon_seconds % power.dt != 0)
    throw ParameterError("persistence_baseline: horizon must be a positive multiple of the series step");
  const int lag = static_cast<int>(horizon_seconds / power.dt);
  if (power.size() <= lag)
    throw ParameterError("persistence_baseline: series shorter than the " + std::to_string(lag) + "-step horizon");
  PowerSeries out;
  out.t0 = power.t0 + horizon_seconds;
  out.dt = power.dt;
  out.values_mw.assign(power.values_mw.begin(), power.values_mw.end() - lag);
  return out;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

Comparison compare_report(const MetricsReport& model, const MetricsReport& baseline) {
  if (model.n_points != baseline.n_points)
    throw ParameterError("compare_report: reports cover different sample sets (" + std::to_string(model.n_points) +
                         " vs " + std::to_string(baseline.n_points) + " points)");
  if (model.capacity_mw != baseline.capacity_mw)
    throw ParameterError("compare_report: reports use different capacities");

  Comparison c;
  c.model = model;
  c.baseline = baseline;

  std::ostringstream txt;
  txt << "method       nRMSE (%)  nMAE (%)   RMSE (MW)  MAE (MW)\n";
  txt << "persistence  " << fmt(baseline.nrmse_pct) << "  " << fmt(baseline.nmae_pct) << "  " << fmt(baseline.rmse_mw)
      << "  " << fmt(baseline.mae_mw) << "\n";
  txt << "pvnet        " << fmt(model.nrmse_pct) << "  " << fmt(model.nmae_pct) << "  " << fmt(model.rmse_mw) << "  "
      << fmt(model.mae_mw) << "\n";
  const double r_nrmse = model.nrmse_pct > 0.0 ? baseline.nrmse_pct / model.nrmse_pct : 0.0;
  const double r_nmae = model.nmae_pct > 0.0 ? baseline.nmae_pct / model.nmae_pct : 0.0;
  txt << "improvement  " << fmt(r_nrmse) << "x nRMSE, " << fmt(r_nmae) << "x nMAE over " << model.n_points
      << " points (filter: " << model.filter_rule << ", capacity " << fmt(model.capacity_mw) << " MW)\n";
  c.text_table = txt.str();

  std::ostringstream mach;
  mach << "model_nrmse," << fmt(model.nrmse_pct) << ",percent\n";
  mach << "model_nmae," << fmt(model.nmae_pct) << ",percent\n";
  mach << "model_rmse," << fmt(model.rmse_mw) << ",MW\n";
  mach << "model_mae," << fmt(model.mae_mw) << ",MW\n";
  mach << "baseline_nrmse," << fmt(baseline.nrmse_pct) << ",percent\n";
  mach << "baseline_nmae," << fmt(baseline.nmae_pct) << ",percent\n";
  mach << "baseline_rmse," << fmt(baseline.rmse_mw) << ",MW\n";
  mach << "baseline_mae," << fmt(baseline.mae_mw) << ",MW\n";
  mach << "improvement_nrmse," << fmt(r_nrmse) << ",ratio\n";
  mach << "improvement_nmae," << fmt(r_nmae) << ",ratio\n";
  mach << "n_points," << model.n_points << ",count\n";
  mach << "capacity," << fmt(model.capacity_mw) << ",MW\n";
  c.machine_lines = mach.str();
  return c;
}

}  // namespace pvnet::eval
