// pvnet: synthetic-data generation, training, evaluation, occlusion analysis
// and gradient verification behind one reproducible command-line tool.

#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "pvnet/gradcheck_suite.hpp"
#include "pvnet/metrics.hpp"
#include "pvnet/model.hpp"
#include "pvnet/occlusion.hpp"
#include "pvnet/synth.hpp"

namespace fs = std::filesystem;
using namespace pvnet;

namespace {

int worker_count() {
  const char* env = std::getenv("PVNET_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

io::RunConfig load_config(const std::string& path, bool seed_given, uint64_t seed) {
  io::RunConfig cfg = path.empty() ? io::RunConfig{} : io::parse_config(path);
  if (seed_given) cfg.seed = seed;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

struct LoadedData {
  RasterSeries raster;
  PowerSeries power;
  Fleet fleet;
};

LoadedData load_data_dir(const std::string& dir) {
  LoadedData d;
  d.raster = io::read_raster(synth::raster_path(dir));
  d.power = io::read_series(synth::power_path(dir));
  d.fleet = io::read_fleet(synth::fleet_path(dir), d.raster.grid);
  return d;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, bool seed_given, uint64_t seed) {
  const io::RunConfig cfg = load_config(config_path, seed_given, seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  const synth::SynthDataset ds = synth::generate_dataset(cfg, out_dir);
  std::printf("raster [%d, %d, %d, %d] -> %s\n", ds.raster.n_frames(), ds.raster.n_channels(), ds.raster.grid.n_rows,
              ds.raster.grid.n_cols, synth::raster_path(out_dir).c_str());
  std::printf("power series %d steps -> %s\n", ds.power.size(), synth::power_path(out_dir).c_str());
  std::printf("fleet %zu plants, %.3f MW total -> %s\n", ds.fleet.plants.size(), ds.fleet.total_capacity_mw,
              synth::fleet_path(out_dir).c_str());
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path, const std::string& out_path,
              const std::string& log_path, bool seed_given, uint64_t seed) {
  const io::RunConfig cfg = load_config(config_path, seed_given, seed);
  const LoadedData data = load_data_dir(data_dir);

  features::Dataset ds = features::Dataset::build(data.raster, data.power);
  const features::Split split = split_train_val(ds, cfg.train_fraction);
  const features::NormStats stats = ds.normalize(split.n_train, data.fleet.total_capacity_mw);

  model::PVNetConfig mc = model::PVNetConfig::from_run_config(cfg);
  mc.grid_h = data.raster.grid.n_rows;
  mc.grid_w = data.raster.grid.n_cols;
  mc.validate();

  const model::TrainResult result = model::train(ds, split, mc);
  io::write_checkpoint(out_path, model::to_checkpoint(result.params, stats, io::echo_config(cfg)));
  if (!log_path.empty()) write_text(log_path, model::format_loss_log(result));

  std::printf("trained %d epochs on %d windows (val %d)\n", mc.epochs, split.n_train, split.n_val);
  std::printf("best epoch %d, val mse %.6g (normalized), checkpoint -> %s\n", result.best_epoch,
              result.val_mse[static_cast<size_t>(result.best_epoch)], out_path.c_str());
  return 0;
}

// shared by eval and occlude: rebuild the dataset under the checkpoint's
// normalization and config
struct EvalSetup {
  model::LoadedModel lm;
  features::Dataset ds;
  features::Split split;
  LoadedData data;
};

EvalSetup prepare_eval(const std::string& data_dir, const std::string& ckpt_path) {
  EvalSetup s;
  s.lm = model::from_checkpoint(io::read_checkpoint(ckpt_path));
  s.data = load_data_dir(data_dir);
  if (s.data.raster.grid.n_rows != s.lm.run_config.grid_rows || s.data.raster.grid.n_cols != s.lm.run_config.grid_cols)
    throw ConfigError("checkpoint grid " + std::to_string(s.lm.run_config.grid_rows) + "x" +
                      std::to_string(s.lm.run_config.grid_cols) + " does not match data grid " +
                      std::to_string(s.data.raster.grid.n_rows) + "x" + std::to_string(s.data.raster.grid.n_cols));
  s.ds = features::Dataset::build(s.data.raster, s.data.power);
  s.split = split_train_val(s.ds, s.lm.run_config.train_fraction);
  s.ds.normalize_with(s.lm.stats);
  return s;
}

int cmd_eval(const std::string& data_dir, const std::string& ckpt_path, const std::string& report_prefix) {
  EvalSetup s = prepare_eval(data_dir, ckpt_path);

  const PowerSeries predictions = model::predict(s.lm.params, s.ds, s.split.n_train, s.split.n_val);
  const PowerSeries baseline = eval::persistence_baseline(s.data.power, 24 * 3600);
  const bool both = s.lm.run_config.eval_filter == "both";

  // restrict the measurements to the validation target range
  PowerSeries measured;
  measured.t0 = predictions.t0;
  measured.dt = predictions.dt;
  for (int i = 0; i < s.split.n_val; ++i)
    measured.values_mw.push_back(
        s.data.power.values_mw[static_cast<size_t>((predictions.time_at(i) - s.data.power.t0) / s.data.power.dt)]);

  const eval::ComparableSamples pairs = eval::filter_for_comparison(measured, predictions, baseline, both);
  const eval::MetricsReport model_report = eval::compute_metrics(pairs.model, s.data.fleet.total_capacity_mw);
  const eval::MetricsReport base_report = eval::compute_metrics(pairs.baseline, s.data.fleet.total_capacity_mw);
  const eval::Comparison cmp = eval::compare_report(model_report, base_report);

  // config echo rides along as comment lines for provenance
  std::string header;
  for (const std::string& line : io::echo_config(s.lm.run_config)) header += "# " + line + "\n";
  write_text(report_prefix + ".txt", header + cmp.text_table);
  write_text(report_prefix + ".csv", header + cmp.machine_lines);
  std::printf("%s", cmp.text_table.c_str());
  std::printf("report -> %s.txt / %s.csv\n", report_prefix.c_str(), report_prefix.c_str());
  return 0;
}

int cmd_occlude(const std::string& data_dir, const std::string& ckpt_path, const std::string& out_dir, int samples) {
  EvalSetup s = prepare_eval(data_dir, ckpt_path);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  if (samples > s.split.n_val) {
    std::fprintf(stderr, "warning: requested %d samples but only %d validation windows exist; clamping\n", samples,
                 s.split.n_val);
    samples = s.split.n_val;
  }
  const std::vector<int> windows =
      occlusion::sample_windows(s.split.n_train, s.split.n_val, samples, s.lm.run_config.seed);

  const int n_channels = static_cast<int>(kModelChannels.size());
  std::vector<occlusion::SensitivityMap> maps(static_cast<size_t>(n_channels));
  const int threads = std::min(worker_count(), n_channels);
  if (threads <= 1) {
    for (int c = 0; c < n_channels; ++c)
      maps[static_cast<size_t>(c)] = occlusion::sensitivity_map(s.lm.params, s.ds, windows, c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (int c = next.fetch_add(1); c < n_channels; c = next.fetch_add(1))
          maps[static_cast<size_t>(c)] = occlusion::sensitivity_map(s.lm.params, s.ds, windows, c);
      });
    for (std::thread& th : pool) th.join();
  }

  for (int c = 0; c < n_channels; ++c) {
    const occlusion::SensitivityMap& map = maps[static_cast<size_t>(c)];
    RasterSeries out;
    out.grid = map.grid;
    out.channels = {"SENS_" + map.channel};
    out.t0 = s.ds.target_time(s.split.n_train);
    out.dt = s.data.raster.dt;
    out.frames = Tensor({1, 1, map.grid.n_rows, map.grid.n_cols});
    std::copy(map.values.ptr(), map.values.ptr() + map.values.numel(), out.frames.ptr());
    io::write_raster(out_dir + "/sensitivity_" + map.channel + ".pvrs", out);
    occlusion::write_pgm(out_dir + "/sensitivity_" + map.channel + ".pgm", map.values);
  }

  const occlusion::DensityMap dm = occlusion::density_map(s.data.fleet, s.data.raster.grid);
  RasterSeries dens;
  dens.grid = dm.grid;
  dens.channels = {"DENSITY"};
  dens.t0 = s.data.raster.t0;
  dens.dt = s.data.raster.dt;
  dens.frames = Tensor({1, 1, dm.grid.n_rows, dm.grid.n_cols});
  std::copy(dm.values.ptr(), dm.values.ptr() + dm.values.numel(), dens.frames.ptr());
  io::write_raster(out_dir + "/density.pvrs", dens);

  std::string ranking;
  for (const std::string& name : occlusion::channel_ranking(maps)) ranking += name + "\n";
  write_text(out_dir + "/ranking.txt", ranking);

  std::printf("wrote %d sensitivity maps, density map and ranking to %s (%d windows sampled)\n", n_channels,
              out_dir.c_str(), static_cast<int>(windows.size()));
  return 0;
}

int cmd_gradcheck(uint64_t seed, const std::string& corrupt) {
  nn::Fault fault = nn::Fault::kNone;
  if (corrupt == "conv")
    fault = nn::Fault::kConvBackward;
  else if (!corrupt.empty())
    throw ParameterError("unknown --corrupt target '" + corrupt + "' (expected: conv)");

  const nn::SuiteResult result = nn::run_gradcheck_suite(seed, 10, fault);
  std::printf("%-12s %-14s %s\n", "layer", "max_rel_error", "status");
  std::string failing;
  for (const nn::GradCheckResult& c : result.checks) {
    std::printf("%-12s %-14.3g %s\n", c.name.c_str(), c.max_error, c.pass ? "pass" : "FAIL");
    if (!c.pass) failing += (failing.empty() ? "" : ", ") + c.name;
  }
  if (!result.all_pass) {
    std::fprintf(stderr, "gradient check failed for: %s\n", failing.c_str());
    return 2;
  }
  std::printf("all gradient checks passed (threshold 1e-4, 10 seeds)\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PV power forecasting from gridded weather fields"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, out_path, log_path, ckpt_path, report_prefix, corrupt;
  uint64_t seed = 42;
  int samples = 64;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--config", config_path, "config file (key = value lines)");
  gen->add_option("--out-dir", out_dir, "output directory")->required();
  CLI::Option* gen_seed = gen->add_option("--seed", seed, "override the config seed");

  CLI::App* train = app.add_subcommand("train", "train the forecasting model");
  train->add_option("--data-dir", data_dir, "dataset directory")->required();
  train->add_option("--config", config_path, "config file");
  train->add_option("--out", out_path, "checkpoint output path")->required();
  train->add_option("--log", log_path, "loss log output path");
  CLI::Option* train_seed = train->add_option("--seed", seed, "override the config seed");

  CLI::App* evaluate = app.add_subcommand("eval", "evaluate a checkpoint against persistence");
  evaluate->add_option("--data-dir", data_dir, "dataset directory")->required();
  evaluate->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  evaluate->add_option("--report", report_prefix, "report path prefix")->required();

  CLI::App* occ = app.add_subcommand("occlude", "occlusion sensitivity analysis");
  occ->add_option("--data-dir", data_dir, "dataset directory")->required();
  occ->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  occ->add_option("--out-dir", out_dir, "output directory")->required();
  occ->add_option("--samples", samples, "validation windows to sample");

  CLI::App* grad = app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
  grad->add_option("--seed", seed, "base seed");
  grad->add_option("--corrupt", corrupt, "fault injection target (test fixture)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the message; 0 for --help
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, !gen_seed->empty(), seed);
    if (train->parsed()) return cmd_train(data_dir, config_path, out_path, log_path, !train_seed->empty(), seed);
    if (evaluate->parsed()) return cmd_eval(data_dir, ckpt_path, report_prefix);
    if (occ->parsed()) return cmd_occlude(data_dir, ckpt_path, out_dir, samples);
    if (grad->parsed()) return cmd_gradcheck(seed, corrupt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 1;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const PhysDomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 2;
}
