#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pvnet/io.hpp"

using namespace pvnet;
using namespace pvnet::io;

namespace {

std::string tmp_path(const std::string& name) { return std::string("/tmp/pvnet_io_test_") + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

RasterSeries small_raster() {
  RasterSeries s;
  s.grid.n_rows = 4;
  s.grid.n_cols = 4;
  s.channels = {"DSWRF", "EACC", "TMP"};
  s.t0 = parse_utc("2019-01-01T00:00:00Z");
  s.dt = 10800;
  s.frames = Tensor({2, 3, 4, 4});
  for (int t = 0; t < 2; ++t)
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        const double v = static_cast<double>(t * 16 + r * 4 + c);
        s.frames.at(t, 0, r, c) = static_cast<double>(static_cast<float>(31.25 * v));
        s.frames.at(t, 1, r, c) = static_cast<double>(static_cast<float>(v / 32.0));
        s.frames.at(t, 2, r, c) = static_cast<double>(static_cast<float>(273.15 + 0.5 * v));
      }
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("raster round trip is bit identical") {
  const std::string path = tmp_path("raster.pvrs");
  const RasterSeries s = small_raster();
  write_raster(path, s);
  const RasterSeries r = read_raster(path);
  CHECK(r.grid.n_rows == 4);
  CHECK(r.channels == s.channels);
  CHECK(r.t0 == s.t0);
  CHECK(r.dt == s.dt);
  REQUIRE(r.frames.numel() == s.frames.numel());
  for (int64_t i = 0; i < s.frames.numel(); ++i) CHECK(r.frames[i] == s.frames[i]);

  // writing the reread series reproduces the same bytes
  const std::string path2 = tmp_path("raster2.pvrs");
  write_raster(path2, r);
  CHECK(slurp(path) == slurp(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("raster corrupt magic and truncation are rejected with named fields") {
  const std::string path = tmp_path("raster_bad.pvrs");
  write_raster(path, small_raster());
  std::string bytes = slurp(path);

  std::string corrupted = bytes;
  corrupted[0] = 'X';
  spit(path, corrupted);
  CHECK_THROWS_WITH_AS(read_raster(path), doctest::Contains("magic"), FormatError);

  spit(path, bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_WITH_AS(read_raster(path), doctest::Contains("truncated"), FormatError);

  spit(path, bytes + "x");
  CHECK_THROWS_AS(read_raster(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("series round trip keeps nine significant digits") {
  const std::string path = tmp_path("series.csv");
  PowerSeries s;
  s.t0 = parse_utc("2019-01-01T00:00:00Z");
  s.dt = 10800;
  s.values_mw = {0.0, 123.456789, 98765.4321, 0.000123456789};
  write_series(path, s);
  const PowerSeries r = read_series(path);
  CHECK(r.t0 == s.t0);
  CHECK(r.dt == s.dt);
  REQUIRE(r.size() == s.size());
  for (int i = 0; i < s.size(); ++i) {
    const double a = s.values_mw[static_cast<size_t>(i)], b = r.values_mw[static_cast<size_t>(i)];
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
  }
  std::remove(path.c_str());
}

TEST_CASE("series format errors carry line numbers") {
  const std::string path = tmp_path("series_bad.csv");
  spit(path, "");
  CHECK_THROWS_AS(read_series(path), FormatError);

  spit(path, "timestamp,power_mw\n");
  CHECK_THROWS_AS(read_series(path), FormatError);

  spit(path, "timestamp,power_mw\n2019-01-01T00:00:00Z,1.0\n2019-01-01T03:00:00Z,abc\n");
  CHECK_THROWS_WITH_AS(read_series(path), doctest::Contains("line 3"), FormatError);

  spit(path, "timestamp,power_mw\n2019-01-01T03:00:00Z,1.0\n2019-01-01T00:00:00Z,2.0\n");
  CHECK_THROWS_WITH_AS(read_series(path), doctest::Contains("non-monotone"), FormatError);

  spit(path, "timestamp,power_mw\n2019-01-01T00:00:00Z,1\n2019-01-01T03:00:00Z,2\n2019-01-01T09:00:00Z,3\n");
  CHECK_THROWS_WITH_AS(read_series(path), doctest::Contains("irregular"), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("fleet round trip preserves positions and capacity exactly") {
  GridSpec grid;
  grid.n_rows = 4;
  grid.n_cols = 4;
  Fleet f = Fleet::create({{54.3, 5.7, 10.5}, {53.21, 6.93, 1.25}}, grid);
  const std::string path = tmp_path("fleet.pvfl");
  write_fleet(path, f);
  const Fleet r = read_fleet(path, grid);
  REQUIRE(r.plants.size() == 2);
  CHECK(r.plants[0].lat == f.plants[0].lat);
  CHECK(r.plants[1].capacity_mw == f.plants[1].capacity_mw);
  CHECK(r.total_capacity_mw == f.total_capacity_mw);

  std::string bytes = slurp(path);
  bytes[2] = '?';
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(read_fleet(path, grid), doctest::Contains("magic"), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("fleet construction validates positions and capacities") {
  GridSpec grid;
  grid.n_rows = 4;
  grid.n_cols = 4;
  CHECK_THROWS_AS(Fleet::create({{60.0, 5.5, 10.0}}, grid), ParameterError);   // north of the grid
  CHECK_THROWS_AS(Fleet::create({{54.0, 5.5, -2.0}}, grid), ParameterError);   // non-positive capacity
  const Fleet ok = Fleet::create({{54.0, 5.5, 2.0}, {53.0, 6.0, 3.0}}, grid);
  CHECK(ok.total_capacity_mw == 5.0);
}

TEST_CASE("checkpoint round trip is exact at 32-bit precision") {
  Checkpoint c;
  c.config_echo = {"lr = 0.0015", "seed = 7"};
  Tensor a({2, 3});
  for (int64_t i = 0; i < a.numel(); ++i) a[i] = 0.1 * static_cast<double>(i) + 0.0123456789;
  Tensor b({4});
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = -1.5 * static_cast<double>(i);
  c.tensors.push_back({"layer.weight", a});
  c.tensors.push_back({"layer.bias", b});

  const std::string path = tmp_path("ckpt.pvnw");
  write_checkpoint(path, c);
  const Checkpoint r = read_checkpoint(path);
  CHECK(r.config_echo == c.config_echo);
  REQUIRE(r.tensors.size() == 2);
  for (size_t t = 0; t < 2; ++t) {
    const Tensor& orig = c.tensors[t].value;
    const Tensor& back = r.tensors[t].value;
    for (int64_t i = 0; i < orig.numel(); ++i)
      CHECK(back[i] == static_cast<double>(static_cast<float>(orig[i])));
  }

  // a second write of the loaded state is byte-identical (f32 is idempotent)
  const std::string path2 = tmp_path("ckpt2.pvnw");
  write_checkpoint(path2, r);
  CHECK(slurp(path) != "");
  CHECK(slurp(path2) == slurp(path));

  std::string bytes = slurp(path);
  bytes[1] = 'z';
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(read_checkpoint(path), doctest::Contains("magic"), FormatError);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("empty config text yields the full default config") {
  const RunConfig cfg = parse_config_text("");
  CHECK(cfg.seed == 42);
  CHECK(cfg.grid_rows == 16);
  CHECK(cfg.days == 480);
  CHECK(cfg.lr == 0.0015);
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.epochs == 60);
  CHECK(cfg.conv_channels == std::vector<int>{64, 64, 128, 128, 256, 256});
  CHECK(cfg.dropout_conv == 0.20);
  CHECK(cfg.dropout_fc == 0.30);
}

TEST_CASE("config parsing, comments, and bounds") {
  const RunConfig cfg = parse_config_text("# comment\nlr = 0.0015\nseed = 9  # trailing\n\ngrid_rows = 8\ngrid_cols=8\n");
  CHECK(cfg.lr == 0.0015);
  CHECK(cfg.seed == 9);
  CHECK(cfg.grid_rows == 8);

  CHECK_THROWS_WITH_AS(parse_config_text("dropout_conv = 1.5\n"), doctest::Contains("dropout_conv"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("no_such_key = 3\n"), doctest::Contains("no_such_key"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("lr = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("grid_rows = 7\n"), ConfigError);   // odd
  CHECK_THROWS_AS(parse_config_text("lr 0.0015\n"), ConfigError);       // missing '='
}

TEST_CASE("config echo round trips through the parser") {
  RunConfig cfg;
  cfg.seed = 123;
  cfg.grid_rows = 8;
  cfg.grid_cols = 8;
  cfg.lstm_units = 16;
  cfg.conv_channels = {4, 4, 8, 8};
  std::string text;
  for (const std::string& line : echo_config(cfg)) text += line + "\n";
  const RunConfig back = parse_config_text(text);
  CHECK(back.seed == cfg.seed);
  CHECK(back.grid_rows == cfg.grid_rows);
  CHECK(back.conv_channels == cfg.conv_channels);
  CHECK(back.lstm_units == cfg.lstm_units);
  CHECK(back.lr == cfg.lr);
}

TEST_SUITE_END();
