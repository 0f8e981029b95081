#include "pvnet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

namespace pvnet::io {

namespace {

constexpr char kRasterMagic[] = "PVRS1\n";
constexpr char kFleetMagic[] = "PVFL1\n";
constexpr char kCheckpointMagic[] = "PVNW1\n";

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp);
    body(out);
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot rename " + tmp + " to " + path);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

void expect_magic(std::istream& in, const char* magic, const std::string& path, const char* kind) {
  char buf[6] = {};
  in.read(buf, 6);
  if (in.gcount() != 6 || std::memcmp(buf, magic, 6) != 0)
    throw FormatError(std::string(kind) + " magic: expected '" + std::string(magic, 5) + "' at start of " + path);
}

std::string read_header_line(std::istream& in, const char* field, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(std::string("header field '") + field + "' missing in " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

int64_t parse_int_field(const std::string& s, const char* field, const std::string& path) {
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("header field '") + field + "': cannot parse integer from '" + s + "' in " + path);
  }
}

double parse_double_field(const std::string& s, const char* field, const std::string& path) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("header field '") + field + "': cannot parse number from '" + s + "' in " + path);
  }
}

void write_f32_payload(std::ostream& out, const double* data, int64_t count) {
  std::vector<unsigned char> buf;
  constexpr int64_t kChunk = 1 << 16;
  buf.resize(static_cast<size_t>(std::min(count, kChunk)) * 4);
  int64_t done = 0;
  while (done < count) {
    const int64_t n = std::min(kChunk, count - done);
    for (int64_t i = 0; i < n; ++i) {
      const float f = static_cast<float>(data[done + i]);
      uint32_t bits = 0;
      std::memcpy(&bits, &f, 4);
      buf[static_cast<size_t>(i) * 4 + 0] = static_cast<unsigned char>(bits & 0xff);
      buf[static_cast<size_t>(i) * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
      buf[static_cast<size_t>(i) * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
      buf[static_cast<size_t>(i) * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), n * 4);
    done += n;
  }
}

void read_f32_chunk(std::istream& in, double* data, int64_t count, int64_t declared_total, int64_t already_read,
                    const std::string& path) {
  std::vector<unsigned char> buf;
  constexpr int64_t kChunk = 1 << 16;
  buf.resize(static_cast<size_t>(std::min(count, kChunk)) * 4);
  int64_t done = 0;
  while (done < count) {
    const int64_t n = std::min(kChunk, count - done);
    in.read(reinterpret_cast<char*>(buf.data()), n * 4);
    if (in.gcount() != n * 4)
      throw FormatError("payload truncated in " + path + ": expected " + std::to_string(declared_total * 4) +
                        " bytes, got " + std::to_string((already_read + done) * 4 + in.gcount()));
    for (int64_t i = 0; i < n; ++i) {
      const uint32_t bits = static_cast<uint32_t>(buf[static_cast<size_t>(i) * 4 + 0]) |
                            (static_cast<uint32_t>(buf[static_cast<size_t>(i) * 4 + 1]) << 8) |
                            (static_cast<uint32_t>(buf[static_cast<size_t>(i) * 4 + 2]) << 16) |
                            (static_cast<uint32_t>(buf[static_cast<size_t>(i) * 4 + 3]) << 24);
      float f = 0.0f;
      std::memcpy(&f, &bits, 4);
      data[done + i] = static_cast<double>(f);
    }
    done += n;
  }
}

void require_eof(std::istream& in, const std::string& path) {
  char extra = 0;
  in.read(&extra, 1);
  if (in.gcount() != 0) throw FormatError("payload longer than header declares in " + path);
}

void read_f32_payload(std::istream& in, double* data, int64_t count, const std::string& path) {
  read_f32_chunk(in, data, count, count, 0, path);
  require_eof(in, path);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

// --- raster -----------------------------------------------------------------

void write_raster(const std::string& path, const RasterSeries& series) {
  series.validate();
  atomic_write(path, [&](std::ostream& out) {
    out << kRasterMagic;
    out << series.n_frames() << '\n'
        << series.n_channels() << '\n'
        << series.grid.n_rows << '\n'
        << series.grid.n_cols << '\n'
        << format_utc(series.t0) << '\n'
        << series.dt << '\n'
        << fmt_double(series.grid.lat0) << '\n'
        << fmt_double(series.grid.lon0) << '\n'
        << fmt_double(series.grid.dlat) << '\n'
        << fmt_double(series.grid.dlon) << '\n';
    for (size_t i = 0; i < series.channels.size(); ++i) out << (i ? "," : "") << series.channels[i];
    out << '\n';
    write_f32_payload(out, series.frames.ptr(), series.frames.numel());
  });
}

RasterSeries read_raster(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_magic(in, kRasterMagic, path, "raster");
  RasterSeries s;
  const int64_t n_frames = parse_int_field(read_header_line(in, "n_frames", path), "n_frames", path);
  const int64_t n_channels = parse_int_field(read_header_line(in, "n_channels", path), "n_channels", path);
  const int64_t n_rows = parse_int_field(read_header_line(in, "n_rows", path), "n_rows", path);
  const int64_t n_cols = parse_int_field(read_header_line(in, "n_cols", path), "n_cols", path);
  if (n_frames <= 0 || n_channels <= 0 || n_rows <= 0 || n_cols <= 0)
    throw FormatError("raster header: non-positive dimension in " + path);
  s.t0 = parse_utc(read_header_line(in, "t0", path));
  s.dt = parse_int_field(read_header_line(in, "dt_seconds", path), "dt_seconds", path);
  s.grid.lat0 = parse_double_field(read_header_line(in, "lat0", path), "lat0", path);
  s.grid.lon0 = parse_double_field(read_header_line(in, "lon0", path), "lon0", path);
  s.grid.dlat = parse_double_field(read_header_line(in, "dlat", path), "dlat", path);
  s.grid.dlon = parse_double_field(read_header_line(in, "dlon", path), "dlon", path);
  s.grid.n_rows = static_cast<int>(n_rows);
  s.grid.n_cols = static_cast<int>(n_cols);
  const std::string names = read_header_line(in, "channel_names", path);
  std::stringstream ss(names);
  std::string tok;
  while (std::getline(ss, tok, ',')) s.channels.push_back(tok);
  if (static_cast<int64_t>(s.channels.size()) != n_channels)
    throw FormatError("header field 'channel_names': " + std::to_string(s.channels.size()) + " names for " +
                      std::to_string(n_channels) + " channels in " + path);
  s.frames = Tensor({static_cast<int>(n_frames), static_cast<int>(n_channels), static_cast<int>(n_rows),
                     static_cast<int>(n_cols)});
  read_f32_payload(in, s.frames.ptr(), s.frames.numel(), path);
  s.validate();
  return s;
}

// --- power series -----------------------------------------------------------

void write_series(const std::string& path, const PowerSeries& series) {
  atomic_write(path, [&](std::ostream& out) {
    out << "timestamp,power_mw\n";
    for (int i = 0; i < series.size(); ++i)
      out << format_utc(series.time_at(i)) << ',' << fmt_sig9(series.values_mw[static_cast<size_t>(i)]) << '\n';
  });
}

PowerSeries read_series(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty power series file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp,power_mw")
    throw FormatError("power series header: expected 'timestamp,power_mw', got '" + line + "' in " + path);
  PowerSeries s;
  std::vector<UtcTime> times;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError("power series line " + std::to_string(line_no) + ": missing comma in " + path);
    UtcTime t;
    try {
      t = parse_utc(line.substr(0, comma));
    } catch (const FormatError& e) {
      throw FormatError("power series line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string val = line.substr(comma + 1);
    try {
      size_t pos = 0;
      s.values_mw.push_back(std::stod(val, &pos));
      if (pos != val.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError("power series line " + std::to_string(line_no) + ": cannot parse power value '" + val +
                        "' in " + path);
    }
    times.push_back(t);
  }
  if (times.empty()) throw FormatError("power series has no samples: " + path);
  s.t0 = times[0];
  s.dt = times.size() > 1 ? times[1] - times[0] : 0;
  for (size_t i = 1; i < times.size(); ++i) {
    if (times[i] <= times[i - 1])
      throw FormatError("power series line " + std::to_string(i + 2) + ": non-monotone timestamp in " + path);
    if (times[i] - times[i - 1] != s.dt)
      throw FormatError("power series line " + std::to_string(i + 2) + ": irregular time step in " + path);
  }
  return s;
}

// --- fleet -------------------------------------------------------------------

void write_fleet(const std::string& path, const Fleet& fleet) {
  atomic_write(path, [&](std::ostream& out) {
    out << kFleetMagic;
    out << "lat,lon,capacity_mw\n";
    for (const Plant& p : fleet.plants)
      out << fmt_double(p.lat) << ',' << fmt_double(p.lon) << ',' << fmt_double(p.capacity_mw) << '\n';
  });
}

Fleet read_fleet(const std::string& path, const GridSpec& grid) {
  std::ifstream in = open_input(path);
  expect_magic(in, kFleetMagic, path, "fleet");
  std::string line;
  if (!std::getline(in, line) || (line != "lat,lon,capacity_mw" && line != "lat,lon,capacity_mw\r"))
    throw FormatError("fleet header: expected 'lat,lon,capacity_mw' in " + path);
  std::vector<Plant> plants;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Plant p{};
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw FormatError("fleet line " + std::to_string(line_no) + ": expected 3 comma-separated fields in " + path);
    p.lat = parse_double_field(a, "lat", path);
    p.lon = parse_double_field(b, "lon", path);
    p.capacity_mw = parse_double_field(c, "capacity_mw", path);
    plants.push_back(p);
  }
  return Fleet::create(std::move(plants), grid);
}

// --- checkpoint ---------------------------------------------------------------

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t.value;
  throw FormatError("checkpoint: tensor '" + name + "' not present");
}

Tensor quantize_f32(const Tensor& t) {
  Tensor out(t.shape());
  for (int64_t i = 0; i < t.numel(); ++i) out[i] = static_cast<double>(static_cast<float>(t[i]));
  return out;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  atomic_write(path, [&](std::ostream& out) {
    out << kCheckpointMagic;
    out << "config_lines " << ckpt.config_echo.size() << '\n';
    for (const std::string& line : ckpt.config_echo) out << line << '\n';
    out << "tensors " << ckpt.tensors.size() << '\n';
    int64_t total = 0;
    for (const NamedTensor& t : ckpt.tensors) {
      out << t.name << ' ' << t.value.ndim();
      for (int d = 0; d < t.value.ndim(); ++d) out << ' ' << t.value.dim(d);
      out << '\n';
      total += t.value.numel();
    }
    out << "payload " << total << '\n';
    for (const NamedTensor& t : ckpt.tensors) write_f32_payload(out, t.value.ptr(), t.value.numel());
  });
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in = open_input(path);
  expect_magic(in, kCheckpointMagic, path, "checkpoint");
  Checkpoint ckpt;

  std::string line = read_header_line(in, "config_lines", path);
  int64_t n_cfg = 0;
  if (std::sscanf(line.c_str(), "config_lines %lld", reinterpret_cast<long long*>(&n_cfg)) != 1 || n_cfg < 0)
    throw FormatError("header field 'config_lines': cannot parse '" + line + "' in " + path);
  for (int64_t i = 0; i < n_cfg; ++i) ckpt.config_echo.push_back(read_header_line(in, "config echo", path));

  line = read_header_line(in, "tensors", path);
  int64_t n_tensors = 0;
  if (std::sscanf(line.c_str(), "tensors %lld", reinterpret_cast<long long*>(&n_tensors)) != 1 || n_tensors < 0)
    throw FormatError("header field 'tensors': cannot parse '" + line + "' in " + path);
  int64_t total = 0;
  for (int64_t i = 0; i < n_tensors; ++i) {
    line = read_header_line(in, "tensor entry", path);
    std::stringstream ss(line);
    NamedTensor nt;
    int ndim = 0;
    if (!(ss >> nt.name >> ndim) || ndim < 1 || ndim > 8)
      throw FormatError("header field 'tensor entry': cannot parse '" + line + "' in " + path);
    std::vector<int> shape(static_cast<size_t>(ndim));
    for (int d = 0; d < ndim; ++d) {
      if (!(ss >> shape[static_cast<size_t>(d)]) || shape[static_cast<size_t>(d)] <= 0)
        throw FormatError("header field 'tensor entry': bad shape in '" + line + "' in " + path);
    }
    std::string extra;
    if (ss >> extra) throw FormatError("header field 'tensor entry': trailing tokens in '" + line + "' in " + path);
    nt.value = Tensor(shape);
    total += nt.value.numel();
    ckpt.tensors.push_back(std::move(nt));
  }

  line = read_header_line(in, "payload", path);
  int64_t declared = 0;
  if (std::sscanf(line.c_str(), "payload %lld", reinterpret_cast<long long*>(&declared)) != 1)
    throw FormatError("header field 'payload': cannot parse '" + line + "' in " + path);
  if (declared != total)
    throw FormatError("header field 'payload': declares " + std::to_string(declared) + " values but tensor list sums to " +
                      std::to_string(total) + " in " + path);

  int64_t done = 0;
  for (NamedTensor& t : ckpt.tensors) {
    read_f32_chunk(in, t.value.ptr(), t.value.numel(), total, done, path);
    done += t.value.numel();
  }
  require_eof(in, path);
  return ckpt;
}

// --- config -------------------------------------------------------------------

GridSpec RunConfig::grid() const {
  GridSpec g;
  g.lat0 = lat0;
  g.lon0 = lon0;
  g.dlat = dlat;
  g.dlon = dlon;
  g.n_rows = grid_rows;
  g.n_cols = grid_cols;
  return g;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
  };
  if (grid_rows < 4 || grid_rows % 2 != 0) fail("grid_rows", "must be even and >= 4");
  if (grid_cols < 4 || grid_cols % 2 != 0) fail("grid_cols", "must be even and >= 4");
  if (dlat <= 0.0) fail("dlat", "must be > 0");
  if (dlon <= 0.0) fail("dlon", "must be > 0");
  if (days < 1) fail("days", "must be >= 1");
  if (step_seconds < 1 || 86400 % step_seconds != 0) fail("step_seconds", "must divide 86400");
  if (n_plants < 1) fail("n_plants", "must be >= 1");
  if (concentration < 0.0) fail("concentration", "must be >= 0");
  if (conv_channels.empty() || conv_channels.size() % 2 != 0) fail("conv_channels", "must list an even number of layers");
  for (int c : conv_channels)
    if (c < 1) fail("conv_channels", "channel counts must be >= 1");
  const int n_pools = static_cast<int>(conv_channels.size()) / 2;
  if (grid_rows % (1 << n_pools) != 0 || grid_cols % (1 << n_pools) != 0)
    fail("conv_channels", "grid dims must be divisible by 2^" + std::to_string(n_pools) + " for the pooling stages");
  if (fc_dim < 1) fail("fc_dim", "must be >= 1");
  if (lstm_units < 1) fail("lstm_units", "must be >= 1");
  if (dropout_conv < 0.0 || dropout_conv >= 1.0) fail("dropout_conv", "must be in [0,1)");
  if (dropout_fc < 0.0 || dropout_fc >= 1.0) fail("dropout_fc", "must be in [0,1)");
  if (lr <= 0.0) fail("lr", "must be > 0");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (train_fraction <= 0.0 || train_fraction >= 1.0) fail("train_fraction", "must be in (0,1)");
  if (eval_filter != "measured" && eval_filter != "both") fail("eval_filter", "must be 'measured' or 'both'");
  if (occlusion_samples < 1) fail("occlusion_samples", "must be >= 1");
  try {
    parse_utc(start_time);
  } catch (const FormatError& e) {
    fail("start_time", e.what());
  }
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

int64_t cfg_int(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(val, &pos);
    if (pos != val.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer from '" + val + "'");
  }
}

double cfg_double(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    const double v = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number from '" + val + "'");
  }
}

std::vector<int> cfg_int_list(const std::string& key, const std::string& val) {
  std::vector<int> out;
  std::stringstream ss(val);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(static_cast<int>(cfg_int(key, trim(tok))));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");

    if (key == "seed") cfg.seed = static_cast<uint64_t>(cfg_int(key, val));
    else if (key == "grid_rows") cfg.grid_rows = static_cast<int>(cfg_int(key, val));
    else if (key == "grid_cols") cfg.grid_cols = static_cast<int>(cfg_int(key, val));
    else if (key == "lat0") cfg.lat0 = cfg_double(key, val);
    else if (key == "lon0") cfg.lon0 = cfg_double(key, val);
    else if (key == "dlat") cfg.dlat = cfg_double(key, val);
    else if (key == "dlon") cfg.dlon = cfg_double(key, val);
    else if (key == "start_time") cfg.start_time = val;
    else if (key == "days") cfg.days = static_cast<int>(cfg_int(key, val));
    else if (key == "step_seconds") cfg.step_seconds = cfg_int(key, val);
    else if (key == "n_plants") cfg.n_plants = static_cast<int>(cfg_int(key, val));
    else if (key == "concentration") cfg.concentration = cfg_double(key, val);
    else if (key == "conv_channels") cfg.conv_channels = cfg_int_list(key, val);
    else if (key == "fc_dim") cfg.fc_dim = static_cast<int>(cfg_int(key, val));
    else if (key == "lstm_units") cfg.lstm_units = static_cast<int>(cfg_int(key, val));
    else if (key == "dropout_conv") cfg.dropout_conv = cfg_double(key, val);
    else if (key == "dropout_fc") cfg.dropout_fc = cfg_double(key, val);
    else if (key == "lr") cfg.lr = cfg_double(key, val);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(cfg_int(key, val));
    else if (key == "epochs") cfg.epochs = static_cast<int>(cfg_int(key, val));
    else if (key == "train_fraction") cfg.train_fraction = cfg_double(key, val);
    else if (key == "eval_filter") cfg.eval_filter = val;
    else if (key == "occlusion_samples") cfg.occlusion_samples = static_cast<int>(cfg_int(key, val));
    else throw ConfigError("unknown config key '" + key + "' on line " + std::to_string(line_no));
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<std::string> echo_config(const RunConfig& cfg) {
  std::vector<std::string> lines;
  auto add = [&lines](const std::string& key, const std::string& val) { lines.push_back(key + " = " + val); };
  add("seed", std::to_string(cfg.seed));
  add("grid_rows", std::to_string(cfg.grid_rows));
  add("grid_cols", std::to_string(cfg.grid_cols));
  add("lat0", fmt_double(cfg.lat0));
  add("lon0", fmt_double(cfg.lon0));
  add("dlat", fmt_double(cfg.dlat));
  add("dlon", fmt_double(cfg.dlon));
  add("start_time", cfg.start_time);
  add("days", std::to_string(cfg.days));
  add("step_seconds", std::to_string(cfg.step_seconds));
  add("n_plants", std::to_string(cfg.n_plants));
  add("concentration", fmt_double(cfg.concentration));
  std::string ch;
  for (size_t i = 0; i < cfg.conv_channels.size(); ++i)
    ch += (i ? "," : "") + std::to_string(cfg.conv_channels[i]);
  add("conv_channels", ch);
  add("fc_dim", std::to_string(cfg.fc_dim));
  add("lstm_units", std::to_string(cfg.lstm_units));
  add("dropout_conv", fmt_double(cfg.dropout_conv));
  add("dropout_fc", fmt_double(cfg.dropout_fc));
  add("lr", fmt_double(cfg.lr));
  add("batch_size", std::to_string(cfg.batch_size));
  add("epochs", std::to_string(cfg.epochs));
  add("train_fraction", fmt_double(cfg.train_fraction));
  add("eval_filter", cfg.eval_filter);
  add("occlusion_samples", std::to_string(cfg.occlusion_samples));
  return lines;
}

}  // namespace pvnet::io
