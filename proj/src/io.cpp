#include "ppr/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ppr/errors.hpp"

namespace ppr {

namespace {

constexpr const char* kToolVersion = "ppr 0.1.0";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

bool is_data_line(const std::string& line) {
  if (line.empty() || line[0] == '#') return false;
  const std::string first = line.substr(0, line.find(','));
  try {
    parse_double(first);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

std::string join_row(const double* v, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s.push_back(',');
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> v;
  for (const auto& cell : split_csv(line)) v.push_back(parse_double(cell));
  return v;
}

std::string row_block(const Eigen::MatrixXd& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s.push_back(',');
      s += format_double(m(i, j));
    }
    s.push_back('\n');
  }
  return s;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  std::string t = text;
  t.erase(0, t.find_first_not_of(" \t"));
  t.erase(t.find_last_not_of(" \t") + 1);
  if (t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  const char* b = t.data();
  if (!t.empty() && t[0] == '+') ++b;
  double v = 0.0;
  auto res = std::from_chars(b, t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw ConfigError("cannot parse number '" + text + "'");
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

void write_states_csv(const fs::path& path, const std::vector<PhaseState>& states,
                      const std::vector<std::string>& lead_names, const std::vector<std::vector<double>>& lead_values) {
  if (!lead_values.empty() && lead_values.size() != states.size()) {
    throw DimensionError("write_states_csv: lead values must match the state count");
  }
  const std::size_t d = states.empty() ? 0 : states.front().dim();
  std::string s;
  std::vector<std::string> names = lead_names;
  for (std::size_t i = 1; i <= d; ++i) names.push_back("p" + std::to_string(i));
  for (std::size_t i = 1; i <= d; ++i) names.push_back("q" + std::to_string(i));
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
  s.push_back('\n');
  for (std::size_t r = 0; r < states.size(); ++r) {
    if (!lead_values.empty()) {
      for (double v : lead_values[r]) s += format_double(v) + ",";
    }
    const auto u = states[r].concat();
    s += join_row(u.data(), u.size());
    s.push_back('\n');
  }
  write_text(path, s);
}

std::vector<PhaseState> read_states_csv(const fs::path& path, std::size_t lead_columns) {
  std::istringstream in(read_text(path));
  std::vector<PhaseState> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!is_data_line(line)) continue;
    auto v = parse_row(line);
    if (v.size() <= lead_columns || (v.size() - lead_columns) % 2 != 0) {
      throw ConfigError("read_states_csv: malformed row in " + path.string());
    }
    out.push_back(PhaseState::from_concat(std::span<const double>(v).subspan(lead_columns)));
  }
  return out;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) { write_text(path, row_block(m)); }

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (is_data_line(line)) rows.push_back(parse_row(line));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("read_matrix_csv: ragged rows in " + path.string());
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::vector<std::vector<double>> log10_grid(const std::vector<std::vector<double>>& values) {
  auto out = values;
  for (auto& row : out) {
    for (auto& v : row) {
      if (std::isnan(v)) continue;
      v = v == 0.0 ? kLog10ZeroSentinel : std::log10(std::abs(v));
    }
  }
  return out;
}

void write_grid_csv(const fs::path& path, const std::vector<std::vector<double>>& grid, const std::string& comment) {
  std::string s = "# " + comment + "\n";
  const std::size_t cols = grid.empty() ? 0 : grid.front().size();
  s += "k";
  for (std::size_t n = 0; n < cols; ++n) s += ",n" + std::to_string(n);
  s.push_back('\n');
  for (std::size_t k = 0; k < grid.size(); ++k) {
    s += std::to_string(k);
    for (double v : grid[k]) s += "," + format_double(v);
    s.push_back('\n');
  }
  write_text(path, s);
}

void save_dataset(const fs::path& path, const TrainingSet& data, const json& config) {
  const std::size_t d = data.dim();
  json header = {{"format", "ppr-dataset"}, {"d", d},          {"S", data.S},         {"count", data.size()},
                 {"dropped", data.dropped}, {"fine", data.fine}, {"lead_columns", 0}, {"config", config}};
  std::string s = header.dump() + "\n";
  std::vector<std::string> names;
  for (int i = 0; i <= data.S; ++i) {
    const std::string tag = i == 0 ? "" : "_t" + std::to_string(i);
    for (std::size_t a = 1; a <= d; ++a) names.push_back("p" + std::to_string(a) + tag);
    for (std::size_t a = 1; a <= d; ++a) names.push_back("q" + std::to_string(a) + tag);
  }
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
  s.push_back('\n');
  for (std::size_t n = 0; n < data.size(); ++n) {
    auto u = data.inputs[n].concat();
    s += join_row(u.data(), u.size());
    for (const auto& t : data.targets[n]) {
      auto v = t.concat();
      s += "," + join_row(v.data(), v.size());
    }
    s.push_back('\n');
  }
  write_text(path, s);
}

void save_samples(const fs::path& path, const SampleSet& samples, const json& config) {
  const std::size_t d = samples.states.empty() ? 0 : samples.states.front().dim();
  json header = {{"format", "ppr-dataset"},  {"d", d},
                 {"S", 0},                   {"count", samples.size()},
                 {"algo", samples.algo},     {"flow", samples.flow},
                 {"H0", samples.H0},         {"sigma", samples.sigma},
                 {"seed", samples.seed},     {"lead_columns", 3},
                 {"config", config}};
  std::string s = header.dump() + "\n";
  s += "group,traj,step";
  for (std::size_t a = 1; a <= d; ++a) s += ",p" + std::to_string(a);
  for (std::size_t a = 1; a <= d; ++a) s += ",q" + std::to_string(a);
  s.push_back('\n');
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto& o = samples.origin[n];
    s += std::to_string(o.group) + "," + std::to_string(o.traj) + "," + std::to_string(o.step) + ",";
    auto u = samples.states[n].concat();
    s += join_row(u.data(), u.size());
    s.push_back('\n');
  }
  write_text(path, s);
}

LoadedDataset load_dataset(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset " + path.string() + " is empty");
  LoadedDataset out;
  try {
    out.header = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError("dataset " + path.string() + ": bad header: " + e.what());
  }
  if (out.header.value("format", "") != "ppr-dataset") throw ConfigError("not a dataset file: " + path.string());
  const auto d = out.header.at("d").get<std::size_t>();
  const int S = out.header.at("S").get<int>();
  const auto lead = out.header.value("lead_columns", std::size_t{0});
  const std::size_t width = lead + 2 * d * static_cast<std::size_t>(S + 1);
  out.data.S = S;
  out.data.dropped = out.header.value("dropped", std::size_t{0});
  out.data.fine = out.header.value("fine", "");
  while (std::getline(in, line)) {
    if (!is_data_line(line)) continue;
    auto v = parse_row(line);
    if (v.size() != width) throw ConfigError("dataset " + path.string() + ": row has wrong width");
    std::span<const double> row(v);
    out.data.inputs.push_back(PhaseState::from_concat(row.subspan(lead, 2 * d)));
    std::vector<PhaseState> seq;
    for (int i = 1; i <= S; ++i) {
      seq.push_back(PhaseState::from_concat(row.subspan(lead + 2 * d * static_cast<std::size_t>(i), 2 * d)));
    }
    out.data.targets.push_back(std::move(seq));
  }
  if (out.data.size() != out.header.at("count").get<std::size_t>()) {
    throw ConfigError("dataset " + path.string() + ": row count does not match header");
  }
  return out;
}

std::string serialize_checkpoint(const ResNetParams& params, const json& train_config) {
  std::string body;
  for (int l = 0; l < params.layers(); ++l) {
    const Eigen::MatrixXd w = params.W(l);
    body += "# W" + std::to_string(l + 1) + " " + std::to_string(w.rows()) + " " + std::to_string(w.cols()) + "\n";
    body += row_block(w);
    const Eigen::MatrixXd b = params.b(l).transpose();
    body += "# b" + std::to_string(l + 1) + " " + std::to_string(b.cols()) + "\n";
    body += row_block(b);
  }
  json header = {{"format", "ppr-resnet-checkpoint"},
                 {"L", params.L()},
                 {"n", params.width()},
                 {"d", params.d()},
                 {"activation", "elu"},
                 {"skip_scale", params.scaled_skip() ? "1/L" : "1"},
                 {"train_config", train_config},
                 {"sha256", sha256_hex(body)}};
  return header.dump() + "\n" + body;
}

LoadedCheckpoint parse_checkpoint(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos) throw ConfigError("checkpoint: missing header");
  LoadedCheckpoint out;
  try {
    out.header = json::parse(text.substr(0, nl));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (out.header.value("format", "") != "ppr-resnet-checkpoint") throw ConfigError("checkpoint: unknown format");
  if (out.header.value("activation", "") != "elu") throw ConfigError("checkpoint: unsupported activation");
  const std::string body = text.substr(nl + 1);
  if (sha256_hex(body) != out.header.value("sha256", "")) throw ConfigError("checkpoint: checksum mismatch");
  out.params = ResNetParams(out.header.at("L").get<int>(), out.header.at("n").get<int>(), out.header.at("d").get<int>(),
                            out.header.value("skip_scale", "1/L") == "1/L");
  std::istringstream in(body);
  std::string line;
  auto next_data = [&]() {
    if (!std::getline(in, line) || !is_data_line(line)) throw ConfigError("checkpoint: truncated weight block");
    return parse_row(line);
  };
  for (int l = 0; l < out.params.layers(); ++l) {
    if (!std::getline(in, line) || line.rfind("# W", 0) != 0) throw ConfigError("checkpoint: expected W block");
    auto w = out.params.W(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      auto row = next_data();
      if (static_cast<Eigen::Index>(row.size()) != w.cols()) throw ConfigError("checkpoint: W row has wrong width");
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = row[static_cast<std::size_t>(j)];
    }
    if (!std::getline(in, line) || line.rfind("# b", 0) != 0) throw ConfigError("checkpoint: expected b block");
    auto row = next_data();
    auto b = out.params.b(l);
    if (static_cast<Eigen::Index>(row.size()) != b.size()) throw ConfigError("checkpoint: b has wrong width");
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = row[static_cast<std::size_t>(j)];
  }
  return out;
}

void save_checkpoint(const fs::path& path, const ResNetParams& params, const json& train_config) {
  write_text(path, serialize_checkpoint(params, train_config));
}

LoadedCheckpoint load_checkpoint(const fs::path& path) { return parse_checkpoint(read_text(path)); }

void write_manifest(const fs::path& dir, const json& config, const std::map<std::string, double>& timings) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  json inventory = json::array();
  for (const auto& f : files) {
    inventory.push_back({{"path", fs::relative(f, dir).generic_string()},
                         {"size", fs::file_size(f)},
                         {"sha256", sha256_file(f)}});
  }
  json manifest = {{"tool_version", kToolVersion},
                   {"config", config},
                   {"input_hash", sha256_hex(config.dump())},
                   {"timings_seconds", timings},
                   {"files", inventory}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ppr
