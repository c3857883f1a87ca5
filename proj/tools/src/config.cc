#include "cranet/cli/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cranet/errors.h"

namespace cranet::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("key '" + key + "' expects a real number, got '" + v + "'");
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects on/off, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F parse) {
  std::vector<T> out;
  for (const auto& part : split_list(v)) out.push_back(parse(key, part));
  if (out.empty()) throw ConfigError("key '" + key + "' expects a non-empty list");
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + f(xs[i]);
  return out;
}

const char* format_name(RatingFormat f) { return f == RatingFormat::kMlDat ? "ml-dat" : "csv"; }

[[noreturn]] void unknown_key(const std::string& key) {
  std::string msg = "unknown config key '" + key + "'; valid keys:";
  for (const auto& k : config_keys()) msg += " " + k;
  throw ConfigError(msg);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"data", "format", "delimiter", "header", "implicit", "task", "mode"};
    for (const auto& h : hyper_param_keys()) k.push_back(h);
    for (const char* x : {"split_seed", "train_ratio", "val_frac", "k_list", "min_count", "deterministic",
                          "out", "alpha_grid", "lambda_grid", "neighbors", "checkpoint", "latent_ids",
                          "threads"})
      k.push_back(x);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (set_hyper_param(cfg.hyper, key, value)) return;
  if (key == "data") {
    cfg.data = value;
  } else if (key == "format") {
    if (value == "ml-dat") cfg.format = RatingFormat::kMlDat;
    else if (value == "csv") cfg.format = RatingFormat::kCsv;
    else throw ConfigError("key 'format' expects ml-dat or csv, got '" + value + "'");
  } else if (key == "delimiter") {
    if (value == "\\t" || value == "tab") cfg.delimiter = '\t';
    else if (value.size() == 1) cfg.delimiter = value[0];
    else throw ConfigError("key 'delimiter' expects a single character, got '" + value + "'");
  } else if (key == "header") {
    cfg.header = parse_flag(key, value);
  } else if (key == "implicit") {
    cfg.implicit = parse_flag(key, value);
  } else if (key == "task") {
    cfg.task = task_from_string(value);
  } else if (key == "mode") {
    cfg.mode = reflection_mode_from_string(value);
  } else if (key == "split_seed") {
    cfg.split_seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "train_ratio") {
    cfg.train_ratio = parse_real(key, value);
    if (cfg.train_ratio <= 0.0 || cfg.train_ratio > 1.0) throw ConfigError("key 'train_ratio' must lie in (0, 1]");
  } else if (key == "val_frac") {
    cfg.val_frac = parse_real(key, value);
    if (cfg.val_frac < 0.0 || cfg.val_frac >= 1.0) throw ConfigError("key 'val_frac' must lie in [0, 1)");
  } else if (key == "k_list") {
    cfg.k_list = parse_list<std::size_t>(key, value, parse_int<std::size_t>);
    for (auto k : cfg.k_list)
      if (k == 0) throw ConfigError("key 'k_list' entries must be positive");
  } else if (key == "min_count") {
    cfg.min_count = parse_int<std::size_t>(key, value);
  } else if (key == "deterministic") {
    cfg.deterministic = parse_flag(key, value);
  } else if (key == "out") {
    if (value.empty()) throw ConfigError("key 'out' must not be empty");
    cfg.out = value;
  } else if (key == "alpha_grid") {
    cfg.alpha_grid = parse_list<double>(key, value, parse_real);
  } else if (key == "lambda_grid") {
    cfg.lambda_grid = parse_list<double>(key, value, parse_real);
  } else if (key == "neighbors") {
    cfg.neighbors = parse_int<std::size_t>(key, value);
    if (cfg.neighbors == 0) throw ConfigError("key 'neighbors' must be at least 1");
  } else if (key == "checkpoint") {
    cfg.checkpoint = value;
  } else if (key == "latent_ids") {
    cfg.latent_ids = value.empty() ? std::vector<std::int64_t>{}
                                   : parse_list<std::int64_t>(key, value, parse_int<std::int64_t>);
  } else if (key == "threads") {
    cfg.threads = parse_int<std::size_t>(key, value);
  } else {
    unknown_key(key);
  }
}

std::map<std::string, std::string> read_config_file(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(no) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return read_config_file(in);
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  if (path) {
    for (const auto& [k, v] : read_config_file(*path)) apply_setting(cfg, k, v);
  }
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  return cfg;
}

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv{
      {"data", cfg.data},
      {"format", format_name(cfg.format)},
      {"delimiter", cfg.delimiter == '\t' ? "\\t" : std::string(1, cfg.delimiter)},
      {"header", cfg.header ? "on" : "off"},
      {"implicit", cfg.implicit ? "on" : "off"},
      {"task", to_string(cfg.task)},
      {"mode", to_string(cfg.mode)},
  };
  for (auto& p : cranet::to_key_values(cfg.hyper)) kv.push_back(std::move(p));
  auto count = [](std::size_t v) { return std::to_string(v); };
  kv.insert(kv.end(), {
                          {"split_seed", std::to_string(cfg.resolved_split_seed())},
                          {"train_ratio", fmt(cfg.train_ratio)},
                          {"val_frac", fmt(cfg.val_frac)},
                          {"k_list", join(cfg.k_list, count)},
                          {"min_count", count(cfg.min_count)},
                          {"deterministic", cfg.deterministic ? "on" : "off"},
                          {"out", cfg.out},
                          {"alpha_grid", join(cfg.alpha_grid, fmt)},
                          {"lambda_grid", join(cfg.lambda_grid, fmt)},
                          {"neighbors", count(cfg.neighbors)},
                          {"checkpoint", cfg.checkpoint},
                          {"latent_ids", join(cfg.latent_ids, [](std::int64_t v) { return std::to_string(v); })},
                          {"threads", count(cfg.threads)},
                      });
  return kv;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [k, v] : to_key_values(cfg)) out << k << '=' << v << '\n';
}

}  // namespace cranet::cli
