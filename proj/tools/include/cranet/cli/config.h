#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cranet/data.h"
#include "cranet/eval.h"
#include "cranet/model.h"

namespace cranet::cli {

inline const std::vector<double> kLambdaGrid{0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0005};
inline const std::vector<double> kAlphaGrid{200, 20, 2, 0.2, 0.02};

struct RunConfig {
  std::string data;
  RatingFormat format = RatingFormat::kMlDat;
  char delimiter = ',';
  bool header = false;
  bool implicit = false;
  Task task = Task::kRating;
  ReflectionMode mode = ReflectionMode::kImplicit;
  HyperParams hyper;
  std::optional<std::uint64_t> split_seed;  // falls back to hyper.seed
  double train_ratio = 0.9;
  double val_frac = 0.05;
  std::vector<std::size_t> k_list{3, 5, 10};
  std::size_t min_count = 0;
  bool deterministic = false;
  std::string out = "run";
  std::vector<double> alpha_grid = kAlphaGrid;
  std::vector<double> lambda_grid = kLambdaGrid;
  std::size_t neighbors = 10;
  std::string checkpoint;                // empty: <out>/model.crae
  std::vector<std::int64_t> latent_ids;  // empty: every vector
  std::size_t threads = 0;               // 0: hardware concurrency

  std::uint64_t resolved_split_seed() const { return split_seed.value_or(hyper.seed); }
};

// Every accepted key, in the order the resolved config is written.
const std::vector<std::string>& config_keys();

// Throws ConfigError for an unknown key (listing the valid ones) or a value
// that does not parse (naming the key).
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// key=value lines; '#' starts a comment; blank lines are skipped.
std::map<std::string, std::string> read_config_file(std::istream& in);
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// File values first, then `overrides` on top.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::map<std::string, std::string>& overrides);

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg);
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace cranet::cli
