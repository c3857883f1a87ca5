#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cranet/cli/commands.h"
#include "cranet/cli/config.h"
#include "cranet/errors.h"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const std::vector<Flag> kValueFlags{
    {"--data", "data", "ratings file"},
    {"--format", "format", "ml-dat or csv"},
    {"--delimiter", "delimiter", "csv field delimiter (single character, \\t for tab)"},
    {"--task", "task", "rating or ranking"},
    {"--mode", "mode", "tied, independent, implicit or plain"},
    {"--decay", "decay", "phi1..phi4"},
    {"--alpha", "alpha", "decay strength"},
    {"--lambda1", "lambda1", "weight on |V|^2"},
    {"--lambda2", "lambda2", "weight on |W|^2"},
    {"--lambda3", "lambda3", "weight on |T - V V^T|^2"},
    {"--lambda4", "lambda4", "weight on |U|^2"},
    {"--dp", "dp", "hidden units"},
    {"--lr", "lr", "learning rate"},
    {"--batch", "batch", "vectors per mini-batch"},
    {"--epochs", "epochs", "maximum epochs"},
    {"--patience", "patience", "early-stopping patience in epochs (0 disables)"},
    {"--residual", "residual", "on or off"},
    {"--orientation", "orientation", "item or user"},
    {"--optimizer", "optimizer", "adam or sgd"},
    {"--seed", "seed", "training seed (also the split seed unless --split-seed is given)"},
    {"--split-seed", "split_seed", "split seed"},
    {"--train-ratio", "train_ratio", "train share of the records"},
    {"--val-frac", "val_frac", "validation share of the train pool"},
    {"--k-list", "k_list", "comma-separated cutoffs for ranking metrics"},
    {"--min-count", "min_count", "drop users and items with fewer records"},
    {"--alpha-grid", "alpha_grid", "comma-separated alpha values"},
    {"--lambda-grid", "lambda_grid", "comma-separated lambda values"},
    {"--neighbors", "neighbors", "neighbours for the imputed baseline"},
    {"--checkpoint", "checkpoint", "model file (default <out>/model.crae)"},
    {"--latent-ids", "latent_ids", "comma-separated raw ids to export"},
    {"--threads", "threads", "worker threads (0 = all cores)"},
    {"--out", "out", "run directory"},
};

const std::vector<Flag> kSwitches{
    {"--implicit", "implicit", "binarize ratings (implicit feedback)"},
    {"--deterministic", "deterministic", "single-threaded, timing-free logs"},
    {"--header", "header", "csv has a header row"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflection-augmented autoencoder for collaborative filtering"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key=value config file");
  std::map<std::string, std::string> values;
  std::vector<std::pair<const Flag*, CLI::Option*>> bound;
  for (const auto& f : kValueFlags) bound.push_back({&f, app.add_option(f.name, values[f.key], f.help)});
  std::map<std::string, bool> switches;
  for (const auto& f : kSwitches) bound.push_back({&f, app.add_flag(f.name, switches[f.key], f.help)});

  std::string command;
  for (const auto& name : cranet::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cranet::cli::kExitOk : cranet::cli::kExitUsage;
  }

  std::map<std::string, std::string> overrides;
  for (const auto& [flag, opt] : bound) {
    if (opt->count() == 0) continue;
    const bool is_switch = switches.count(flag->key) > 0;
    overrides[flag->key] = is_switch ? "on" : values[flag->key];
  }

  cranet::cli::RunConfig cfg;
  try {
    cfg = cranet::cli::load_config(config_path.empty() ? std::nullopt
                                                       : std::optional<std::filesystem::path>(config_path),
                                   overrides);
  } catch (const cranet::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cranet::cli::kExitUsage;
  }
  return cranet::cli::run_guarded(command, cfg, std::cerr, std::cerr);
}
