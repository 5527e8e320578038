#include "cli_config.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <fstream>

namespace simcim::cli {

namespace pt = boost::property_tree;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"run.mode", "", "set from the subcommand; recorded in manifests"},
      {"run.seed", "1", "master seed; every component seed is split from it"},
      {"run.name", "", "run directory name (default: the mode)"},
      {"run.output_root", "", "output root (default: $SIMCIM_OUTPUT_ROOT, else ./runs)"},

      {"instance.path", "", "Gset file; empty means an Erdos-Renyi instance"},
      {"instance.n", "60", "generated instance size"},
      {"instance.connect_prob", "0.06", "generated edge probability"},
      {"instance.weights", "unit", "generated weights: unit | signed"},
      {"instance.seed", "0", "generator seed"},
      {"instance.best_known", "", "best-known cut, 'exact' for brute force, empty to look up"},
      {"instance.best_known_file", SIMCIM_DATA_DIR "/gset_best_known.csv",
       "CSV instance,best_known keyed by file stem"},
      {"instance.spectral_cache", "", "directory caching eigendecompositions"},

      {"simcim.learning_rate", "auto", "mu, or 'auto' for the learning-rate test"},
      {"simcim.momentum", "0.9", "eta"},
      {"simcim.noise", "0.03", "sigma"},
      {"simcim.iterations", "1000", "N"},
      {"simcim.batch_size", "256", "B"},

      {"lr_test.mu_start", "1", "first rate of the exponential sweep"},
      {"lr_test.mu_end", "1e-05", "last rate of the sweep"},
      {"lr_test.ema_decay", "0.9", "smoothing of the gradient-norm trace"},
      {"lr_test.fallback", "0.02", "rate used when no convergence onset is found"},

      {"schedule.kind", "linear", "linear | tanh"},
      {"schedule.scale", "1", "tanh O"},
      {"schedule.slope", "1", "tanh S"},
      {"schedule.shift", "0", "tanh D"},

      {"solve.batches", "1", "independent batches to sample"},

      {"env.interval", "10", "iterations between agent actions (m)"},
      {"env.pdelta", "0.04", "action increment"},
      {"env.initial_pbar", "1", "schedule value at t = 0"},

      {"reward.scheme", "r3", "r2 | r3"},
      {"reward.percentile", "99", "leaderboard percentile q"},

      {"network.hidden", "256", "hidden width of actor and critic"},
      {"network.film", "true", "condition the actor on problem features"},

      {"ppo.epochs", "4", ""},
      {"ppo.gamma", "1", ""},
      {"ppo.clip", "0.2", ""},
      {"ppo.value_weight", "0.5", ""},
      {"ppo.entropy_weight", "0.01", ""},
      {"ppo.learning_rate", "0.0003", ""},
      {"ppo.max_grad_norm", "0.5", "<= 0 disables clipping"},
      {"ppo.minibatches", "4", ""},

      {"pretrain.instances", "300", "random instances, one update each"},
      {"pretrain.n", "60", ""},
      {"pretrain.connect_prob", "0.06", ""},
      {"pretrain.weights", "unit", "unit | signed"},
      {"pretrain.checkpoint_every", "0", "extra checkpoints every k instances (0: final only)"},

      {"finetune.checkpoint", "", "pre-trained agent to start from"},
      {"finetune.updates", "100", "K"},
      {"finetune.board_batches", "5", "leaderboard capacity in batches"},

      {"cmaes.population", "10", ""},
      {"cmaes.budget", "500", "SimCIM batch evaluations"},
      {"cmaes.sigma", "0.3", "initial step in the unit cube"},

      {"bench.instances", "", "comma-separated Gset files, or one directory"},
      {"bench.method", "linear", "linear | tanh | cmaes | agent"},
      {"bench.batches", "30", "batches per instance for linear and tanh"},
      {"bench.label", "", "table column (default from the method)"},

      {"report.runs", "", "comma-separated bench run directories"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : config_keys()) tree_.put(k.key, k.value);
}

void Config::require_known(const std::string& key) const {
  const auto& keys = config_keys();
  if (std::none_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.key == key; }))
    throw ConfigError("unknown config key '" + key + "'");
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  pt::ptree file;
  try {
    pt::read_ini(in, file);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + path.string() + ":" + std::to_string(e.line()) + ": " +
                      e.message());
  }
  for (const auto& [section, entries] : file) {
    if (section == "seeds") continue;
    if (!entries.data().empty())
      throw ConfigError("config: key '" + section + "' must be inside a [section]");
    for (const auto& [name, value] : entries) set(section + "." + name, value.data());
  }
}

void Config::set(const std::string& key, const std::string& value) {
  require_known(key);
  tree_.put(key, value);
}

std::string Config::text(const std::string& key) const {
  require_known(key);
  return tree_.get<std::string>(key);
}

namespace {

template <class T>
T parse_value(const pt::ptree& tree, const std::string& key, const char* what) {
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_error&) {
    throw ConfigError("invalid value for " + key + ": '" + tree.get<std::string>(key) +
                      "' (expected " + what + ")");
  }
}

}  // namespace

double Config::real(const std::string& key) const {
  require_known(key);
  return parse_value<double>(tree_, key, "a number");
}

long long Config::integer(const std::string& key) const {
  require_known(key);
  return parse_value<long long>(tree_, key, "an integer");
}

std::uint64_t Config::seed(const std::string& key) const {
  require_known(key);
  const auto v = text(key);
  if (!v.empty() && v.front() == '-')
    throw ConfigError("invalid value for " + key + ": '" + v + "' (expected a non-negative integer)");
  return parse_value<std::uint64_t>(tree_, key, "a non-negative integer");
}

bool Config::flag(const std::string& key) const {
  require_known(key);
  return parse_value<bool>(tree_, key, "true or false");
}

std::string Config::choice(const std::string& key, const std::vector<std::string>& choices) const {
  const auto v = text(key);
  if (std::find(choices.begin(), choices.end(), v) != choices.end()) return v;
  std::string list;
  for (const auto& c : choices) list += (list.empty() ? "" : " | ") + c;
  throw ConfigError("invalid value for " + key + ": '" + v + "' (expected " + list + ")");
}

void Config::write_manifest(const std::filesystem::path& path,
                            const std::map<std::string, std::uint64_t>& seeds) const {
  pt::ptree out = tree_;
  for (const auto& [name, value] : seeds) out.put("seeds." + name, std::to_string(value));
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  pt::write_ini(file, out);
}

}  // namespace simcim::cli
