#include "cli.hpp"

#include "cli_config.hpp"

#include "simcim/agent.hpp"
#include "simcim/baselines.hpp"
#include "simcim/spectral_cache.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace simcim::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(15);
  s << v;
  return s.str();
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep, bool keep_empty = false) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (keep_empty || !item.empty()) out.push_back(item);
  }
  if (keep_empty && !s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

// ---- instances

struct Instance {
  std::string name;
  CouplingMatrix<double> matrix;
  std::optional<long long> best_known;
};

std::optional<long long> lookup_best_known(const fs::path& table, const std::string& name) {
  std::ifstream in(table);
  if (!in) return std::nullopt;  // no table just means unknown
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    if (f.size() >= 2 && f[0] == name) return std::stoll(f[1]);
  }
  return std::nullopt;
}

WeightMode weight_mode(const Config& c, const std::string& key) {
  return c.choice(key, {"unit", "signed"}) == "unit" ? WeightMode::unit : WeightMode::signed_unit;
}

Instance load_file_instance(const Config& c, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("instance file not found: " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  try {
    auto g = parse_gset<double>(text.str(), path.stem().string());
    auto best = lookup_best_known(c.text("instance.best_known_file"), g.name);
    return {g.name, std::move(g.matrix), best};
  } catch (const ParseError& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::optional<long long> best_known_override(const Config& c, const CouplingMatrix<double>& J,
                                             std::optional<long long> fallback) {
  const auto bk = c.text("instance.best_known");
  if (bk.empty()) return fallback;
  if (bk == "exact") return std::llround(brute_force_max_cut(J).cut);
  return c.integer("instance.best_known");
}

Instance load_instance(const Config& c) {
  const auto path = c.text("instance.path");
  if (!path.empty()) {
    auto inst = load_file_instance(c, path);
    inst.best_known = best_known_override(c, inst.matrix, inst.best_known);
    return inst;
  }
  const auto n = c.integer("instance.n");
  const auto p = c.real("instance.connect_prob");
  const auto seed = c.seed("instance.seed");
  auto J = generate_erdos_renyi<double>(n, p, weight_mode(c, "instance.weights"), seed);
  auto best = best_known_override(c, J, std::nullopt);
  return {"er_n" + std::to_string(n) + "_p" + num(p) + "_s" + std::to_string(seed), std::move(J),
          best};
}

SpectralDecomposition<double> decompose(const Config& c, const CouplingMatrix<double>& J) {
  const auto dir = c.text("instance.spectral_cache");
  if (dir.empty()) return eigendecompose(J);
  return SpectralCache(dir).get(J);
}

// ---- module configs

bool auto_learning_rate(const Config& c) { return c.text("simcim.learning_rate") == "auto"; }

SimCimConfig simcim_config(const Config& c) {
  SimCimConfig s;
  if (!auto_learning_rate(c)) s.learning_rate = c.real("simcim.learning_rate");
  s.momentum = c.real("simcim.momentum");
  s.noise = c.real("simcim.noise");
  s.iterations = c.integer("simcim.iterations");
  s.batch_size = c.integer("simcim.batch_size");
  s.validate();
  return s;
}

LearningRateTestOptions lr_options(const Config& c) {
  LearningRateTestOptions o;
  o.mu_start = c.real("lr_test.mu_start");
  o.mu_end = c.real("lr_test.mu_end");
  o.ema_decay = c.real("lr_test.ema_decay");
  o.fallback = c.real("lr_test.fallback");
  return o;
}

double learning_rate(const Config& c, const CouplingMatrix<double>& J,
                     const SpectralDecomposition<double>& d, const SimCimConfig& sim,
                     std::uint64_t seed) {
  if (!auto_learning_rate(c)) return sim.learning_rate;
  return find_learning_rate(J, d, sim, split_seed(seed, {stream::lr_test}), lr_options(c))
      .learning_rate;
}

EnvConfig env_config(const Config& c) {
  EnvConfig e;
  e.simcim = simcim_config(c);
  e.interval = c.integer("env.interval");
  e.pdelta = c.real("env.pdelta");
  e.initial_pbar = c.real("env.initial_pbar");
  e.reward.scheme =
      c.choice("reward.scheme", {"r2", "r3"}) == "r2" ? RewardScheme::r2 : RewardScheme::r3;
  e.reward.percentile = c.real("reward.percentile");
  e.validate();
  return e;
}

PpoConfig ppo_config(const Config& c) {
  PpoConfig p;
  p.epochs = int(c.integer("ppo.epochs"));
  p.gamma = c.real("ppo.gamma");
  p.clip = c.real("ppo.clip");
  p.value_weight = c.real("ppo.value_weight");
  p.entropy_weight = c.real("ppo.entropy_weight");
  p.learning_rate = c.real("ppo.learning_rate");
  p.max_grad_norm = c.real("ppo.max_grad_norm");
  p.minibatches = int(c.integer("ppo.minibatches"));
  p.validate();
  return p;
}

ContextOptions context_options(const Config& c) {
  ContextOptions o;
  o.tune_learning_rate = auto_learning_rate(c);
  o.lr_test = lr_options(c);
  return o;
}

CmaesConfig cmaes_config(const Config& c) {
  CmaesConfig m;
  m.population = int(c.integer("cmaes.population"));
  m.max_evaluations = int(c.integer("cmaes.budget"));
  m.initial_sigma = c.real("cmaes.sigma");
  return m;
}

Schedule schedule_of(const Config& c, const CouplingMatrix<double>& J) {
  if (c.choice("schedule.kind", {"linear", "tanh"}) == "linear") return LinearSchedule{};
  return TanhSchedule{{c.real("schedule.scale"), c.real("schedule.slope"),
                       c.real("schedule.shift"), J.row_sum_norm()}};
}

long long positive(const Config& c, const std::string& key, long long floor = 1) {
  const auto v = c.integer(key);
  if (v < floor)
    throw ConfigError("invalid value for " + key + ": " + std::to_string(v) + " (must be >= " +
                      std::to_string(floor) + ")");
  return v;
}

/// Parses every typed key up front so a bad value fails before any work.
void validate_config(const Config& c) {
  try {
    simcim_config(c);
    lr_options(c);
    env_config(c);
    ppo_config(c);
    cmaes_config(c);
    c.seed("run.seed");
    c.choice("schedule.kind", {"linear", "tanh"});
    c.real("schedule.scale");
    c.real("schedule.slope");
    c.real("schedule.shift");
    c.choice("bench.method", {"linear", "tanh", "cmaes", "agent"});
    c.choice("pretrain.weights", {"unit", "signed"});
    c.choice("instance.weights", {"unit", "signed"});
    c.flag("network.film");
    positive(c, "network.hidden");
    positive(c, "solve.batches");
    positive(c, "bench.batches");
    positive(c, "finetune.updates", 0);
    positive(c, "finetune.board_batches");
    positive(c, "pretrain.instances", 0);
    positive(c, "pretrain.checkpoint_every", 0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---- run plumbing

struct RunContext {
  const Config& config;
  std::string mode;
  fs::path dir;
  std::uint64_t seed;
  std::ostream& out;
};

std::map<std::string, std::uint64_t> seed_table(std::uint64_t master) {
  return {{"master", master},
          {"generator", split_seed(master, {stream::generator})},
          {"simcim", split_seed(master, {stream::simcim})},
          {"lr_test", split_seed(master, {stream::lr_test})},
          {"policy", split_seed(master, {stream::policy})},
          {"ppo", split_seed(master, {stream::ppo})},
          {"rewards", split_seed(master, {stream::rewards})},
          {"cmaes", split_seed(master, {stream::cmaes})},
          {"init", split_seed(master, {stream::init})},
          {"evaluation", split_seed(master, {stream::evaluation})}};
}

std::vector<double> as_vector(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  return {v.data(), v.data() + v.size()};
}

std::string stats_fields(const BatchStats& s) {
  return num(s.max) + ',' + num(s.median) + ',' + num(s.probability) + ',' + yes_no(s.solved) +
         ',' + (s.difference ? num(*s.difference) : std::string());
}

std::string best_known_text(const std::optional<long long>& b) {
  return b ? std::to_string(*b) : std::string("unknown");
}

void print_stats(std::ostream& out, const BatchStats& s) {
  out << "max " << num(s.max) << "  median " << num(s.median) << "  probability "
      << num(s.probability) << "  solved=" << yes_no(s.solved);
  if (s.difference) out << "  difference " << num(*s.difference);
  out << '\n';
}

UpdateCallback history_writer(std::ostream& csv, std::ostream& out, Index total,
                              const fs::path& checkpoints = {}, Index every = 0) {
  write_update_header(csv);
  return [&csv, &out, total, checkpoints, every](const UpdateRecord& r, const AgentParameters& a) {
    write_update_row(csv, r);
    csv.flush();
    const Index done = r.update + 1;
    if (done % 10 == 0 || done == total)
      out << "update " << done << "/" << total << "  mean reward " << num(r.mean_reward)
          << "  batch max " << num(r.batch_max) << "  median " << num(r.batch_median)
          << "  best " << num(r.best_cut) << '\n';
    if (every > 0 && done % every == 0) {
      fs::create_directories(checkpoints);
      save_checkpoint(a.network, (checkpoints / ("agent_" + std::to_string(done) + ".ckpt")).string());
    }
  };
}

// ---- modes

int mode_solve(const RunContext& run) {
  const auto& c = run.config;
  const auto inst = load_instance(c);
  const auto d = decompose(c, inst.matrix);
  auto sim = simcim_config(c);
  sim.learning_rate = learning_rate(c, inst.matrix, d, sim, run.seed);
  const auto schedule = schedule_of(c, inst.matrix);
  const auto batches = positive(c, "solve.batches");

  run.out << "instance " << inst.name << "  n=" << inst.matrix.size()
          << "  best_known=" << best_known_text(inst.best_known) << "  mu=" << num(sim.learning_rate)
          << '\n';
  auto cuts_csv = open_out(run.dir / "cuts.csv");
  auto batch_csv = open_out(run.dir / "batches.csv");
  cuts_csv << "batch,column,cut\n";
  batch_csv << "batch,max,median,probability,solved,difference\n";
  double best = -std::numeric_limits<double>::infinity(), sum_max = 0, sum_median = 0, sum_p = 0;
  int solved = 0;
  for (long long b = 0; b < batches; ++b) {
    const auto r = run_batch(inst.matrix, d, schedule, sim,
                             split_seed(run.seed, {stream::simcim, std::uint64_t(b)}));
    const auto cuts = as_vector(r.cuts);
    const auto s = evaluate_batch_stats(cuts, inst.best_known);
    for (std::size_t j = 0; j < cuts.size(); ++j)
      cuts_csv << b << ',' << j << ',' << num(cuts[j]) << '\n';
    batch_csv << b << ',' << stats_fields(s) << '\n';
    run.out << "batch " << b << ": ";
    print_stats(run.out, s);
    best = std::max(best, s.max);
    sum_max += s.max;
    sum_median += s.median;
    sum_p += s.probability;
    solved += s.solved;
  }
  const bool any_solved = inst.best_known && best == double(*inst.best_known);
  auto summary = open_out(run.dir / "summary.csv");
  summary << "instance,n,best_known,learning_rate,schedule,batches,best_cut,mean_max,mean_median,"
             "solved_fraction,mean_probability,solved\n"
          << inst.name << ',' << inst.matrix.size() << ','
          << (inst.best_known ? std::to_string(*inst.best_known) : "") << ','
          << num(sim.learning_rate) << ',' << c.text("schedule.kind") << ',' << batches << ','
          << num(best) << ',' << num(sum_max / batches) << ',' << num(sum_median / batches) << ','
          << num(double(solved) / batches) << ',' << num(sum_p / batches) << ','
          << yes_no(any_solved) << '\n';
  run.out << "best cut " << num(best) << "  solved=" << yes_no(any_solved) << '\n';
  return 0;
}

int mode_lr_test(const RunContext& run) {
  const auto& c = run.config;
  const auto inst = load_instance(c);
  const auto d = decompose(c, inst.matrix);
  const auto r = find_learning_rate(inst.matrix, d, simcim_config(c),
                                    split_seed(run.seed, {stream::lr_test}), lr_options(c));
  auto csv = open_out(run.dir / "lr_test.csv");
  csv << "iteration,learning_rate,gradient_norm,smoothed\n";
  for (std::size_t t = 0; t < r.rates.size(); ++t)
    csv << t << ',' << num(r.rates[t]) << ',' << num(r.gradient_norms[t]) << ','
        << num(r.smoothed[t]) << '\n';
  auto summary = open_out(run.dir / "summary.csv");
  summary << "instance,n,learning_rate,converged,selected_iteration\n"
          << inst.name << ',' << inst.matrix.size() << ',' << num(r.learning_rate) << ','
          << yes_no(r.converged) << ',' << r.selected_iteration << '\n';
  run.out << "instance " << inst.name << "  learning rate " << num(r.learning_rate);
  if (r.converged)
    run.out << "  (onset at iteration " << r.selected_iteration << ")\n";
  else
    run.out << "  (no convergence onset; fallback)\n";
  return 0;
}

NetworkShape network_shape(const Config& c, Index n) {
  return {n + 2, Index(positive(c, "network.hidden")), n, c.flag("network.film"), kActionCount};
}

int mode_pretrain(const RunContext& run) {
  const auto& c = run.config;
  const Index n = positive(c, "pretrain.n", 2);
  const auto instances = positive(c, "pretrain.instances", 0);
  PretrainConfig cfg{env_config(c), ppo_config(c), context_options(c)};
  const auto generator =
      erdos_renyi_generator(n, c.real("pretrain.connect_prob"), weight_mode(c, "pretrain.weights"));
  AgentParameters agent(initialize_network(network_shape(c, n), run.seed));

  run.out << "pretraining on " << instances << " instances, n=" << n << ", B="
          << cfg.env.batch() << '\n';
  auto csv = open_out(run.dir / "history.csv");
  const auto result =
      pretrain(std::move(agent), cfg, generator, instances, run.seed,
               history_writer(csv, run.out, instances, run.dir / "checkpoints",
                              positive(c, "pretrain.checkpoint_every", 0)));
  save_checkpoint(result.agent.network, (run.dir / "agent.ckpt").string());
  run.out << "checkpoint " << (run.dir / "agent.ckpt").string() << '\n';
  return 0;
}

NetworkParameters load_agent(const Config& c) {
  const auto path = c.text("finetune.checkpoint");
  if (path.empty()) throw ConfigError("finetune.checkpoint: a pre-trained checkpoint is required");
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path);
  return load_checkpoint(path);
}

FinetuneConfig finetune_config(const Config& c) {
  return {env_config(c), ppo_config(c), context_options(c),
          std::size_t(positive(c, "finetune.board_batches"))};
}

int mode_finetune(const RunContext& run) {
  const auto& c = run.config;
  const auto net = load_agent(c);
  const auto inst = load_instance(c);
  const auto d = decompose(c, inst.matrix);
  const auto updates = positive(c, "finetune.updates", 0);

  run.out << "fine-tuning on " << inst.name << "  n=" << inst.matrix.size() << "  for " << updates
          << " updates\n";
  auto csv = open_out(run.dir / "history.csv");
  const auto r = finetune(AgentParameters(net), inst.matrix, finetune_config(c), updates, run.seed,
                          inst.best_known, d, history_writer(csv, run.out, updates));
  save_checkpoint(r.agent.network, (run.dir / "agent.ckpt").string());
  auto cuts = open_out(run.dir / "final_cuts.csv");
  cuts << "column,cut\n";
  for (Index j = 0; j < r.final_cuts.size(); ++j) cuts << j << ',' << num(r.final_cuts[j]) << '\n';
  auto summary = open_out(run.dir / "summary.csv");
  summary << "instance,n,best_known,updates,learning_rate,best_cut,max,median,probability,solved,"
             "difference\n"
          << inst.name << ',' << inst.matrix.size() << ','
          << (inst.best_known ? std::to_string(*inst.best_known) : "") << ',' << updates << ','
          << num(r.learning_rate) << ',' << num(r.best_cut) << ',' << stats_fields(r.final_stats)
          << '\n';
  run.out << "final batch: ";
  print_stats(run.out, r.final_stats);
  run.out << "best cut seen " << num(r.best_cut) << '\n';
  return 0;
}

int mode_tune_cmaes(const RunContext& run) {
  const auto& c = run.config;
  const auto inst = load_instance(c);
  const auto d = decompose(c, inst.matrix);
  auto sim = simcim_config(c);
  sim.learning_rate = learning_rate(c, inst.matrix, d, sim, run.seed);
  const auto r = tune_tanh(inst.matrix, d, cmaes_config(c), sim, run.seed, inst.best_known);

  auto history = open_out(run.dir / "cmaes_history.csv");
  write_tune_history(history, r.history);
  auto cuts = open_out(run.dir / "fresh_cuts.csv");
  cuts << "column,cut\n";
  for (Index j = 0; j < r.fresh_cuts.size(); ++j) cuts << j << ',' << num(r.fresh_cuts[j]) << '\n';
  auto summary = open_out(run.dir / "summary.csv");
  summary << "instance,n,best_known,learning_rate,O,S,D,search_cmax,search_qmax,max,median,"
             "probability,solved,difference\n"
          << inst.name << ',' << inst.matrix.size() << ','
          << (inst.best_known ? std::to_string(*inst.best_known) : "") << ','
          << num(sim.learning_rate) << ',' << num(r.params.scale) << ',' << num(r.params.slope)
          << ',' << num(r.params.shift) << ',' << num(r.search_best.cmax) << ','
          << num(r.search_best.qmax) << ',' << stats_fields(r.fresh) << '\n';
  run.out << "instance " << inst.name << "  O=" << num(r.params.scale)
          << "  S=" << num(r.params.slope) << "  D=" << num(r.params.shift) << '\n'
          << "search best: max " << num(r.search_best.cmax) << "  probability "
          << num(r.search_best.qmax) << '\n'
          << "fresh batch: ";
  print_stats(run.out, r.fresh);
  return 0;
}

// G1, G2, ..., G10 rather than G1, G10, G2
bool natural_less(const fs::path& a, const fs::path& b) {
  const auto key = [](const fs::path& p) {
    const auto s = p.stem().string();
    auto i = s.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]))) --i;
    const long long number = i < s.size() ? std::stoll(s.substr(i)) : -1;
    return std::make_pair(s.substr(0, i), number);
  };
  return key(a) < key(b);
}

std::vector<Instance> bench_instances(const Config& c) {
  const auto entries = split(c.text("bench.instances"), ',');
  std::vector<Instance> out;
  if (entries.empty()) {
    out.push_back(load_instance(c));
  } else {
    std::vector<fs::path> files;
    if (entries.size() == 1 && fs::is_directory(entries[0])) {
      for (const auto& e : fs::directory_iterator(entries[0]))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end(), natural_less);
    } else {
      files.assign(entries.begin(), entries.end());
    }
    for (const auto& f : files) out.push_back(load_file_instance(c, f));
  }
  for (const auto& inst : out)
    if (!inst.best_known)
      throw std::runtime_error("bench: no best-known cut for " + inst.name +
                               " (add it to instance.best_known_file)");
  return out;
}

int mode_bench(const RunContext& run) {
  const auto& c = run.config;
  const auto method = c.choice("bench.method", {"linear", "tanh", "cmaes", "agent"});
  const auto updates = positive(c, "finetune.updates", 0);
  std::string label = c.text("bench.label");
  if (label.empty())
    label = method == "linear" ? "Linear"
            : method == "tanh" ? "Manual"
            : method == "cmaes" ? "CMA-ES"
                                : "Agent-" + std::to_string(updates);
  const auto instances = bench_instances(c);
  const auto batches = positive(c, "bench.batches");
  std::optional<NetworkParameters> net;
  if (method == "agent") net = load_agent(c);

  auto rows = open_out(run.dir / "instances.csv");
  rows << "label,instance,n,best_known,batch,max,median,probability,solved,difference,"
          "normalized_max,normalized_median\n";
  double sum_max = 0, sum_median = 0, sum_solved = 0;
  long long count = 0;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const auto seed = split_seed(run.seed, {std::uint64_t(i)});
    const auto sub = run.dir / inst.name;
    fs::create_directories(sub);
    const auto d = decompose(c, inst.matrix);
    std::vector<BatchStats> stats;

    if (method == "linear" || method == "tanh") {
      auto sim = simcim_config(c);
      sim.learning_rate = learning_rate(c, inst.matrix, d, sim, seed);
      const Schedule schedule =
          method == "linear" ? Schedule{LinearSchedule{}} : schedule_of(c, inst.matrix);
      for (long long b = 0; b < batches; ++b) {
        const auto r = run_batch(inst.matrix, d, schedule, sim,
                                 split_seed(seed, {stream::simcim, std::uint64_t(b)}));
        stats.push_back(evaluate_batch_stats(as_vector(r.cuts), inst.best_known));
      }
    } else if (method == "cmaes") {
      auto sim = simcim_config(c);
      sim.learning_rate = learning_rate(c, inst.matrix, d, sim, seed);
      const auto r = tune_tanh(inst.matrix, d, cmaes_config(c), sim, seed, inst.best_known);
      auto history = open_out(sub / "cmaes_history.csv");
      write_tune_history(history, r.history);
      auto params = open_out(sub / "params.csv");
      params << "O,S,D,learning_rate\n"
             << num(r.params.scale) << ',' << num(r.params.slope) << ',' << num(r.params.shift)
             << ',' << num(sim.learning_rate) << '\n';
      stats.push_back(r.fresh);
    } else {
      auto history = open_out(sub / "history.csv");
      std::ostringstream quiet;  // per-update progress goes to the CSV only
      const auto r = finetune(AgentParameters(*net), inst.matrix, finetune_config(c), updates,
                              seed, inst.best_known, d, history_writer(history, quiet, updates));
      save_checkpoint(r.agent.network, (sub / "agent.ckpt").string());
      stats.push_back(r.final_stats);
    }

    const double best = double(*inst.best_known);
    double inst_max = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < stats.size(); ++b) {
      const auto& s = stats[b];
      rows << label << ',' << inst.name << ',' << inst.matrix.size() << ',' << *inst.best_known
           << ',' << b << ',' << stats_fields(s) << ',' << num(s.max / best) << ','
           << num(s.median / best) << '\n';
      sum_max += s.max / best;
      sum_median += s.median / best;
      sum_solved += s.solved;
      inst_max = std::max(inst_max, s.max);
      ++count;
    }
    rows.flush();
    run.out << label << "  " << inst.name << "  best_known " << *inst.best_known << "  best "
            << num(inst_max) << "  batches " << stats.size() << '\n';
  }

  auto table = open_out(run.dir / "table.csv");
  table << "label,maximum,median,solved,instances,batches\n"
        << label << ',' << num(sum_max / count) << ',' << num(sum_median / count) << ','
        << num(sum_solved / count) << ',' << instances.size() << ',' << count << '\n';
  run.out << std::fixed << std::setprecision(4) << label << "  maximum " << sum_max / count
          << "  median " << sum_median / count << "  solved " << sum_solved / count << '\n'
          << std::defaultfloat;
  return 0;
}

// ---- report

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const fs::path& file) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error(file.string() + ": missing column '" + name + "'");
    return std::size_t(it - header.begin());
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split(line, ',', true);
  while (std::getline(in, line))
    if (!trim(line).empty()) t.rows.push_back(split(line, ',', true));
  return t;
}

struct Column {
  std::string label;
  double maximum = 0, median = 0, solved = 0;
};

struct InstanceResult {
  long long best_known = 0;
  double best = -std::numeric_limits<double>::infinity();
  double probability = 0;  // of the batch attaining `best`
};

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void render(std::ostream& out, const std::vector<std::string>& head,
            const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(head.size(), 0);
  const auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  };
  widen(head);
  for (const auto& r : body) widen(r);
  const auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i)
      out << (i ? "  " : "") << std::setw(int(width[i])) << (i ? std::right : std::left) << r[i];
    out << std::left << '\n';
  };
  line(head);
  for (const auto& r : body) line(r);
}

int mode_report(const RunContext& run) {
  const auto& c = run.config;
  const auto runs = split(c.text("report.runs"), ',');
  if (runs.empty()) throw ConfigError("report.runs: at least one run directory is required");

  std::vector<Column> columns;
  std::vector<std::string> instance_order;
  std::map<std::string, std::map<std::string, InstanceResult>> per;  // label -> instance
  std::map<std::string, long long> best_known;
  for (const auto& dir : runs) {
    const auto table = read_csv(fs::path(dir) / "table.csv");
    for (const auto& r : table.rows) {
      const auto f = [&](const char* name) { return r.at(table.column(name, dir)); };
      columns.push_back({f("label"), std::stod(f("maximum")), std::stod(f("median")),
                         std::stod(f("solved"))});
    }
    const auto inst = read_csv(fs::path(dir) / "instances.csv");
    for (const auto& r : inst.rows) {
      const auto f = [&](const char* name) { return r.at(inst.column(name, dir)); };
      const auto name = f("instance");
      if (!best_known.count(name)) instance_order.push_back(name);
      best_known[name] = std::stoll(f("best_known"));
      auto& slot = per[f("label")][name];
      slot.best_known = best_known[name];
      const double mx = std::stod(f("max")), p = std::stod(f("probability"));
      if (mx > slot.best || (mx == slot.best && p > slot.probability)) {
        slot.best = mx;
        slot.probability = p;
      }
    }
  }

  auto csv = open_out(run.dir / "report.csv");
  csv << "label,maximum,median,solved\n";
  for (const auto& col : columns)
    csv << col.label << ',' << num(col.maximum) << ',' << num(col.median) << ','
        << num(col.solved) << '\n';
  auto detail = open_out(run.dir / "per_instance.csv");
  detail << "label,instance,best_known,best,difference,probability\n";
  for (const auto& col : columns)
    for (const auto& name : instance_order)
      if (per[col.label].count(name)) {
        const auto& r = per[col.label][name];
        detail << col.label << ',' << name << ',' << r.best_known << ',' << num(r.best) << ','
               << num(r.best - double(r.best_known)) << ',' << num(r.probability) << '\n';
      }

  std::ostringstream text;
  std::vector<std::string> head{""};
  std::vector<std::vector<std::string>> body{{"Maximum"}, {"Median"}, {"Solved"}};
  for (const auto& col : columns) {
    head.push_back(col.label);
    body[0].push_back(fixed4(col.maximum));
    body[1].push_back(fixed4(col.median));
    body[2].push_back(fixed4(col.solved));
  }
  render(text, head, body);
  text << '\n';
  std::vector<std::string> head2{""};
  std::vector<std::vector<std::string>> body2{{"Best"}};
  for (const auto& name : instance_order) {
    head2.push_back(name);
    body2[0].push_back(std::to_string(best_known[name]));
  }
  for (const auto& col : columns) {
    std::vector<std::string> best{col.label}, diff{"  difference"}, prob{"  probability"};
    for (const auto& name : instance_order) {
      const auto it = per[col.label].find(name);
      const bool have = it != per[col.label].end();
      best.push_back(have ? num(it->second.best) : "-");
      diff.push_back(have ? num(it->second.best - double(it->second.best_known)) : "-");
      prob.push_back(have ? num(std::round(it->second.probability * 100) / 100) : "-");
    }
    body2.push_back(best);
    body2.push_back(diff);
    body2.push_back(prob);
  }
  render(text, head2, body2);
  auto txt = open_out(run.dir / "report.txt");
  txt << text.str();
  run.out << text.str();
  return 0;
}

struct Mode {
  const char* name;
  const char* description;
  int (*fn)(const RunContext&);
};

const Mode kModes[] = {
    {"solve", "Run SimCIM batches with a fixed schedule", mode_solve},
    {"lr-test", "Run the learning-rate range test", mode_lr_test},
    {"pretrain", "Pre-train an agent on random instances", mode_pretrain},
    {"finetune", "Fine-tune a pre-trained agent on one instance", mode_finetune},
    {"tune-cmaes", "Tune the tanh schedule with CMA-ES", mode_tune_cmaes},
    {"bench", "Benchmark one method over a set of instances", mode_bench},
    {"report", "Merge bench runs into comparison tables", mode_report},
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SimCIM max-cut solver with a learned regularization schedule", "simcim"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "INI file with [section] key = value entries");
  const auto& keys = config_keys();
  std::vector<std::string> values(keys.size());
  std::vector<CLI::Option*> options;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].key == "run.mode") {
      options.push_back(nullptr);
      continue;
    }
    options.push_back(app.add_option("--" + keys[i].key, values[i], keys[i].help)
                          ->group("Config overrides (default in brackets)")
                          ->default_str(keys[i].value));
  }
  for (const auto& m : kModes) app.add_subcommand(m.name, m.description);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  const std::string mode = app.get_subcommands().front()->get_name();

  try {
    Config config;
    if (!config_path.empty()) config.merge_file(config_path);
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (options[i] && options[i]->count()) config.set(keys[i].key, values[i]);
    config.set("run.mode", mode);
    if (config.text("run.output_root").empty()) {
      const char* env = std::getenv("SIMCIM_OUTPUT_ROOT");
      config.set("run.output_root", env && *env ? env : "runs");
    }
    validate_config(config);

    const auto name = config.text("run.name").empty() ? mode : config.text("run.name");
    const auto dir = fs::path(config.text("run.output_root")) / name;
    fs::create_directories(dir);
    const auto seed = config.seed("run.seed");
    config.write_manifest(dir / "manifest.ini", seed_table(seed));

    const RunContext ctx{config, mode, dir, seed, out};
    for (const auto& m : kModes)
      if (mode == m.name) {
        const int code = m.fn(ctx);
        out << "outputs in " << dir.string() << '\n';
        return code;
      }
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace simcim::cli
