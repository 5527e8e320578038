// Acceptance checks 1-9. One PASS / FAIL / SKIP line per criterion, followed
// by indented detail lines. Exit 0 when nothing failed, 1 when something
// failed, 77 when every selected criterion was skipped.

#include "simcim/agent.hpp"
#include "simcim/baselines.hpp"
#include "simcim/spectral.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace simcim;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Verdict {
  Status status;
  std::string summary;
  std::vector<std::string> details;
};

struct Options {
  fs::path cache = "acceptance_cache";
  std::string g1;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string runtime(const Timer& t, double target) {
  return "runtime " + fmt(t.seconds(), 3) + " s (target < " + fmt(target) + " s" +
         (t.seconds() < target ? ", met)" : ", missed)");
}

// ---- G1

std::optional<fs::path> find_g1(const Options& o) {
  std::vector<fs::path> candidates;
  if (!o.g1.empty()) candidates.emplace_back(o.g1);
  if (const char* env = std::getenv("SIMCIM_G1"); env && *env) candidates.emplace_back(env);
  candidates.emplace_back(fs::path(SIMCIM_DATA_DIR) / "gset" / "G1");
  for (const auto& c : candidates)
    if (fs::is_regular_file(c)) return c;
  return std::nullopt;
}

CouplingMatrix<double> load_gset(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  return parse_gset<double>(text.str(), path.stem().string()).matrix;
}

Verdict g1_missing(const std::string& what) {
  return {Status::skip,
          what + ": G1 not found (pass --g1 PATH, set SIMCIM_G1, or place it at data/gset/G1)",
          {}};
}

// ---- criteria

Verdict criterion_1(const Options&) {
  Timer timer;
  const int instances = 50;
  int hits = 0;
  std::vector<std::string> misses;
  for (int i = 0; i < instances; ++i) {
    const auto J = generate_erdos_renyi<double>(16, 0.3, WeightMode::unit,
                                                split_seed(101, {stream::generator, std::uint64_t(i)}));
    const auto d = eigendecompose(J);
    SimCimConfig cfg;  // B = 256, N = 1000
    cfg.learning_rate =
        find_learning_rate(J, d, cfg, split_seed(101, {stream::lr_test, std::uint64_t(i)}))
            .learning_rate;
    const double found =
        run_batch(J, d, LinearSchedule{}, cfg, split_seed(101, {stream::simcim, std::uint64_t(i)}))
            .cuts.maxCoeff();
    const double optimum = brute_force_max_cut(J).cut;
    if (found == optimum)
      ++hits;
    else
      misses.push_back("instance " + std::to_string(i) + ": " + fmt(found) + " < " + fmt(optimum));
  }
  const double rate = double(hits) / instances;
  Verdict v{rate >= 0.9 ? Status::pass : Status::fail,
            "oracle equivalence n=16: optimum found on " + std::to_string(hits) + "/" +
                std::to_string(instances) + " = " + fmt(rate) + " (need >= 0.90)",
            {runtime(timer, 120)}};
  v.details.insert(v.details.end(), misses.begin(), misses.end());
  return v;
}

Verdict criterion_2(const Options& o) {
  const auto path = find_g1(o);
  if (!path) return g1_missing("G1 desk check");
  Timer timer;
  const auto J = load_gset(*path);
  const auto d = eigendecompose(J);
  SimCimConfig cfg;
  cfg.learning_rate = find_learning_rate(J, d, cfg, split_seed(202, {stream::lr_test})).learning_rate;
  double best = 0;
  for (int b = 0; b < 30; ++b)
    best = std::max<double>(
        best, run_batch(J, d, LinearSchedule{}, cfg, split_seed(202, {stream::simcim, std::uint64_t(b)}))
                  .cuts.maxCoeff());
  const double floor = 0.998 * 11624;
  return {best >= floor ? Status::pass : Status::fail,
          "G1 linear schedule, best of 30 batches: " + fmt(best) + " (need >= " + fmt(floor) +
              ", ratio " + fmt(best / 11624) + ")",
          {"mu " + fmt(cfg.learning_rate), runtime(timer, 1200)}};
}

Verdict criterion_3(const Options&) {
  std::mt19937_64 rng(303);
  double worst = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    // boards filled batch by batch with eviction, like training
    const std::size_t capacity = 1 + rng() % 640;
    const int spread = 1 + int(rng() % 40);
    const double q = rep % 2 ? 99.0 : 1.0 + double(rng() % 99);
    Leaderboard board(capacity);
    const std::size_t batches = 1 + rng() % 6, batch = 1 + rng() % 256;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<double> cuts(batch);
      for (auto& c : cuts) c = 1000.0 + double(rng() % spread);
      board.push(cuts);
    }
    const auto r = r3_window_rewards(board, q);
    worst = std::max(worst, std::abs(std::accumulate(r.begin(), r.end(), 0.0) / double(r.size())));
  }
  return {worst <= 1e-9 ? Status::pass : Status::fail,
          "R3 window mean over 1000 random leaderboards: max |mean| = " + fmt(worst, 3) +
              " (need <= 1e-9)",
          {}};
}

Verdict criterion_4(const Options& o) {
  const auto residuals = [](const CouplingMatrix<double>& J) {
    const auto d = eigendecompose(J);
    const Eigen::MatrixXd& Q = d.vectors;
    const double rec =
        (Q * d.values.asDiagonal() * Q.transpose() - J.values()).norm() / J.values().norm();
    const double orth =
        (Q.transpose() * Q - Eigen::MatrixXd::Identity(J.size(), J.size())).cwiseAbs().maxCoeff();
    return std::make_pair(rec, orth);
  };
  const auto path = find_g1(o);
  if (!path) {
    auto v = g1_missing("spectral correctness on G1");
    const auto [rec, orth] =
        residuals(generate_erdos_renyi<double>(800, 0.06, WeightMode::unit, 404));
    v.details.push_back("informational stand-in, ER(800, 0.06): relative reconstruction " +
                        fmt(rec, 3) + ", orthogonality " + fmt(orth, 3));
    return v;
  }
  const auto [rec, orth] = residuals(load_gset(*path));
  return {rec <= 1e-8 && orth <= 1e-8 ? Status::pass : Status::fail,
          "G1 eigendecomposition: ||Q L Q^T - J||_F / ||J||_F = " + fmt(rec, 3) +
              ", max |Q^T Q - I| = " + fmt(orth, 3) + " (both need <= 1e-8)",
          {}};
}

double gradient_error(NetworkParameters p, const Eigen::MatrixXd& obs, const Eigen::VectorXi& act,
                      const Eigen::VectorXd& old_logp, const Eigen::VectorXd& adv,
                      const Eigen::VectorXd& ret, const Eigen::VectorXd& phi,
                      const PpoConfig& cfg) {
  NetworkParameters grad(p.shape());
  ppo_loss(p, obs, act, old_logp, adv, ret, phi, cfg, &grad);
  const double h = 1e-5;
  double worst = 0;
  for (Index i = 0; i < p.values().size(); ++i) {
    const double keep = p.values()[i];
    p.values()[i] = keep + h;
    const double up = ppo_loss(p, obs, act, old_logp, adv, ret, phi, cfg).total;
    p.values()[i] = keep - h;
    const double down = ppo_loss(p, obs, act, old_logp, adv, ret, phi, cfg).total;
    p.values()[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double analytic = grad.values()[i];
    worst = std::max(worst, std::abs(numeric - analytic) /
                                std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
  }
  return worst;
}

Verdict criterion_5(const Options&) {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  const int trials = 20;
  std::vector<std::string> details;
  for (int t = 0; t < trials; ++t) {
    const NetworkShape shape{Index(3 + rng() % 8), Index(4 + rng() % 9), Index(2 + rng() % 7),
                             t % 2 == 0, kActionCount};
    auto p = initialize_network(shape, rng());
    for (Index i = 0; i < p.values().size(); ++i) p.values()[i] += 0.3 * g(rng);
    const Index count = 6 + Index(rng() % 11);
    Eigen::MatrixXd obs(shape.input, count);
    for (Index i = 0; i < obs.size(); ++i) obs.data()[i] = g(rng);
    Eigen::VectorXd phi(shape.features);
    for (Index i = 0; i < phi.size(); ++i) phi[i] = 0.1 + 0.2 * std::abs(g(rng));
    const Eigen::MatrixXd logp = actor_forward(p, obs, phi).probs.array().log().matrix();
    Eigen::VectorXi act(count);
    Eigen::VectorXd old_logp(count), adv(count), ret(count);
    // ratios inside the clip range and well outside it, away from the kinks
    const double offsets[] = {0.05, -0.1, 0.5, -0.6, 0.0};
    for (Index j = 0; j < count; ++j) {
      act[j] = int(rng() % kActionCount);
      old_logp[j] = logp(act[j], j) + offsets[j % 5];
      adv[j] = u(rng);
      ret[j] = u(rng);
    }
    const double e = gradient_error(p, obs, act, old_logp, adv, ret, phi, PpoConfig{});
    worst = std::max(worst, e);
    details.push_back("shape in=" + std::to_string(shape.input) + " hidden=" +
                      std::to_string(shape.hidden) + " features=" +
                      std::to_string(shape.features) + " film=" + (shape.film ? "on" : "off") +
                      " samples=" + std::to_string(count) + ": " + fmt(e, 3));
  }
  return {worst <= 1e-4 ? Status::pass : Status::fail,
          "PPO gradient vs central differences on " + std::to_string(trials) +
              " random shapes: max relative error " + fmt(worst, 3) + " (need <= 1e-4)",
          details};
}

// ---- shared pretraining for criteria 6 and 7

constexpr Index kPretrainN = 60;
constexpr double kPretrainP = 0.06;
constexpr Index kPretrainInstances = 300;
constexpr Index kPretrainBatch = 64;
constexpr std::uint64_t kPretrainSeed = 606;

const char* kCacheKey = "simcim pretrain v1 n=60 p=0.06 unit instances=300 B=64 hidden=256 seed=606";

PretrainConfig pretrain_config() {
  PretrainConfig cfg;
  cfg.env.simcim.batch_size = kPretrainBatch;
  return cfg;
}

NetworkShape pretrain_shape() { return {kPretrainN + 2, 256, kPretrainN, true, kActionCount}; }

struct Pretrained {
  NetworkParameters network;
  std::vector<UpdateRecord> history;
  double seconds = 0;  // 0 when loaded from the cache
};

std::vector<UpdateRecord> read_history(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream s(line);
    std::string f;
    while (std::getline(s, f, ',')) header.push_back(f);
  }
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("history: missing column " + name);
    return std::size_t(it - header.begin());
  };
  const auto c_update = col("update"), c_reward = col("mean_reward"),
             c_above = col("fraction_above"), c_max = col("batch_max"),
             c_median = col("batch_median");
  std::vector<UpdateRecord> out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream s(line);
    std::string x;
    while (std::getline(s, x, ',')) f.push_back(x);
    UpdateRecord r;
    r.update = std::stoll(f.at(c_update));
    r.mean_reward = std::stod(f.at(c_reward));
    r.fraction_above = std::stod(f.at(c_above));
    r.batch_max = std::stod(f.at(c_max));
    r.batch_median = std::stod(f.at(c_median));
    out.push_back(r);
  }
  return out;
}

Pretrained ensure_pretrained(const Options& o, std::ostream& log) {
  const auto key = o.cache / "pretrain.key", ckpt = o.cache / "agent.ckpt",
             hist = o.cache / "history.csv";
  if (fs::exists(key) && fs::exists(ckpt) && fs::exists(hist)) {
    std::ifstream k(key);
    std::string stored;
    std::getline(k, stored);
    if (stored == kCacheKey) return {load_checkpoint(ckpt.string()), read_history(hist), 0};
  }
  fs::create_directories(o.cache);
  log << "  pretraining " << kPretrainInstances << " instances (n=60, B=64); cache "
      << o.cache.string() << std::endl;
  Timer timer;
  std::ofstream csv(hist);
  write_update_header(csv);
  const auto result = pretrain(
      AgentParameters(initialize_network(pretrain_shape(), kPretrainSeed)), pretrain_config(),
      erdos_renyi_generator(kPretrainN, kPretrainP, WeightMode::unit), kPretrainInstances,
      kPretrainSeed, [&](const UpdateRecord& r, const AgentParameters&) {
        write_update_row(csv, r);
        csv.flush();
        if ((r.update + 1) % 50 == 0)
          log << "  instance " << r.update + 1 << "/" << kPretrainInstances << "  "
              << fmt(timer.seconds(), 4) << " s" << std::endl;
      });
  csv.close();
  save_checkpoint(result.agent.network, ckpt.string());
  std::ofstream(key) << kCacheKey << '\n';
  return {result.agent.network, result.history, timer.seconds()};
}

double mean_of(const std::vector<UpdateRecord>& h, std::size_t from, std::size_t to,
               double UpdateRecord::*field) {
  double s = 0;
  for (std::size_t i = from; i < to; ++i) s += h[i].*field;
  return s / double(to - from);
}

double slope_of(const std::vector<UpdateRecord>& h, double UpdateRecord::*field) {
  const double n = double(h.size()), mx = (n - 1) / 2;
  double my = 0;
  for (const auto& r : h) my += r.*field;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sxy += (double(i) - mx) * (h[i].*field - my);
    sxx += (double(i) - mx) * (double(i) - mx);
  }
  return sxy / sxx;
}

// median batch cut of sampled rollouts on fixed unseen instances
double probe_median(const NetworkParameters& net) {
  double total = 0;
  const auto cfg = pretrain_config();
  for (std::uint64_t i = 0; i < 4; ++i) {
    auto ctx = make_context(
        generate_erdos_renyi<double>(kPretrainN, kPretrainP, WeightMode::unit,
                                     split_seed(6161, {stream::generator, i})),
        cfg.env.simcim, std::size_t(kPretrainBatch), split_seed(6161, {stream::lr_test, i}));
    const auto r = rollout(net, ctx, cfg.env, split_seed(6161, {stream::policy, i}));
    total += median(std::span<const double>(r.outcome.cuts.data(), std::size_t(r.outcome.cuts.size())));
  }
  return total / 4;
}

Verdict criterion_6(const Options& o) {
  Timer timer;
  const auto pre = ensure_pretrained(o, std::cout);
  const auto& h = pre.history;
  if (h.size() != std::size_t(kPretrainInstances))
    return {Status::fail, "pretraining history has " + std::to_string(h.size()) + " rows", {}};
  const auto reward = &UpdateRecord::mean_reward;
  const auto above = &UpdateRecord::fraction_above;
  const double first = mean_of(h, 0, 50, reward), last = mean_of(h, 250, 300, reward);
  // values within 1e-9 count as equal: that is the resolution of the R3 zero-mean property
  const bool reward_up = last - first > 1e-9;
  const double above_first = mean_of(h, 0, 50, above), above_last = mean_of(h, 250, 300, above);
  const double above_slope = slope_of(h, above);
  const bool above_up = above_slope > 0 && above_last > above_first;
  double max_abs = 0;
  for (const auto& r : h) max_abs = std::max(max_abs, std::abs(r.mean_reward));
  const double norm_first = mean_of(h, 0, 50, &UpdateRecord::batch_median) /
                            mean_of(h, 0, 50, &UpdateRecord::batch_max);
  const double norm_last = mean_of(h, 250, 300, &UpdateRecord::batch_median) /
                           mean_of(h, 250, 300, &UpdateRecord::batch_max);

  Verdict v{reward_up && above_up ? Status::pass : Status::fail,
            "pretraining progress: mean R3 first 50 = " + fmt(first, 3) + ", last 50 = " +
                fmt(last, 3) + " (need last > first); fraction above percentile first 50 = " +
                fmt(above_first, 3) + ", last 50 = " + fmt(above_last, 3) + ", slope " +
                fmt(above_slope, 3) + " (need upward)",
            {}};
  v.details.push_back("max |batch mean R3| over all 300 instances: " + fmt(max_abs, 3));
  v.details.push_back(
      "each instance gets one batch and a fresh leaderboard of capacity B, so the window is "
      "exactly the batch and R3 averages to zero by construction; with q = 99 the percentile is "
      "the batch maximum, so no episode is ever strictly above it");
  v.details.push_back("diagnostic, batch median / batch max: first 50 = " + fmt(norm_first) +
                      ", last 50 = " + fmt(norm_last));
  const double before = probe_median(initialize_network(pretrain_shape(), kPretrainSeed));
  const double after = probe_median(pre.network);
  v.details.push_back("diagnostic, mean batch median on 4 unseen instances: initial agent " +
                      fmt(before) + ", pretrained agent " + fmt(after));
  if (pre.seconds > 0) v.details.push_back("pretraining " + fmt(pre.seconds, 4) + " s");
  v.details.push_back(runtime(timer, 1800));
  return v;
}

Verdict criterion_7(const Options& o) {
  Timer timer;
  const auto pre = ensure_pretrained(o, std::cout);
  // same distribution as pretraining, seed outside the pretraining stream
  const auto J = generate_erdos_renyi<double>(kPretrainN, kPretrainP, WeightMode::unit,
                                              split_seed(707, {stream::generator}));
  const auto gen = erdos_renyi_generator(kPretrainN, kPretrainP, WeightMode::unit);
  for (Index i = 0; i < kPretrainInstances; ++i)
    if (gen(i, split_seed(kPretrainSeed, {stream::generator, std::uint64_t(i)})).values() ==
        J.values())
      return {Status::fail, "held-out instance collides with pretraining instance " +
                                std::to_string(i), {}};
  FinetuneConfig cfg;
  cfg.env.simcim.batch_size = kPretrainBatch;
  const std::uint64_t seed = 7070;
  const auto agent0 = finetune(AgentParameters(pre.network), J, cfg, 0, seed);
  const auto agent100 = finetune(AgentParameters(pre.network), J, cfg, 100, seed);
  const double m0 = agent0.final_stats.median, m100 = agent100.final_stats.median;
  return {m100 > m0 ? Status::pass : Status::fail,
          "fine-tuning on held-out ER(60, 0.06): median Agent-0 = " + fmt(m0) +
              ", Agent-100 = " + fmt(m100) + " (need Agent-100 > Agent-0)",
          {"max Agent-0 = " + fmt(agent0.final_stats.max) + ", Agent-100 = " +
               fmt(agent100.final_stats.max) + ", best seen while fine-tuning " +
               fmt(agent100.best_cut),
           "probability of batch max: Agent-0 " + fmt(agent0.final_stats.probability) +
               ", Agent-100 " + fmt(agent100.final_stats.probability),
           "SimCIM mu " + fmt(agent100.learning_rate), runtime(timer, 1800)}};
}

Verdict criterion_8(const Options&) {
  Timer timer;
  // sum x_i^2 with x = -2 + 5u: the minimizer u = 0.4 is interior and off-center
  const auto sphere = [](const Eigen::VectorXd& u) {
    return (-2.0 + 5.0 * u.array()).square().sum();
  };
  double worst = 0;
  int evaluations = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = cmaes_minimize(sphere, 3, CmaesConfig{}, seed);
    worst = std::max(worst, r.best_value);
    evaluations = std::max(evaluations, r.evaluations);
  }
  const auto J = generate_erdos_renyi<double>(16, 0.3, WeightMode::unit, 1234);
  const auto d = eigendecompose(J);
  const double optimum = brute_force_max_cut(J).cut;
  SimCimConfig sim;
  sim.learning_rate = find_learning_rate(J, d, sim, split_seed(808, {stream::lr_test})).learning_rate;
  const auto t = tune_tanh(J, d, CmaesConfig{}, sim, 808, std::llround(optimum));
  const bool ok = worst <= 1e-6 && evaluations <= 500 && t.fresh.max == optimum;
  return {ok ? Status::pass : Status::fail,
          "CMA-ES: worst sphere value over 10 seeds " + fmt(worst, 3) + " in <= " +
              std::to_string(evaluations) + " evaluations (need <= 1e-6 within 500); n=16 fresh "
              "batch max " + fmt(t.fresh.max) + " vs optimum " + fmt(optimum),
          {"selected O=" + fmt(t.params.scale) + " S=" + fmt(t.params.slope) +
               " D=" + fmt(t.params.shift) + ", fresh-batch probability " +
               fmt(t.fresh.probability),
           runtime(timer, 600)}};
}

Verdict criterion_9(const Options&) {
  const auto J = generate_erdos_renyi<double>(40, 0.2, WeightMode::unit, 909);
  const auto d = eigendecompose(J);
  EnvConfig cfg;
  cfg.simcim.batch_size = 8;
  Environment env(J, d, cfg);
  env.reset(909);
  const std::vector<int> hold(8, int(Action::hold));
  while (!env.done()) env.step(hold);
  const auto& a = env.anchors();
  Index mismatches = 0;
  double max_interp = 0;
  for (Index k = 0; k < a.rows(); ++k)
    for (Index b = 0; b < a.cols(); ++b) {
      if (a(k, b) != linear_pbar(k * cfg.interval, cfg.iterations())) ++mismatches;
      if (k + 1 < a.rows())
        for (Index j = 0; j < cfg.interval; ++j)
          max_interp = std::max(
              max_interp, std::abs(interpolate(a(k, b), a(k + 1, b), j, cfg.interval) -
                                   linear_pbar(k * cfg.interval + j, cfg.iterations())));
    }
  return {mismatches == 0 ? Status::pass : Status::fail,
          "zero-action anchors vs linear schedule: " + std::to_string(mismatches) + " of " +
              std::to_string(a.size()) + " anchors differ (need exact equality)",
          {"between anchors, max |interpolated - linear| = " + fmt(max_interp, 3)}};
}

using Criterion = Verdict (*)(const Options&);
const Criterion kCriteria[] = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                               criterion_6, criterion_7, criterion_8, criterion_9};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the SimCIM / RL schedule controller", "simcim_acceptance"};
  Options options;
  std::vector<int> selected;
  bool pretrain_only = false;
  app.add_option("-c,--criterion", selected, "criteria to run (default: all)")
      ->check(CLI::Range(1, 9));
  app.add_option("--cache", options.cache, "directory for the shared pretrained agent");
  app.add_option("--g1", options.g1, "path to the Gset G1 file");
  app.add_flag("--pretrain", pretrain_only, "only build the pretraining cache");
  CLI11_PARSE(app, argc, argv);

  if (pretrain_only) {
    Timer timer;
    const auto pre = ensure_pretrained(options, std::cout);
    std::cout << "pretraining cache ready: " << pre.history.size() << " instances ("
              << fmt(timer.seconds(), 4) << " s)\n";
    return 0;
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  int failed = 0, skipped = 0;
  for (int k : selected) {
    Verdict v;
    try {
      v = kCriteria[k - 1](options);
    } catch (const std::exception& e) {
      v = {Status::fail, std::string("exception: ") + e.what(), {}};
    }
    const char* tag = v.status == Status::pass ? "PASS" : v.status == Status::fail ? "FAIL" : "SKIP";
    std::cout << "criterion " << k << " " << tag << "  " << v.summary << '\n';
    for (const auto& d : v.details) std::cout << "    " << d << '\n';
    std::cout.flush();
    failed += v.status == Status::fail;
    skipped += v.status == Status::skip;
  }
  if (failed) return 1;
  return skipped == int(selected.size()) ? 77 : 0;
}
