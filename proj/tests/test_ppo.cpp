#include "simcim/agent.hpp"

#include <doctest.h>

#include <random>

using namespace simcim;

namespace {

struct Samples {
  Eigen::MatrixXd obs;
  Eigen::VectorXi actions;
  Eigen::VectorXd old_logp, adv, ret, phi;
};

NetworkParameters random_network(const NetworkShape& shape, std::uint64_t seed) {
  auto p = initialize_network(shape, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> g(0.0, 0.3);
  for (Index i = 0; i < p.values().size(); ++i) p.values()[i] += g(rng);
  return p;
}

Eigen::MatrixXd log_probs(const NetworkParameters& p, const Samples& s) {
  return actor_forward(p, s.obs, s.phi).probs.array().log().matrix();
}

// old log-probs offset from the current ones so that some ratios sit inside
// the clip range and some well outside it, none near a kink
Samples random_samples(const NetworkParameters& p, Index count, std::uint64_t seed) {
  const auto& shape = p.shape();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> act(0, int(shape.actions) - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Samples s;
  s.obs.resize(shape.input, count);
  for (Index j = 0; j < count; ++j)
    for (Index i = 0; i < shape.input; ++i) s.obs(i, j) = g(rng);
  s.phi.resize(shape.features);
  for (Index i = 0; i < shape.features; ++i) s.phi[i] = 0.1 + 0.2 * std::abs(g(rng));
  s.actions.resize(count);
  s.old_logp.resize(count);
  s.adv.resize(count);
  s.ret.resize(count);
  const Eigen::MatrixXd lp = log_probs(p, s);
  const double offsets[] = {0.05, -0.1, 0.5, -0.6, 0.0};
  for (Index j = 0; j < count; ++j) {
    s.actions[j] = act(rng);
    s.old_logp[j] = lp(s.actions[j], j) + offsets[j % 5];
    s.adv[j] = u(rng);
    s.ret[j] = u(rng);
  }
  return s;
}

double loss(const NetworkParameters& p, const Samples& s, const PpoConfig& cfg) {
  return ppo_loss(p, s.obs, s.actions, s.old_logp, s.adv, s.ret, s.phi, cfg).total;
}

// max over components of |analytic - numeric| / max(|analytic|, |numeric|, floor)
double gradient_relative_error(NetworkParameters p, const Samples& s, const PpoConfig& cfg) {
  NetworkParameters grad(p.shape());
  ppo_loss(p, s.obs, s.actions, s.old_logp, s.adv, s.ret, s.phi, cfg, &grad);
  const double h = 1e-5;
  double worst = 0.0;
  for (Index i = 0; i < p.values().size(); ++i) {
    const double keep = p.values()[i];
    p.values()[i] = keep + h;
    const double up = loss(p, s, cfg);
    p.values()[i] = keep - h;
    const double down = loss(p, s, cfg);
    p.values()[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad.values()[i];
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("PPO loss gradient matches central differences") {
  PpoConfig cfg;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (bool film : {true, false}) {
      CAPTURE(seed);
      CAPTURE(film);
      const auto p = random_network({6, 8, 4, film, 3}, seed);
      const auto s = random_samples(p, 10, seed * 7);
      CHECK(gradient_relative_error(p, s, cfg) <= 1e-4);
    }
  }
}

TEST_CASE("gradient terms are checked one at a time") {
  const auto p = random_network({6, 8, 4, true, 3}, 11);
  const auto s = random_samples(p, 10, 12);
  PpoConfig policy_only, value_only, entropy_only;
  policy_only.value_weight = 0.0;
  policy_only.entropy_weight = 0.0;
  value_only.entropy_weight = 0.0;
  value_only.value_weight = 1.0;
  entropy_only.value_weight = 0.0;
  entropy_only.entropy_weight = 1.0;
  Samples no_adv = s;
  no_adv.adv.setZero();
  CHECK(gradient_relative_error(p, s, policy_only) <= 1e-4);
  CHECK(gradient_relative_error(p, no_adv, value_only) <= 1e-4);
  CHECK(gradient_relative_error(p, no_adv, entropy_only) <= 1e-4);
}

TEST_CASE("clipped ratios beyond the bound in the advantage direction get no gradient") {
  const auto p = random_network({6, 8, 4, true, 3}, 21);
  PpoConfig cfg;
  cfg.value_weight = 0.0;
  cfg.entropy_weight = 0.0;
  const auto base = random_samples(p, 1, 22);
  const double eps = cfg.clip;
  const Eigen::MatrixXd lp = log_probs(p, base);
  const double current = lp(base.actions[0], 0);
  struct Case {
    double ratio, adv;
    bool expect_gradient;
  };
  const Case cases[] = {
      {1.0, 1.0, true},   {1.1, 1.0, true},  {0.9, -1.0, true},   // inside the band
      {1.5, 1.0, false},  {0.5, -1.0, false},                     // clipped branch is the min
      {0.5, 1.0, true},   {1.5, -1.0, true},                      // unclipped branch is the min
  };
  for (const auto& c : cases) {
    CAPTURE(c.ratio);
    CAPTURE(c.adv);
    Samples s = base;
    s.old_logp[0] = current - std::log(c.ratio);
    s.adv[0] = c.adv;
    NetworkParameters grad(p.shape());
    const auto t = ppo_loss(p, s.obs, s.actions, s.old_logp, s.adv, s.ret, s.phi, cfg, &grad);
    const bool has_gradient = grad.values().norm() > 0.0;
    CHECK(has_gradient == c.expect_gradient);
    const bool inside = c.ratio >= 1.0 - eps && c.ratio <= 1.0 + eps;
    CHECK(t.clip_fraction == (inside ? 0.0 : 1.0));
    // any ratio that receives gradient while outside the band is moving back toward it
    if (has_gradient && !inside) CHECK((c.ratio - 1.0) * c.adv < 0.0);
  }
}

namespace {

TrajectoryBatch batch_from(const NetworkParameters& p, const Samples& s, Index steps,
                           Index episodes) {
  TrajectoryBatch b;
  b.steps = steps;
  b.episodes = episodes;
  b.observations = s.obs;
  b.actions = s.actions;
  b.log_probs.resize(s.obs.cols());
  const Eigen::MatrixXd lp = log_probs(p, s);
  for (Index j = 0; j < s.obs.cols(); ++j) b.log_probs[j] = lp(s.actions[j], j);
  b.values = critic_forward(p, s.obs).transpose();
  b.terminal_rewards = Eigen::VectorXd::Zero(episodes);
  b.final_cuts = Eigen::VectorXd::Zero(episodes);
  return b;
}

}  // namespace

TEST_CASE("returns are the terminal reward and intermediate rewards are zero") {
  TrajectoryBatch b;
  b.steps = 4;
  b.episodes = 3;
  b.terminal_rewards = Eigen::Vector3d(0.99, -0.01, 0.3);
  const auto r = b.returns(1.0);
  for (Index k = 0; k < 4; ++k)
    for (Index e = 0; e < 3; ++e) {
      CHECK(r[k * 3 + e] == b.terminal_rewards[e]);
      CHECK(b.reward(k, e) == (k == 3 ? b.terminal_rewards[e] : 0.0));
    }
  const auto discounted = b.returns(0.5);
  CHECK(discounted[0] == doctest::Approx(0.99 * 0.125));
}

TEST_CASE("no signal and no entropy bonus leaves parameters unchanged") {
  AgentParameters agent(random_network({6, 8, 4, true, 3}, 31));
  const auto s = random_samples(agent.network, 12, 32);
  TrajectoryBatch b = batch_from(agent.network, s, 4, 3);
  // a constant critic that already predicts the return: zero advantage, zero value error
  agent.network.block("critic.w3").setZero();
  agent.network.block("critic.b3").setConstant(0.25);
  b.terminal_rewards.setConstant(0.25);
  b.values.setConstant(0.25);
  PpoConfig cfg;
  cfg.entropy_weight = 0.0;
  const Eigen::VectorXd before = agent.network.values();
  ppo_update(agent, b, s.phi, cfg, 1);
  CHECK((agent.network.values() - before).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("entropy drift alone changes only the actor") {
  AgentParameters agent(random_network({6, 8, 4, true, 3}, 33));
  const auto s = random_samples(agent.network, 12, 34);
  TrajectoryBatch b = batch_from(agent.network, s, 4, 3);
  agent.network.block("critic.w3").setZero();
  agent.network.block("critic.b3").setConstant(0.0);
  b.values.setZero();
  const auto before = agent.network;
  ppo_update(agent, b, s.phi, PpoConfig{}, 1);
  CHECK(agent.network.block("actor.w1") != before.block("actor.w1"));
  CHECK(agent.network.block("critic.w1") == before.block("critic.w1"));
}

TEST_CASE("a positive advantage raises the taken action's probability") {
  AgentParameters agent(initialize_network({6, 8, 4, true, 3}, 41));
  const auto s = random_samples(agent.network, 1, 42);
  TrajectoryBatch b = batch_from(agent.network, s, 1, 1);
  b.terminal_rewards[0] = 1.0;
  b.values[0] = 0.0;
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  cfg.learning_rate = 1e-3;
  const double before = b.log_probs[0];
  ppo_update(agent, b, s.phi, cfg, 1);
  const double after = log_probs(agent.network, s)(s.actions[0], 0);
  CHECK(after > before);
}

TEST_CASE("non-finite losses are reported") {
  AgentParameters agent(initialize_network({6, 8, 4, true, 3}, 51));
  const auto s = random_samples(agent.network, 4, 52);
  TrajectoryBatch b = batch_from(agent.network, s, 2, 2);
  b.terminal_rewards[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ppo_update(agent, b, s.phi, PpoConfig{}, 1), std::runtime_error);
}

TEST_CASE("incomplete trajectories are rejected") {
  AgentParameters agent(initialize_network({6, 8, 4, true, 3}, 61));
  const auto s = random_samples(agent.network, 4, 62);
  TrajectoryBatch b = batch_from(agent.network, s, 2, 2);
  b.terminal_rewards.resize(0);
  CHECK_THROWS_AS(ppo_update(agent, b, s.phi, PpoConfig{}, 1), std::invalid_argument);
}

TEST_CASE("large signals report the pre-clip gradient norm") {
  AgentParameters agent(random_network({6, 8, 4, true, 3}, 71));
  const auto s = random_samples(agent.network, 8, 72);
  TrajectoryBatch b = batch_from(agent.network, s, 4, 2);
  b.terminal_rewards.setConstant(50.0);
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  const auto d = ppo_update(agent, b, s.phi, cfg, 1);
  CHECK(d.grad_norm > cfg.max_grad_norm);
  CHECK(d.optimizer_steps == 1);
  CHECK(agent.optimizer.steps == 1);
}

TEST_CASE("Adam first step moves each coordinate by about the step size") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  AdamState st;
  PpoConfig cfg;
  cfg.learning_rate = 0.1;
  adam_step(x, Eigen::Vector3d(2.0, -0.5, 0.0), st, cfg);
  CHECK(x[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(x[2] == 0.0);
}
