#include "simcim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace simcim {

void PpoConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("ppo: epochs must be non-negative");
  if (minibatches < 1) throw std::invalid_argument("ppo: minibatches must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma must lie in (0, 1]");
  if (!(clip > 0.0)) throw std::invalid_argument("ppo: clip ratio must be positive");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("ppo: learning rate must be >= 0");
  if (!(value_weight >= 0.0 && entropy_weight >= 0.0))
    throw std::invalid_argument("ppo: loss weights must be non-negative");
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const PpoConfig& config) {
  if (state.first.size() != params.size()) {
    state.first = Eigen::VectorXd::Zero(params.size());
    state.second = Eigen::VectorXd::Zero(params.size());
    state.steps = 0;
  }
  ++state.steps;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  state.first = b1 * state.first + (1.0 - b1) * grad;
  state.second = b2 * state.second + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, double(state.steps));
  const double c2 = 1.0 - std::pow(b2, double(state.steps));
  params.array() -= config.learning_rate * (state.first.array() / c1) /
                    ((state.second.array() / c2).sqrt() + config.adam_epsilon);
}

AgentParameters::AgentParameters(NetworkParameters net) : network(std::move(net)) {}

double TrajectoryBatch::reward(Index step, Index episode) const {
  return step == steps - 1 ? terminal_rewards[episode] : 0.0;
}

Eigen::VectorXd TrajectoryBatch::returns(double gamma) const {
  Eigen::VectorXd out(samples());
  for (Index k = 0; k < steps; ++k) {
    const double discount = std::pow(gamma, double(steps - 1 - k));
    out.segment(k * episodes, episodes) = discount * terminal_rewards;
  }
  return out;
}

void TrajectoryBatch::validate() const {
  const Index s = samples();
  if (steps < 1 || episodes < 1) throw std::invalid_argument("trajectories: empty batch");
  if (observations.cols() != s || actions.size() != s || log_probs.size() != s ||
      values.size() != s)
    throw std::invalid_argument("trajectories: per-step arrays have inconsistent sizes");
  if (terminal_rewards.size() != episodes || final_cuts.size() != episodes)
    throw std::invalid_argument("trajectories: episodes are not finalized");
}

namespace {

Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd shifted = logits.rowwise() - logits.colwise().maxCoeff();
  const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log().matrix();
  return shifted.rowwise() - lse;
}

}  // namespace

LossTerms ppo_loss(const NetworkParameters& params, const Eigen::MatrixXd& observations,
                   const Eigen::VectorXi& actions, const Eigen::VectorXd& old_log_probs,
                   const Eigen::VectorXd& advantages, const Eigen::VectorXd& returns,
                   const Eigen::VectorXd& phi, const PpoConfig& config,
                   NetworkParameters* grad) {
  const Index count = observations.cols();
  if (count == 0) throw std::invalid_argument("ppo_loss: no samples");
  if (actions.size() != count || old_log_probs.size() != count || advantages.size() != count ||
      returns.size() != count)
    throw std::invalid_argument("ppo_loss: sample arrays have inconsistent sizes");

  const ActorCache actor = actor_forward_cached(params, observations, phi);
  const CriticCache critic = critic_forward_cached(params, observations);
  const Eigen::MatrixXd logp = log_softmax(actor.out.logits);
  const Eigen::MatrixXd& probs = actor.out.probs;
  const double inv = 1.0 / double(count);
  const double eps = config.clip;

  LossTerms t;
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(probs.rows(), count);
  for (Index i = 0; i < count; ++i) {
    const int a = actions[i];
    if (a < 0 || a >= probs.rows()) throw std::invalid_argument("ppo_loss: invalid action");
    const double log_ratio = logp(a, i) - old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    t.policy -= std::min(unclipped, clipped) * inv;
    // the gradient flows only through the unclipped branch when it is the minimum
    const bool active = !((adv > 0.0 && ratio > 1.0 + eps) || (adv < 0.0 && ratio < 1.0 - eps));
    if (std::abs(ratio - 1.0) > eps) t.clip_fraction += inv;
    t.approx_kl += ((ratio - 1.0) - log_ratio) * inv;

    const double h = -(probs.col(i).array() * logp.col(i).array()).sum();
    t.entropy += h * inv;
    if (grad) {
      if (active) {
        const double coef = -unclipped * inv;
        dlogits.col(i) -= coef * probs.col(i);
        dlogits(a, i) += coef;
      }
      // loss carries -w * H and dH/dlogit_j = -pi_j (log pi_j + H)
      dlogits.col(i).array() +=
          config.entropy_weight * inv * probs.col(i).array() * (logp.col(i).array() + h);
    }
  }
  const Eigen::RowVectorXd diff = critic.values - returns.transpose();
  t.value = diff.squaredNorm() * inv;
  t.total = t.policy + config.value_weight * t.value - config.entropy_weight * t.entropy;

  if (grad) {
    actor_backward(params, actor, observations, phi, dlogits, *grad);
    const Eigen::RowVectorXd dvalues = (2.0 * config.value_weight * inv) * diff;
    critic_backward(params, critic, observations, dvalues, *grad);
  }
  return t;
}

PpoDiagnostics ppo_update(AgentParameters& agent, const TrajectoryBatch& batch,
                          const Eigen::VectorXd& phi, const PpoConfig& config,
                          std::uint64_t seed) {
  config.validate();
  batch.validate();
  const Index total = batch.samples();
  const Eigen::VectorXd returns = batch.returns(config.gamma);
  const Eigen::VectorXd advantages = returns - batch.values;

  Engine rng(split_seed(seed, {stream::ppo}));
  std::vector<Index> order(total);
  std::iota(order.begin(), order.end(), Index{0});
  const Index chunks = std::min<Index>(config.minibatches, total);

  PpoDiagnostics d;
  NetworkParameters grad(agent.network.shape());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index c = 0; c < chunks; ++c) {
      const Index begin = c * total / chunks, end = (c + 1) * total / chunks;
      const Index size = end - begin;
      Eigen::MatrixXd obs(batch.observations.rows(), size);
      Eigen::VectorXi act(size);
      Eigen::VectorXd old(size), adv(size), ret(size);
      for (Index j = 0; j < size; ++j) {
        const Index s = order[begin + j];
        obs.col(j) = batch.observations.col(s);
        act[j] = batch.actions[s];
        old[j] = batch.log_probs[s];
        adv[j] = advantages[s];
        ret[j] = returns[s];
      }
      grad.set_zero();
      const LossTerms t =
          ppo_loss(agent.network, obs, act, old, adv, ret, phi, config, &grad);
      const double norm = grad.values().norm();
      if (!std::isfinite(t.total) || !std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss at epoch " << epoch << ", minibatch " << c
            << " (policy " << t.policy << ", value " << t.value << ", entropy " << t.entropy
            << ", grad norm " << norm << ", parameter norm " << agent.network.values().norm()
            << ", max |advantage| " << adv.cwiseAbs().maxCoeff() << ")";
        throw std::runtime_error(msg.str());
      }
      if (config.max_grad_norm > 0.0 && norm > config.max_grad_norm)
        grad.values() *= config.max_grad_norm / norm;
      adam_step(agent.network.values(), grad.values(), agent.optimizer, config);

      d.policy_loss += t.policy;
      d.value_loss += t.value;
      d.entropy += t.entropy;
      d.clip_fraction += t.clip_fraction;
      d.approx_kl += t.approx_kl;
      d.grad_norm += norm;
      ++d.optimizer_steps;
    }
  }
  if (d.optimizer_steps > 0) {
    const double k = d.optimizer_steps;
    d.policy_loss /= k;
    d.value_loss /= k;
    d.entropy /= k;
    d.clip_fraction /= k;
    d.approx_kl /= k;
    d.grad_norm /= k;
  }
  return d;
}

ProblemContext make_context(CouplingMatrix<double> matrix, const SimCimConfig& simcim,
                            std::size_t board_capacity, std::uint64_t seed,
                            const ContextOptions& options,
                            std::optional<SpectralDecomposition<double>> decomp) {
  SpectralDecomposition<double> d = decomp ? std::move(*decomp) : eigendecompose(matrix);
  if (d.size() != matrix.size())
    throw std::invalid_argument("make_context: decomposition does not match matrix");
  Eigen::VectorXd phi = problem_features(d);
  const double mu =
      options.tune_learning_rate
          ? find_learning_rate(matrix, d, simcim, split_seed(seed, {stream::lr_test}),
                               options.lr_test)
                .learning_rate
          : simcim.learning_rate;
  return {std::move(matrix), std::move(d), std::move(phi), mu, Leaderboard(board_capacity)};
}

Rollout rollout(const NetworkParameters& params, ProblemContext& context, EnvConfig env,
                std::uint64_t seed, ActionSelection selection) {
  env.simcim.learning_rate = context.learning_rate;
  Environment environment(context.matrix, context.decomp, env);
  Engine policy_rng(split_seed(seed, {stream::policy}));
  Engine reward_rng(split_seed(seed, {stream::rewards}));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const Index steps = env.steps_per_episode(), batch = env.batch();
  Rollout out;
  TrajectoryBatch& traj = out.trajectories;
  traj.steps = steps;
  traj.episodes = batch;
  traj.observations.resize(environment.observation_size(), steps * batch);
  traj.actions.resize(steps * batch);
  traj.log_probs.resize(steps * batch);
  traj.values.resize(steps * batch);

  Eigen::MatrixXd obs = environment.reset(split_seed(seed, {stream::simcim}));
  std::vector<int> actions(batch);
  for (Index k = 0; k < steps; ++k) {
    const ActorOutput policy = actor_forward(params, obs, context.phi);
    const Eigen::MatrixXd logp = log_softmax(policy.logits);
    traj.values.segment(k * batch, batch) = critic_forward(params, obs).transpose();
    traj.observations.middleCols(k * batch, batch) = obs;
    for (Index b = 0; b < batch; ++b) {
      Index a = 0;
      if (selection == ActionSelection::greedy) {
        policy.probs.col(b).maxCoeff(&a);
      } else {
        double u = uniform(policy_rng), acc = 0.0;
        a = policy.probs.rows() - 1;
        for (Index j = 0; j < policy.probs.rows(); ++j) {
          acc += policy.probs(j, b);
          if (u < acc) {
            a = j;
            break;
          }
        }
      }
      actions[b] = static_cast<int>(a);
      traj.actions[k * batch + b] = static_cast<int>(a);
      traj.log_probs[k * batch + b] = logp(a, b);
    }
    obs = environment.step(actions);
  }
  out.outcome = environment.finalize(context.board, reward_rng);
  out.anchors = environment.anchors();
  traj.terminal_rewards = out.outcome.terminal_rewards;
  traj.final_cuts = out.outcome.cuts;
  return out;
}

void write_update_header(std::ostream& out) {
  out << "update,learning_rate,mean_reward,fraction_above,threshold,batch_max,batch_median,"
         "best_cut,policy_loss,value_loss,entropy,clip_fraction,approx_kl,grad_norm\n";
}

void write_update_row(std::ostream& out, const UpdateRecord& r) {
  out << r.update << ',' << r.learning_rate << ',' << r.mean_reward << ',' << r.fraction_above
      << ',' << r.threshold << ',' << r.batch_max << ',' << r.batch_median << ',' << r.best_cut
      << ',' << r.ppo.policy_loss << ',' << r.ppo.value_loss << ',' << r.ppo.entropy << ','
      << r.ppo.clip_fraction << ',' << r.ppo.approx_kl << ',' << r.ppo.grad_norm << '\n';
}

InstanceGenerator erdos_renyi_generator(Index n, double connect_prob, WeightMode mode) {
  return [=](Index, std::uint64_t seed) {
    return generate_erdos_renyi<double>(n, connect_prob, mode, seed);
  };
}

namespace {

void check_shape(const NetworkParameters& net, Index n) {
  const auto& s = net.shape();
  if (s.input != n + 2 || (s.film && s.features != n))
    throw std::invalid_argument("network was built for n = " + std::to_string(s.input - 2) +
                                " but the instance has n = " + std::to_string(n));
}

UpdateRecord summarize(const Rollout& r, double mu, Index update) {
  UpdateRecord rec;
  rec.update = update;
  rec.learning_rate = mu;
  const Eigen::VectorXd& cuts = r.outcome.cuts;
  rec.mean_reward = r.outcome.terminal_rewards.mean();
  rec.threshold = r.outcome.threshold;
  rec.fraction_above = double((cuts.array() > rec.threshold).count()) / double(cuts.size());
  rec.batch_max = cuts.maxCoeff();
  rec.batch_median = median(std::span<const double>(cuts.data(), std::size_t(cuts.size())));
  return rec;
}

}  // namespace

PretrainResult pretrain(AgentParameters agent, const PretrainConfig& config,
                        const InstanceGenerator& generator, Index num_instances,
                        std::uint64_t seed, const UpdateCallback& callback) {
  config.env.validate();
  config.ppo.validate();
  PretrainResult out{std::move(agent), {}};
  for (Index i = 0; i < num_instances; ++i) {
    auto matrix = generator(i, split_seed(seed, {stream::generator, std::uint64_t(i)}));
    check_shape(out.agent.network, matrix.size());
    ProblemContext ctx =
        make_context(std::move(matrix), config.env.simcim, std::size_t(config.env.batch()),
                     split_seed(seed, {std::uint64_t(i)}), config.context);
    const Rollout r = rollout(out.agent.network, ctx, config.env,
                              split_seed(seed, {stream::simcim, std::uint64_t(i)}));
    UpdateRecord rec = summarize(r, ctx.learning_rate, i);
    rec.best_cut = rec.batch_max;
    rec.ppo = ppo_update(out.agent, r.trajectories, ctx.phi, config.ppo,
                         split_seed(seed, {stream::ppo, std::uint64_t(i)}));
    out.history.push_back(rec);
    if (callback) callback(rec, out.agent);
  }
  return out;
}

FinetuneResult finetune(AgentParameters agent, const CouplingMatrix<double>& matrix,
                        const FinetuneConfig& config, Index num_updates, std::uint64_t seed,
                        std::optional<long long> best_known,
                        std::optional<SpectralDecomposition<double>> decomp,
                        const UpdateCallback& callback) {
  config.env.validate();
  config.ppo.validate();
  if (config.board_batches < 1) throw std::invalid_argument("finetune: board size must be >= 1");
  check_shape(agent.network, matrix.size());
  ProblemContext ctx =
      make_context(matrix, config.env.simcim, config.board_batches * std::size_t(config.env.batch()),
                   seed, config.context, std::move(decomp));

  FinetuneResult out{std::move(agent), {}, 0.0, {}, {}, ctx.learning_rate};
  double best = -std::numeric_limits<double>::infinity();
  for (Index u = 0; u < num_updates; ++u) {
    const Rollout r = rollout(out.agent.network, ctx, config.env,
                              split_seed(seed, {stream::simcim, std::uint64_t(u)}));
    UpdateRecord rec = summarize(r, ctx.learning_rate, u);
    best = std::max(best, rec.batch_max);
    rec.best_cut = best;
    rec.ppo = ppo_update(out.agent, r.trajectories, ctx.phi, config.ppo,
                         split_seed(seed, {stream::ppo, std::uint64_t(u)}));
    out.history.push_back(rec);
    if (callback) callback(rec, out.agent);
  }

  // evaluation batch against a scratch board so training bookkeeping is untouched
  ProblemContext eval = ctx;
  const Rollout final_batch =
      rollout(out.agent.network, eval, config.env, split_seed(seed, {stream::evaluation}));
  out.final_cuts = final_batch.outcome.cuts;
  out.final_stats = evaluate_batch_stats(
      std::span<const double>(out.final_cuts.data(), std::size_t(out.final_cuts.size())),
      best_known);
  out.best_cut = std::max(best, out.final_stats.max);
  return out;
}

}  // namespace simcim
