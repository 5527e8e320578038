#pragma once

// PPO training of the regularization controller: trajectories, the clipped
// surrogate loss with exact gradients, Adam, and the pre-train / fine-tune
// loops.

#include "simcim/environment.hpp"
#include "simcim/network.hpp"
#include "simcim/stats.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace simcim {

struct PpoConfig {
  int epochs = 4;
  double gamma = 1.0;
  double clip = 0.2;
  double value_weight = 0.5;
  double entropy_weight = 0.01;
  double learning_rate = 3e-4;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  int minibatches = 4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  Eigen::VectorXd first, second;
  long long steps = 0;
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const PpoConfig& config);

/// Network plus optimizer state; the unit that pretrain/finetune pass along.
struct AgentParameters {
  NetworkParameters network;
  AdamState optimizer;

  explicit AgentParameters(NetworkParameters net);
};

/// Samples are stored step-major: column k * episodes + b is step k of episode b.
struct TrajectoryBatch {
  Index steps = 0;
  Index episodes = 0;
  Eigen::MatrixXd observations;  // (n + 2) x (steps * episodes)
  Eigen::VectorXi actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd terminal_rewards;  // per episode
  Eigen::VectorXd final_cuts;        // per episode

  Index samples() const noexcept { return steps * episodes; }
  /// Zero everywhere except the last step of each episode.
  double reward(Index step, Index episode) const;
  /// Discounted return from every sample.
  Eigen::VectorXd returns(double gamma) const;
  void validate() const;
};

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped-surrogate PPO loss over one set of samples (all columns of
/// `observations`). When `grad` is given, the exact gradient is added to it.
LossTerms ppo_loss(const NetworkParameters& params, const Eigen::MatrixXd& observations,
                   const Eigen::VectorXi& actions, const Eigen::VectorXd& old_log_probs,
                   const Eigen::VectorXd& advantages, const Eigen::VectorXd& returns,
                   const Eigen::VectorXd& phi, const PpoConfig& config,
                   NetworkParameters* grad = nullptr);

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;  // before clipping
  int optimizer_steps = 0;
};

/// `epochs` shuffled passes over the batch in `minibatches` chunks. Throws
/// std::runtime_error with a dump of the loss terms if the loss is non-finite.
PpoDiagnostics ppo_update(AgentParameters& agent, const TrajectoryBatch& batch,
                          const Eigen::VectorXd& phi, const PpoConfig& config,
                          std::uint64_t seed);

/// Everything episode generation needs for one instance.
struct ProblemContext {
  CouplingMatrix<double> matrix;
  SpectralDecomposition<double> decomp;
  Eigen::VectorXd phi;
  double learning_rate;
  Leaderboard board;
};

struct ContextOptions {
  bool tune_learning_rate = true;
  LearningRateTestOptions lr_test;
};

/// Decomposes, computes phi and (optionally) runs the learning-rate test.
/// With tuning disabled, `simcim.learning_rate` is used as is.
ProblemContext make_context(CouplingMatrix<double> matrix, const SimCimConfig& simcim,
                            std::size_t board_capacity, std::uint64_t seed,
                            const ContextOptions& options = {},
                            std::optional<SpectralDecomposition<double>> decomp = std::nullopt);

enum class ActionSelection { sample, greedy };

struct Rollout {
  TrajectoryBatch trajectories;
  EpisodeOutcome outcome;
  Eigen::MatrixXd anchors;  // (steps + 1) x B
};

/// Runs one batch of episodes with the actor and finalizes them against
/// `context.board` (which is updated).
Rollout rollout(const NetworkParameters& params, ProblemContext& context, EnvConfig env,
                std::uint64_t seed, ActionSelection selection = ActionSelection::sample);

/// One row of the training curve CSV.
struct UpdateRecord {
  Index update = 0;
  double learning_rate = 0.0;  // SimCIM mu used for the batch
  double mean_reward = 0.0;
  double fraction_above = 0.0;  // batch episodes strictly above the percentile
  double threshold = 0.0;
  double batch_max = 0.0;
  double batch_median = 0.0;
  double best_cut = 0.0;
  PpoDiagnostics ppo;
};

void write_update_header(std::ostream& out);
void write_update_row(std::ostream& out, const UpdateRecord& record);

using UpdateCallback = std::function<void(const UpdateRecord&, const AgentParameters&)>;
using InstanceGenerator = std::function<CouplingMatrix<double>(Index index, std::uint64_t seed)>;

InstanceGenerator erdos_renyi_generator(Index n, double connect_prob, WeightMode mode);

struct PretrainConfig {
  EnvConfig env;
  PpoConfig ppo;
  ContextOptions context;
};

struct PretrainResult {
  AgentParameters agent;
  std::vector<UpdateRecord> history;
};

/// One batch and one PPO update per sampled instance, each with a fresh
/// leaderboard of capacity B.
PretrainResult pretrain(AgentParameters agent, const PretrainConfig& config,
                        const InstanceGenerator& generator, Index num_instances,
                        std::uint64_t seed, const UpdateCallback& callback = {});

struct FinetuneConfig {
  EnvConfig env;
  PpoConfig ppo;
  ContextOptions context;
  std::size_t board_batches = 5;  // leaderboard capacity in batches
};

struct FinetuneResult {
  AgentParameters agent;
  std::vector<UpdateRecord> history;
  double best_cut = 0.0;  // over every batch, including the final one
  BatchStats final_stats;
  Eigen::VectorXd final_cuts;
  double learning_rate = 0.0;
};

/// Repeated batch + update on one instance, then one evaluation batch from
/// the updated policy. Zero updates evaluates the given parameters as is.
FinetuneResult finetune(AgentParameters agent, const CouplingMatrix<double>& matrix,
                        const FinetuneConfig& config, Index num_updates, std::uint64_t seed,
                        std::optional<long long> best_known = std::nullopt,
                        std::optional<SpectralDecomposition<double>> decomp = std::nullopt,
                        const UpdateCallback& callback = {});

}  // namespace simcim
