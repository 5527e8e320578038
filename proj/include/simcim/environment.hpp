#pragma once

// RL environment around a batch of SimCIM runs that share one problem
// instance. Every `interval` iterations the agent picks, per episode, one of
// three increments for the normalized regularization; the environment then
// runs `interval` iterations interpolating pbar from the old anchor to the new.
//
// Observation column layout (n + 2 rows): eigen-amplitudes e = Q^T c ordered by
// decreasing eigenvalue, then t/N, then the current anchor pbar.

#include "simcim/rewards.hpp"
#include "simcim/schedules.hpp"
#include "simcim/simcim.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace simcim {

struct EnvConfig {
  SimCimConfig simcim;     // learning rate, momentum, noise, N, B
  Index interval = 10;     // m
  double pdelta = 0.04;
  double initial_pbar = 1.0;
  RewardConfig reward;

  Index iterations() const noexcept { return simcim.iterations; }
  Index batch() const noexcept { return simcim.batch_size; }
  Index steps_per_episode() const { return simcim.iterations / interval; }
  void validate() const;
};

struct EpisodeOutcome {
  Eigen::MatrixXi spins;             // n x B
  Eigen::VectorXd cuts;              // B
  Eigen::VectorXd terminal_rewards;  // B
  double threshold = 0.0;            // percentile C^q over the board window
  RankCounts counts;                 // over the board window
};

class Environment {
 public:
  /// The matrix and decomposition must outlive the environment.
  Environment(const CouplingMatrix<double>& matrix, const SpectralDecomposition<double>& decomp,
              EnvConfig config);

  /// Starts B fresh episodes and returns the initial observation batch.
  Eigen::MatrixXd reset(std::uint64_t seed);

  /// Applies one action per episode (indices of Action) and advances `interval`
  /// iterations. Returns the next observation batch.
  Eigen::MatrixXd step(std::span<const int> actions);

  bool done() const noexcept { return iteration_ == config_.iterations(); }
  Index iteration() const noexcept { return iteration_; }
  Index step_index() const noexcept { return step_; }

  /// Signs the final amplitudes, pushes the cuts into the board and computes
  /// terminal rewards. `rng` is only used by the R2 tie coin.
  EpisodeOutcome finalize(Leaderboard& board, Engine& rng) const;

  Eigen::MatrixXd observation() const;
  const BatchState<double>& state() const noexcept { return state_; }
  const EnvConfig& config() const noexcept { return config_; }
  Index observation_size() const noexcept { return matrix_->size() + 2; }

  /// Anchor pbar values, (steps + 1) x B; row 0 is the initial value.
  const Eigen::MatrixXd& anchors() const noexcept { return anchors_; }

  /// CSV rows "episode,step,pbar" for every anchor.
  void write_anchor_trace(std::ostream& out) const;

 private:
  const CouplingMatrix<double>* matrix_;
  const SpectralDecomposition<double>* decomp_;
  EnvConfig config_;
  BatchState<double> state_;
  std::vector<AnchorState> anchor_state_;
  Eigen::MatrixXd anchors_;
  NoiseSource noise_{0, 0};
  StepWorkspace<double> ws_;
  Index iteration_ = 0;
  Index step_ = 0;
  bool started_ = false;
};

}  // namespace simcim
