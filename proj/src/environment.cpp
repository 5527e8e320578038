#include "simcim/environment.hpp"

#include <ostream>
#include <stdexcept>

namespace simcim {

void EnvConfig::validate() const {
  simcim.validate();
  if (interval < 1) throw std::invalid_argument("env: interval must be positive");
  if (simcim.iterations < interval || simcim.iterations % interval != 0)
    throw std::invalid_argument("env: iterations (" + std::to_string(simcim.iterations) +
                                ") must be a positive multiple of interval (" +
                                std::to_string(interval) + ")");
  if (!(pdelta >= 0.0)) throw std::invalid_argument("env: pdelta must be non-negative");
  if (!(initial_pbar >= kPbarMin && initial_pbar <= kPbarMax))
    throw std::invalid_argument("env: initial pbar must lie in [0, 1.05]");
  if (!(reward.percentile > 0.0 && reward.percentile < 100.0))
    throw std::invalid_argument("env: percentile must lie in (0, 100)");
}

Environment::Environment(const CouplingMatrix<double>& matrix,
                         const SpectralDecomposition<double>& decomp, EnvConfig config)
    : matrix_(&matrix), decomp_(&decomp), config_(config) {
  if (decomp.size() != matrix.size())
    throw std::invalid_argument("environment: decomposition does not match matrix");
  config_.validate();
}

Eigen::MatrixXd Environment::reset(std::uint64_t seed) {
  const Index batch = config_.batch();
  state_ = BatchState<double>::zeros(matrix_->size(), batch);
  noise_ = NoiseSource(seed, batch);
  const AnchorState initial{0, config_.initial_pbar, config_.initial_pbar - 1.0};
  anchor_state_.assign(batch, initial);
  anchors_.resize(config_.steps_per_episode() + 1, batch);
  anchors_.row(0).setConstant(config_.initial_pbar);
  iteration_ = 0;
  step_ = 0;
  started_ = true;
  return observation();
}

Eigen::MatrixXd Environment::observation() const {
  const Index n = matrix_->size();
  Eigen::MatrixXd obs(n + 2, config_.batch());
  obs.topRows(n).noalias() = decomp_->vectors.transpose() * state_.amplitudes;
  obs.row(n).setConstant(static_cast<double>(iteration_) / double(config_.iterations()));
  for (Index b = 0; b < config_.batch(); ++b) obs(n + 1, b) = anchor_state_[b].pbar;
  return obs;
}

Eigen::MatrixXd Environment::step(std::span<const int> actions) {
  if (!started_) throw std::logic_error("environment: step before reset");
  if (done()) throw std::logic_error("environment: episode already finished");
  const Index batch = config_.batch();
  if (static_cast<Index>(actions.size()) != batch)
    throw std::invalid_argument("environment: need one action per episode");

  const Index m = config_.interval;
  const Index total = config_.iterations();
  Eigen::VectorXd prev(batch), next(batch);
  for (Index b = 0; b < batch; ++b) {
    const int a = actions[b];
    if (a < 0 || a >= kActionCount) throw std::invalid_argument("environment: invalid action");
    prev[b] = anchor_state_[b].pbar;
    anchor_state_[b] = advance_anchor(anchor_state_[b],
                                      action_increment(static_cast<Action>(a), config_.pdelta), m,
                                      total);
    next[b] = anchor_state_[b].pbar;
  }

  RowVector<double> p(batch);
  for (Index k = 0; k < m; ++k) {
    for (Index b = 0; b < batch; ++b)
      p[b] = denormalize_regularization(interpolate(prev[b], next[b], k, m), *decomp_);
    simcim::step(*matrix_, state_, p, config_.simcim, noise_, ws_);
  }
  iteration_ += m;
  ++step_;
  anchors_.row(step_) = next.transpose();
  return observation();
}

EpisodeOutcome Environment::finalize(Leaderboard& board, Engine& rng) const {
  if (!done()) throw std::logic_error("environment: finalize before the episode is done");
  EpisodeOutcome out;
  out.spins = spins_from_amplitudes(state_.amplitudes);
  out.cuts = cut_values(*matrix_, out.spins).transpose();
  const std::span<const double> cuts(out.cuts.data(), static_cast<std::size_t>(out.cuts.size()));
  board.push(cuts);

  const double q = config_.reward.percentile;
  out.threshold = percentile(board, q);
  out.counts = rank_counts(board, out.threshold);
  const auto rewards = config_.reward.scheme == RewardScheme::r3 ? r3_rewards(cuts, board, q)
                                                                 : r2_rewards(cuts, board, q, rng);
  out.terminal_rewards = Eigen::Map<const Eigen::VectorXd>(rewards.data(), Index(rewards.size()));
  return out;
}

void Environment::write_anchor_trace(std::ostream& out) const {
  out << "episode,step,pbar\n";
  for (Index b = 0; b < anchors_.cols(); ++b)
    for (Index k = 0; k <= step_; ++k) out << b << ',' << k << ',' << anchors_(k, b) << '\n';
}

}  // namespace simcim
