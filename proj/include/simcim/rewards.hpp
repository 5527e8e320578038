#pragma once

// Leaderboard of recent episode cut values and the ranked terminal rewards
// computed against its q-th percentile.

#include "simcim/random.hpp"

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

namespace simcim {

/// Ring buffer of the last `capacity` cut values, oldest evicted first.
class Leaderboard {
 public:
  explicit Leaderboard(std::size_t capacity);

  void push(double cut);
  void push(std::span<const double> cuts);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  const std::deque<double>& values() const noexcept { return values_; }

  /// One value per line, oldest first, with a "cut" header.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

enum class RewardScheme { r2, r3 };

struct RewardConfig {
  double percentile = 99.0;  // q on the 0-100 scale
  RewardScheme scheme = RewardScheme::r3;
};

/// Nearest-rank percentile: the ceil(q/100 * size)-th smallest value.
double percentile(const Leaderboard& board, double q);

/// +1 above the threshold, -1 below, a fair coin on ties.
double r2_reward(double cut, double threshold, Engine& rng);

/// Counts of board entries strictly above, strictly below and equal to a threshold.
struct RankCounts {
  std::size_t above = 0;
  std::size_t below = 0;
  std::size_t tied = 0;
};
RankCounts rank_counts(const Leaderboard& board, double threshold);

/// Reward given to ties so that the mean reward over the board is zero:
///   (below (1 - q/100) - above q/100) / tied,  or 0 when nothing ties.
double r3_tie_reward(const RankCounts& counts, double q);

/// Rescaled ranked rewards for a batch. The board must already contain the batch.
std::vector<double> r3_rewards(std::span<const double> batch_cuts, const Leaderboard& board,
                               double q);

/// Ranked rewards for a batch. The board must already contain the batch.
std::vector<double> r2_rewards(std::span<const double> batch_cuts, const Leaderboard& board,
                               double q, Engine& rng);

/// R3 reward for every entry of the board itself (used for the zero-mean check).
std::vector<double> r3_window_rewards(const Leaderboard& board, double q);

}  // namespace simcim
