#include "simcim/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace simcim {

Leaderboard::Leaderboard(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("leaderboard capacity must be positive");
}

void Leaderboard::push(double cut) {
  if (values_.size() == capacity_) values_.pop_front();
  values_.push_back(cut);
}

void Leaderboard::push(std::span<const double> cuts) {
  for (double c : cuts) push(c);
}

void Leaderboard::write_csv(std::ostream& out) const {
  out << "cut\n";
  for (double v : values_) out << v << '\n';
}

double percentile(const Leaderboard& board, double q) {
  if (board.empty()) throw std::invalid_argument("percentile of an empty leaderboard");
  if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("percentile level must be in (0, 100]");
  std::vector<double> sorted(board.values().begin(), board.values().end());
  // q * len is exact for integer q, so an integral rank is never pushed up by rounding
  const double rank = std::ceil(q * static_cast<double>(sorted.size()) / 100.0);
  const auto k = static_cast<std::size_t>(std::clamp(rank, 1.0, double(sorted.size()))) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
  return sorted[k];
}

double r2_reward(double cut, double threshold, Engine& rng) {
  if (cut > threshold) return 1.0;
  if (cut < threshold) return -1.0;
  return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
}

RankCounts rank_counts(const Leaderboard& board, double threshold) {
  RankCounts c;
  for (double v : board.values()) {
    if (v > threshold)
      ++c.above;
    else if (v < threshold)
      ++c.below;
    else
      ++c.tied;
  }
  return c;
}

double r3_tie_reward(const RankCounts& counts, double q) {
  if (counts.tied == 0) return 0.0;
  const double up = q / 100.0;
  return (static_cast<double>(counts.below) * (1.0 - up) - static_cast<double>(counts.above) * up) /
         static_cast<double>(counts.tied);
}

namespace {

double r3_single(double cut, double threshold, double tie, double q) {
  if (cut > threshold) return q / 100.0;
  if (cut < threshold) return -(1.0 - q / 100.0);
  return tie;
}

}  // namespace

std::vector<double> r3_rewards(std::span<const double> batch_cuts, const Leaderboard& board,
                               double q) {
  const double threshold = percentile(board, q);
  const double tie = r3_tie_reward(rank_counts(board, threshold), q);
  std::vector<double> out;
  out.reserve(batch_cuts.size());
  for (double c : batch_cuts) out.push_back(r3_single(c, threshold, tie, q));
  return out;
}

std::vector<double> r2_rewards(std::span<const double> batch_cuts, const Leaderboard& board,
                               double q, Engine& rng) {
  const double threshold = percentile(board, q);
  std::vector<double> out;
  out.reserve(batch_cuts.size());
  for (double c : batch_cuts) out.push_back(r2_reward(c, threshold, rng));
  return out;
}

std::vector<double> r3_window_rewards(const Leaderboard& board, double q) {
  std::vector<double> window(board.values().begin(), board.values().end());
  return r3_rewards(window, board, q);
}

}  // namespace simcim
