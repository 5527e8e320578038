#include "simcim/stats.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace simcim {

double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty range");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

BatchStats evaluate_batch_stats(std::span<const double> cuts, std::optional<long long> best_known) {
  if (cuts.empty()) throw std::invalid_argument("batch statistics need at least one cut");
  BatchStats s;
  s.max = *std::max_element(cuts.begin(), cuts.end());
  s.median = median(cuts);
  s.probability = double(std::count(cuts.begin(), cuts.end(), s.max)) / double(cuts.size());
  if (best_known) {
    s.solved = s.max == double(*best_known);
    s.difference = s.max - double(*best_known);
  }
  return s;
}

}  // namespace simcim
