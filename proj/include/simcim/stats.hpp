#pragma once

#include <optional>
#include <span>

namespace simcim {

struct BatchStats {
  double max = 0.0;
  double median = 0.0;
  double probability = 0.0;  // fraction of the batch equal to the batch max
  bool solved = false;       // max == best known (false when unknown)
  std::optional<double> difference;  // max - best known
};

/// Throws on an empty batch.
BatchStats evaluate_batch_stats(std::span<const double> cuts,
                                std::optional<long long> best_known = std::nullopt);

double median(std::span<const double> values);

}  // namespace simcim
