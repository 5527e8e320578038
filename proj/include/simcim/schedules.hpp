#pragma once

// Regularization schedules. A schedule yields either the normalized value
// pbar (mapped to p through the eigenvalue range) or the absolute p directly.

#include "simcim/spectral.hpp"

#include <string>
#include <variant>
#include <vector>

namespace simcim {

inline constexpr double kPbarMin = 0.0;
inline constexpr double kPbarMax = 1.05;

/// 1 - t/N
double linear_pbar(Index t, Index total);

struct TanhScheduleParams {
  double scale = 1.0;  // O
  double slope = 1.0;  // S
  double shift = 0.0;  // D
  double row_norm = 1.0;  // J_m = max_i sum_j |J_ij|
};

/// p_t = J_m O (tanh(S (t/N - 1/2)) + D), already absolute.
double tanh_p(Index t, Index total, const TanhScheduleParams& params);

/// Discrete agent actions, in index order.
enum class Action : int { decrease = 0, hold = 1, increase = 2 };
inline constexpr int kActionCount = 3;

/// -p_delta, 0 or +p_delta
double action_increment(Action action, double pdelta);

/// clip(pbar_prev + increment - m/N, 0, 1.05)
double apply_action(double pbar_prev, double increment, Index interval, Index total);

/// pbar_prev + (k/m)(pbar_next - pbar_prev)
double interpolate(double pbar_prev, double pbar_next, Index k, Index interval);

/// Anchor value of the agent-controlled schedule. Tracks the value as an
/// excursion from the linear schedule so that an all-hold action sequence
/// lands on linear_pbar(k m, N) bit-for-bit. Equivalent to repeated
/// apply_action up to rounding.
struct AnchorState {
  Index step = 0;
  double pbar = 1.0;
  double excursion = 0.0;
};

AnchorState advance_anchor(const AnchorState& state, double increment, Index interval,
                           Index total);

struct LinearSchedule {};

struct TanhSchedule {
  TanhScheduleParams params;
};

/// Anchors every `interval` iterations with linear interpolation in between.
struct PiecewiseSchedule {
  std::vector<double> anchors;
  Index interval = 10;
};

using Schedule = std::variant<LinearSchedule, TanhSchedule, PiecewiseSchedule>;

/// True when the schedule yields pbar (needs denormalization).
bool is_normalized(const Schedule& schedule);

/// Raw schedule value at iteration t: pbar for normalized schedules, p otherwise.
double schedule_value(const Schedule& schedule, Index t, Index total);

template <class Scalar>
Scalar regularization_at(const Schedule& schedule, Index t, Index total,
                         const SpectralDecomposition<Scalar>& decomp) {
  const auto v = static_cast<Scalar>(schedule_value(schedule, t, total));
  return is_normalized(schedule) ? denormalize_regularization(v, decomp) : v;
}

/// Key-value text block, one "key = value" per line, starting with "type".
std::string serialize_schedule(const Schedule& schedule);
Schedule parse_schedule(const std::string& text);

}  // namespace simcim
