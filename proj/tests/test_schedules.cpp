#include "simcim/schedules.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace simcim;

TEST_CASE("linear schedule endpoints") {
  CHECK(linear_pbar(0, 1000) == 1.0);
  CHECK(linear_pbar(1000, 1000) == 0.0);
  CHECK(linear_pbar(500, 1000) == 0.5);
}

TEST_CASE("tanh schedule") {
  TanhScheduleParams p{1.5, 3.0, 0.4, 7.0};
  CHECK(tanh_p(500, 1000, p) == doctest::Approx(7.0 * 1.5 * 0.4));
  TanhScheduleParams q{1.0, 10.0, 1.0, 10.0};
  CHECK(tanh_p(0, 1000, q) == doctest::Approx(10.0 * (std::tanh(-5.0) + 1.0)));
  CHECK(tanh_p(0, 1000, q) == doctest::Approx(0.000908).epsilon(1e-3));
  for (Index t = 0; t <= 1000; t += 37)
    CHECK(std::abs(tanh_p(t, 1000, p) + tanh_p(1000 - t, 1000, p) - 2.0 * 7.0 * 1.5 * 0.4) < 1e-12);
}

TEST_CASE("apply_action decrement and clipping") {
  CHECK(apply_action(1.0, 0.0, 10, 1000) == doctest::Approx(0.99));
  CHECK(apply_action(1.04, 0.04, 10, 1000) == 1.05);
  CHECK(apply_action(0.005, -0.04, 10, 1000) == 0.0);
  CHECK(action_increment(Action::decrease, 0.04) == -0.04);
  CHECK(action_increment(Action::hold, 0.04) == 0.0);
  CHECK(action_increment(Action::increase, 0.04) == 0.04);
}

TEST_CASE("interpolation") {
  CHECK(interpolate(0.7, 0.2, 0, 10) == 0.7);
  for (Index k = 0; k < 10; ++k) CHECK(interpolate(0.3, 0.3, k, 10) == 0.3);
  CHECK(interpolate(1.0, 0.9, 5, 10) == doctest::Approx(0.95));
}

TEST_CASE("hold-only anchors land exactly on the linear schedule") {
  AnchorState s{0, 1.0, 0.0};
  for (Index k = 1; k <= 100; ++k) {
    s = advance_anchor(s, 0.0, 10, 1000);
    REQUIRE(s.pbar == linear_pbar(k * 10, 1000));
    CHECK(s.pbar == doctest::Approx(1.0 - 0.01 * double(k)).epsilon(1e-12));
  }
  CHECK(s.pbar == 0.0);
}

TEST_CASE("anchor recursion agrees with repeated apply_action") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int rep = 0; rep < 200; ++rep) {
    AnchorState s{0, 1.0, 0.0};
    double direct = 1.0;
    for (Index k = 1; k <= 100; ++k) {
      const double inc = action_increment(static_cast<Action>(pick(rng)), 0.04);
      s = advance_anchor(s, inc, 10, 1000);
      direct = apply_action(direct, inc, 10, 1000);
      REQUIRE(std::abs(s.pbar - direct) < 1e-12);
      REQUIRE(s.pbar >= kPbarMin);
      REQUIRE(s.pbar <= kPbarMax);
    }
  }
}

TEST_CASE("random actions follow the linear schedule in expectation") {
  // the increments cancel in expectation; clipping to [0, 1.05] does not, so
  // the unclipped anchor (linear value plus summed increments) carries the
  // property at every step and the clipped one only until a clip can bind
  const int runs = 10000, steps = 100;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<double> sum(steps + 1), sq(steps + 1), clipped_sum(steps + 1);
  for (int r = 0; r < runs; ++r) {
    double excursion = 0.0;
    AnchorState s{0, 1.0, 0.0};
    for (int k = 1; k <= steps; ++k) {
      const double inc = action_increment(static_cast<Action>(pick(rng)), 0.04);
      excursion += inc;
      const double free = linear_pbar(k * 10, 1000) + excursion;
      sum[k] += free;
      sq[k] += free * free;
      s = advance_anchor(s, inc, 10, 1000);
      clipped_sum[k] += s.pbar;
    }
  }
  for (int k = 1; k <= steps; ++k) {
    const double mean = sum[k] / runs;
    const double se = std::sqrt((sq[k] / runs - mean * mean) / runs);
    CHECK(std::abs(mean - linear_pbar(k * 10, 1000)) <= 3.0 * se);
  }
  // first anchor: 1.03, 0.99 or 0.95, never clipped
  const double first = clipped_sum[1] / runs;
  CHECK(std::abs(first - 0.99) <= 3.0 * 0.04 * std::sqrt(2.0 / 3.0) / std::sqrt(double(runs)));
  // by the last anchor the lower clip has lifted the mean well above 0
  CHECK(clipped_sum[steps] / runs > 0.05);
}

TEST_CASE("schedule values and normalization flags") {
  CHECK(is_normalized(LinearSchedule{}));
  CHECK(is_normalized(PiecewiseSchedule{{1.0, 0.5}, 10}));
  CHECK_FALSE(is_normalized(TanhSchedule{}));
  const PiecewiseSchedule pw{{1.0, 0.5, 0.2}, 10};
  CHECK(schedule_value(pw, 0, 20) == 1.0);
  CHECK(schedule_value(pw, 5, 20) == doctest::Approx(0.75));
  CHECK(schedule_value(pw, 10, 20) == 0.5);
  CHECK(schedule_value(pw, 25, 20) == 0.2);
  for (Index t = 0; t <= 1000; ++t) {
    CHECK(std::isfinite(schedule_value(LinearSchedule{}, t, 1000)));
    CHECK(std::isfinite(schedule_value(TanhSchedule{{10.0, 10.0, -3.0, 12.0}}, t, 1000)));
  }
}

TEST_CASE("schedules round trip through text") {
  const Schedule tanh = TanhSchedule{{0.123456789, 3.5, -1.25, 17.0}};
  const auto back = std::get<TanhSchedule>(parse_schedule(serialize_schedule(tanh)));
  CHECK(back.params.scale == 0.123456789);
  CHECK(back.params.slope == 3.5);
  CHECK(back.params.shift == -1.25);
  CHECK(back.params.row_norm == 17.0);
  const Schedule pw = PiecewiseSchedule{{1.0, 0.99, 0.1 + 0.2}, 10};
  const auto pw_back = std::get<PiecewiseSchedule>(parse_schedule(serialize_schedule(pw)));
  CHECK(pw_back.anchors == std::get<PiecewiseSchedule>(pw).anchors);
  CHECK(pw_back.interval == 10);
  CHECK(std::holds_alternative<LinearSchedule>(parse_schedule(serialize_schedule(LinearSchedule{}))));
  CHECK_THROWS_AS(parse_schedule("type = cubic\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_schedule("type = tanh\nO = 1\n"), std::invalid_argument);
}
