#pragma once

// Batched SimCIM iterations. Each column of the batch is an independent run
// on the same coupling matrix:
//
//   g = mu (J c - p c) + sigma eps
//   m = eta m + (1 - eta) g
//   c = c + m   where |c + m| <= 1, unchanged elsewhere
//
// Column b draws its noise from its own engine, so results do not depend on
// how work is scheduled.

#include "simcim/random.hpp"
#include "simcim/schedules.hpp"
#include "simcim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace simcim {

struct SimCimConfig {
  double learning_rate = 0.02;  // mu
  double momentum = 0.9;        // eta
  double noise = 0.03;          // sigma
  Index iterations = 1000;      // N
  Index batch_size = 256;       // B

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("simcim: learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("simcim: momentum must lie in [0, 1)");
    if (!(noise >= 0.0)) throw std::invalid_argument("simcim: noise must be non-negative");
    if (iterations < 0) throw std::invalid_argument("simcim: iterations must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("simcim: batch size must be positive");
  }
};

class SimCimError : public std::runtime_error {
 public:
  SimCimError(Index iteration, Index column)
      : std::runtime_error("non-finite amplitude at iteration " + std::to_string(iteration) +
                           ", column " + std::to_string(column)),
        iteration_(iteration),
        column_(column) {}
  Index iteration() const noexcept { return iteration_; }
  Index column() const noexcept { return column_; }

 private:
  Index iteration_;
  Index column_;
};

template <class Scalar = double>
struct BatchState {
  Matrix<Scalar> amplitudes;  // c, n x B
  Matrix<Scalar> momentum;    // m, n x B
  Index iteration = 0;

  static BatchState zeros(Index n, Index batch) {
    return {Matrix<Scalar>::Zero(n, batch), Matrix<Scalar>::Zero(n, batch), 0};
  }
  Index size() const noexcept { return amplitudes.rows(); }
  Index batch() const noexcept { return amplitudes.cols(); }
};

/// One standard-normal stream per batch column.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, Index columns) {
    engines_.reserve(columns);
    for (Index b = 0; b < columns; ++b)
      engines_.emplace_back(split_seed(seed, {static_cast<std::uint64_t>(b)}));
    normals_.resize(columns);
  }

  Index columns() const noexcept { return static_cast<Index>(engines_.size()); }

  template <class Derived>
  void fill(Eigen::MatrixBase<Derived>& out) {
    if (out.cols() != columns()) throw std::invalid_argument("noise source column mismatch");
    for (Index b = 0; b < out.cols(); ++b) {
      auto& eng = engines_[b];
      auto& dist = normals_[b];
      for (Index i = 0; i < out.rows(); ++i) out(i, b) = static_cast<typename Derived::Scalar>(dist(eng));
    }
  }

 private:
  std::vector<Engine> engines_;
  std::vector<std::normal_distribution<double>> normals_;
};

/// Scratch buffers reused across steps. After a step, `gradient` holds g.
template <class Scalar = double>
struct StepWorkspace {
  Matrix<Scalar> gradient;
  Matrix<Scalar> noise;
  Matrix<Scalar> trial;
};

/// One SimCIM iteration with a per-column regularization coefficient p.
template <class Scalar>
void step(const CouplingMatrix<Scalar>& matrix, BatchState<Scalar>& state,
          const RowVector<Scalar>& p, const SimCimConfig& config, NoiseSource& noise,
          StepWorkspace<Scalar>& ws) {
  const Index n = state.size();
  const Index batch = state.batch();
  if (matrix.size() != n) throw std::invalid_argument("step: state does not match matrix size");
  if (p.size() != batch) throw std::invalid_argument("step: need one p per batch column");

  const auto mu = static_cast<Scalar>(config.learning_rate);
  const auto eta = static_cast<Scalar>(config.momentum);
  const auto sigma = static_cast<Scalar>(config.noise);

  auto& c = state.amplitudes;
  auto& m = state.momentum;
  ws.gradient.noalias() = matrix.values() * c;
  ws.gradient -= c * p.asDiagonal();
  ws.gradient *= mu;
  if (sigma != Scalar(0)) {
    ws.noise.resize(n, batch);
    noise.fill(ws.noise);
    ws.gradient += sigma * ws.noise;
  }
  m = eta * m + (Scalar(1) - eta) * ws.gradient;
  ws.trial = c + m;
  c = (ws.trial.array().abs() <= Scalar(1)).select(ws.trial, c);

  if (!c.allFinite()) {
    for (Index b = 0; b < batch; ++b)
      if (!c.col(b).allFinite()) throw SimCimError(state.iteration, b);
  }
  ++state.iteration;
}

template <class Scalar>
void step(const CouplingMatrix<Scalar>& matrix, BatchState<Scalar>& state, Scalar p,
          const SimCimConfig& config, NoiseSource& noise, StepWorkspace<Scalar>& ws) {
  step(matrix, state, RowVector<Scalar>::Constant(state.batch(), p).eval(), config, noise, ws);
}

/// Elementwise sign with sign(0) = +1.
template <class Derived>
Eigen::MatrixXi spins_from_amplitudes(const Eigen::MatrixBase<Derived>& c) {
  return (c.array() >= typename Derived::Scalar(0)).select(Eigen::MatrixXi::Ones(c.rows(), c.cols()),
                                                           -Eigen::MatrixXi::Ones(c.rows(), c.cols()));
}

template <class Scalar = double>
struct BatchResult {
  BatchState<Scalar> state;
  Eigen::MatrixXi spins;  // n x B, +1/-1
  RowVector<Scalar> cuts;
};

/// Per-iteration diagnostics (only computed when a sink is given).
struct TraceRow {
  Index iteration;
  double schedule_value;
  double mean_abs_amplitude;
  double max_cut_so_far;
};
using TraceSink = std::function<void(const TraceRow&)>;

/// Full N-iteration run from c = 0, m = 0.
template <class Scalar>
BatchResult<Scalar> run_batch(const CouplingMatrix<Scalar>& matrix,
                              const SpectralDecomposition<Scalar>& decomp,
                              const Schedule& schedule, const SimCimConfig& config,
                              std::uint64_t seed, const TraceSink& trace = {}) {
  config.validate();
  const Index n = matrix.size();
  const Index total = config.iterations;
  BatchResult<Scalar> out{BatchState<Scalar>::zeros(n, config.batch_size), {}, {}};
  NoiseSource noise(seed, config.batch_size);
  StepWorkspace<Scalar> ws;
  double best = -std::numeric_limits<double>::infinity();

  for (Index t = 0; t < total; ++t) {
    const Scalar p = regularization_at(schedule, t, total, decomp);
    step(matrix, out.state, p, config, noise, ws);
    if (trace) {
      const auto cuts = cut_values(matrix, spins_from_amplitudes(out.state.amplitudes));
      best = std::max(best, static_cast<double>(cuts.maxCoeff()));
      trace({t, schedule_value(schedule, t, total),
             static_cast<double>(out.state.amplitudes.cwiseAbs().mean()), best});
    }
  }
  out.spins = spins_from_amplitudes(out.state.amplitudes);
  out.cuts = cut_values(matrix, out.spins);
  return out;
}

struct LearningRateTestOptions {
  double mu_start = 1.0;
  double mu_end = 1e-5;
  double ema_decay = 0.9;
  double fallback = 0.02;
};

struct LearningRateTestResult {
  double learning_rate = 0.0;
  bool converged = false;
  Index selected_iteration = -1;
  std::vector<double> rates;           // mu_t
  std::vector<double> gradient_norms;  // mean over columns of ||g_t||_1
  std::vector<double> smoothed;        // EMA of gradient_norms
};

/// Picks mu from a smoothed gradient-norm trace: the iteration after the
/// trace maximum where the EMA falls fastest in relative terms, i.e. where the
/// dynamics leave the saturated oscillating regime and start to converge.
/// A trace that is identically zero converges immediately (returns index 0).
/// Returns -1 when the trace never decreases after its maximum.
inline Index select_convergence_onset(const std::vector<double>& smoothed) {
  if (smoothed.empty()) return -1;
  const auto peak = std::max_element(smoothed.begin(), smoothed.end());
  if (*peak == 0.0) return 0;
  Index best = -1;
  double steepest = 0.0;
  for (auto t = static_cast<Index>(peak - smoothed.begin()) + 1;
       t < static_cast<Index>(smoothed.size()); ++t) {
    const double prev = smoothed[t - 1];
    if (prev <= 0.0) continue;
    const double drop = (prev - smoothed[t]) / prev;
    if (drop > steepest) {
      steepest = drop;
      best = t;
    }
  }
  return best;
}

/// Learning-rate range test: one cycle with eta = 0, the linear schedule and
/// mu_t = mu_start (mu_end / mu_start)^(t/N), recording ||g_t||_1.
template <class Scalar>
LearningRateTestResult find_learning_rate(const CouplingMatrix<Scalar>& matrix,
                                          const SpectralDecomposition<Scalar>& decomp,
                                          const SimCimConfig& config, std::uint64_t seed,
                                          const LearningRateTestOptions& options = {}) {
  if (config.iterations < 100)
    throw std::invalid_argument("find_learning_rate needs at least 100 iterations");
  SimCimConfig cfg = config;
  cfg.momentum = 0.0;
  cfg.learning_rate = options.mu_start;
  cfg.validate();

  const Index n = matrix.size();
  const Index total = cfg.iterations;
  auto state = BatchState<Scalar>::zeros(n, cfg.batch_size);
  NoiseSource noise(seed, cfg.batch_size);
  StepWorkspace<Scalar> ws;
  const Schedule linear = LinearSchedule{};

  LearningRateTestResult out;
  out.rates.reserve(total);
  out.gradient_norms.reserve(total);
  out.smoothed.reserve(total);
  const double ratio = options.mu_end / options.mu_start;

  for (Index t = 0; t < total; ++t) {
    cfg.learning_rate = options.mu_start * std::pow(ratio, double(t) / double(total));
    const Scalar p = regularization_at(linear, t, total, decomp);
    step(matrix, state, p, cfg, noise, ws);

    const double norm = static_cast<double>(ws.gradient.cwiseAbs().colwise().sum().mean());
    const double ema = out.smoothed.empty() ? norm
                                            : options.ema_decay * out.smoothed.back() +
                                                  (1.0 - options.ema_decay) * norm;
    out.rates.push_back(cfg.learning_rate);
    out.gradient_norms.push_back(norm);
    out.smoothed.push_back(ema);
  }

  out.selected_iteration = select_convergence_onset(out.smoothed);
  out.converged = out.selected_iteration >= 0;
  if (out.converged) {
    out.learning_rate = out.rates[out.selected_iteration];
  } else {
    out.learning_rate = options.fallback;
    std::clog << "warning: learning-rate test found no convergence onset; using fallback mu = "
              << options.fallback << '\n';
  }
  return out;
}

}  // namespace simcim
