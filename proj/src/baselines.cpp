#include "simcim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace simcim {

CmaesResult cmaes_minimize(const Objective& objective, int dim, const CmaesConfig& config,
                           std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("cmaes: dimension must be positive");
  if (config.population < 2) throw std::invalid_argument("cmaes: population must be >= 2");
  if (config.max_evaluations < 1) throw std::invalid_argument("cmaes: budget must be positive");
  if (!(config.initial_sigma > 0.0)) throw std::invalid_argument("cmaes: sigma must be positive");

  const int n = dim, lambda = config.population, mu = lambda / 2;
  const double nd = n;

  // Hansen's default strategy parameters
  Eigen::VectorXd w(mu);
  for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  w /= w.sum();
  const double mueff = 1.0 / w.squaredNorm();
  const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
  const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
  const double c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff);
  const double cmu =
      std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nd + 2.0) * (nd + 2.0) + mueff));
  const double chi = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, 0.5);
  double sigma = config.initial_sigma;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd B = C;
  Eigen::VectorXd D = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(n), pc = Eigen::VectorXd::Zero(n);

  Engine rng(split_seed(seed, {stream::cmaes}));
  std::normal_distribution<double> normal;

  CmaesResult out;
  out.best_value = std::numeric_limits<double>::infinity();
  out.best_point = mean;
  int generation = 0;
  while (out.evaluations < config.max_evaluations) {
    const int count = std::min(lambda, config.max_evaluations - out.evaluations);
    Eigen::MatrixXd xs(n, count);
    std::vector<double> values(count);
    for (int k = 0; k < count; ++k) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      xs.col(k) = (mean + sigma * (B * D.asDiagonal() * z)).cwiseMax(0.0).cwiseMin(1.0);
      double v = objective(xs.col(k));
      if (!std::isfinite(v)) {
        std::clog << "warning: cmaes objective returned " << v << " at generation " << generation
                  << "; ranking the candidate last\n";
        v = std::numeric_limits<double>::infinity();
      }
      values[k] = v;
      if (v < out.best_value) {
        out.best_value = v;
        out.best_point = xs.col(k);
      }
      out.history.push_back({generation, out.evaluations, xs.col(k), v, out.best_value});
      ++out.evaluations;
    }
    if (count < lambda) break;  // budget ran out mid-generation

    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });

    const Eigen::VectorXd old = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += w[i] * xs.col(order[i]);
    const Eigen::VectorXd step = (mean - old) / sigma;

    // C^{-1/2} step
    const Eigen::VectorXd whitened = B * D.cwiseInverse().asDiagonal() * B.transpose() * step;
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * whitened;
    const double gens = generation + 1.0;
    const bool hsig = ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gens)) / chi <
                      1.4 + 2.0 / (nd + 1.0);
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Eigen::VectorXd y = (xs.col(order[i]) - old) / sigma;
      rank_mu += w[i] * y * y.transpose();
    }
    C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) +
        cmu * rank_mu;
    sigma *= std::exp((cs / ds) * (ps.norm() / chi - 1.0));

    C = 0.5 * (C + C.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    B = eig.eigenvectors();
    D = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    ++generation;
  }
  return out;
}

namespace {

constexpr double kScaleMin = 0.01, kScaleMax = 10.0;
constexpr double kShiftMin = -3.0, kShiftMax = 3.0;

double to_exponential(double u) {
  return kScaleMin * std::pow(kScaleMax / kScaleMin, std::clamp(u, 0.0, 1.0));
}

double from_exponential(double v) {
  return std::log(v / kScaleMin) / std::log(kScaleMax / kScaleMin);
}

}  // namespace

TanhScheduleParams unit_to_tanh(const Eigen::Vector3d& u, double row_norm) {
  TanhScheduleParams p;
  p.scale = to_exponential(u[0]);
  p.slope = to_exponential(u[1]);
  p.shift = kShiftMin + (kShiftMax - kShiftMin) * std::clamp(u[2], 0.0, 1.0);
  p.row_norm = row_norm;
  return p;
}

Eigen::Vector3d tanh_to_unit(const TanhScheduleParams& p) {
  return {from_exponential(p.scale), from_exponential(p.slope),
          (p.shift - kShiftMin) / (kShiftMax - kShiftMin)};
}

BatchScore score_batch(std::span<const double> cuts) {
  if (cuts.empty()) throw std::invalid_argument("score_batch: empty batch");
  BatchScore s;
  s.cmax = *std::max_element(cuts.begin(), cuts.end());
  s.qmax = double(std::count(cuts.begin(), cuts.end(), s.cmax)) / double(cuts.size());
  s.value = -(s.cmax + s.qmax);
  return s;
}

namespace {

BatchScore run_and_score(const CouplingMatrix<double>& matrix,
                         const SpectralDecomposition<double>& decomp,
                         const TanhScheduleParams& params, const SimCimConfig& simcim,
                         std::uint64_t seed, Eigen::VectorXd* cuts_out = nullptr) {
  const auto r = run_batch(matrix, decomp, Schedule{TanhSchedule{params}}, simcim, seed);
  const Eigen::VectorXd cuts = r.cuts.transpose();
  if (cuts_out) *cuts_out = cuts;
  return score_batch(std::span<const double>(cuts.data(), std::size_t(cuts.size())));
}

}  // namespace

double batch_objective(const CouplingMatrix<double>& matrix,
                       const SpectralDecomposition<double>& decomp,
                       const TanhScheduleParams& params, const SimCimConfig& simcim,
                       std::uint64_t seed) {
  return run_and_score(matrix, decomp, params, simcim, seed).value;
}

TanhTuneResult tune_tanh(const CouplingMatrix<double>& matrix,
                         const SpectralDecomposition<double>& decomp, const CmaesConfig& cmaes,
                         const SimCimConfig& simcim, std::uint64_t seed,
                         std::optional<long long> best_known) {
  const double row_norm = matrix.row_sum_norm();
  TanhTuneResult out;
  out.search_best.value = std::numeric_limits<double>::infinity();
  int evaluation = 0;
  const auto objective = [&](const Eigen::VectorXd& u) {
    const auto params = unit_to_tanh(u, row_norm);
    const auto score = run_and_score(matrix, decomp, params, simcim,
                                     split_seed(seed, {stream::simcim, std::uint64_t(evaluation)}));
    out.history.push_back({evaluation / std::max(1, cmaes.population), evaluation, params, score});
    if (score.value < out.search_best.value) out.search_best = score;
    ++evaluation;
    return score.value;
  };
  const auto result = cmaes_minimize(objective, 3, cmaes, seed);
  out.params = unit_to_tanh(result.best_point, row_norm);
  run_and_score(matrix, decomp, out.params, simcim, split_seed(seed, {stream::evaluation}),
                &out.fresh_cuts);
  out.fresh = evaluate_batch_stats(
      std::span<const double>(out.fresh_cuts.data(), std::size_t(out.fresh_cuts.size())),
      best_known);
  return out;
}

void write_tune_history(std::ostream& out, const std::vector<TanhTuneRow>& rows) {
  out << "generation,evaluation,O,S,D,objective,cmax,qmax\n";
  const auto precision = out.precision(12);
  for (const auto& r : rows)
    out << r.generation << ',' << r.evaluation << ',' << r.params.scale << ',' << r.params.slope
        << ',' << r.params.shift << ',' << r.score.value << ',' << r.score.cmax << ','
        << r.score.qmax << '\n';
  out.precision(precision);
}

}  // namespace simcim
