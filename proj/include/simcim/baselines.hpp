#pragma once

// Black-box tuning of the tanh schedule with CMA-ES.

#include "simcim/schedules.hpp"
#include "simcim/simcim.hpp"
#include "simcim/stats.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace simcim {

struct CmaesConfig {
  int population = 10;
  int max_evaluations = 500;
  double initial_sigma = 0.3;  // in unit-cube coordinates
};

struct CmaesEvaluation {
  int generation = 0;
  int index = 0;  // evaluation counter
  Eigen::VectorXd point;  // inside [0, 1]^dim
  double value = 0.0;
  double best_so_far = 0.0;
};

struct CmaesResult {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  int evaluations = 0;
  std::vector<CmaesEvaluation> history;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Minimizes `objective` over the unit cube [0, 1]^dim with the standard
/// (mu/mu_w, lambda)-CMA-ES. Candidates are clipped to the cube before they
/// are evaluated and recombined. Starts at the cube center. A non-finite
/// objective value ranks last and is reported on std::clog.
CmaesResult cmaes_minimize(const Objective& objective, int dim, const CmaesConfig& config,
                           std::uint64_t seed);

/// Unit cube -> (O, S, D): O and S = 0.01 * 1000^u, D = -3 + 6u.
TanhScheduleParams unit_to_tanh(const Eigen::Vector3d& u, double row_norm);
Eigen::Vector3d tanh_to_unit(const TanhScheduleParams& params);

struct BatchScore {
  double value = 0.0;  // -(cmax + qmax)
  double cmax = 0.0;
  double qmax = 0.0;   // fraction of the batch at cmax
};

BatchScore score_batch(std::span<const double> cuts);

/// One SimCIM batch under the tanh schedule, scored for minimization.
double batch_objective(const CouplingMatrix<double>& matrix,
                       const SpectralDecomposition<double>& decomp,
                       const TanhScheduleParams& params, const SimCimConfig& simcim,
                       std::uint64_t seed);

struct TanhTuneRow {
  int generation = 0;
  int evaluation = 0;
  TanhScheduleParams params;
  BatchScore score;
};

struct TanhTuneResult {
  TanhScheduleParams params;
  BatchScore search_best;  // best batch seen during the search
  BatchStats fresh;        // statistics of a new batch at the selected parameters
  Eigen::VectorXd fresh_cuts;
  std::vector<TanhTuneRow> history;
};

TanhTuneResult tune_tanh(const CouplingMatrix<double>& matrix,
                         const SpectralDecomposition<double>& decomp, const CmaesConfig& cmaes,
                         const SimCimConfig& simcim, std::uint64_t seed,
                         std::optional<long long> best_known = std::nullopt);

/// CSV: generation,evaluation,O,S,D,objective,cmax,qmax
void write_tune_history(std::ostream& out, const std::vector<TanhTuneRow>& rows);

}  // namespace simcim
