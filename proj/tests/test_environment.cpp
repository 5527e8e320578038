#include "simcim/environment.hpp"

#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

using namespace simcim;

namespace {

EnvConfig small_config(Index batch, double sigma = 0.03) {
  EnvConfig c;
  c.simcim.batch_size = batch;
  c.simcim.noise = sigma;
  c.simcim.learning_rate = 0.1;
  return c;
}

struct Fixture {
  CouplingMatrix<double> J = generate_erdos_renyi<double>(20, 0.3, WeightMode::unit, 5);
  SpectralDecomposition<double> d = eigendecompose(J);
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "reset gives zero amplitudes, zero time and pbar 1") {
  Environment env(J, d, small_config(4));
  const Eigen::MatrixXd obs = env.reset(1);
  REQUIRE(obs.rows() == 22);
  REQUIRE(obs.cols() == 4);
  CHECK(obs.topRows(20).isZero());
  CHECK((obs.row(20).array() == 0.0).all());
  CHECK((obs.row(21).array() == 1.0).all());
  Environment again(J, d, small_config(4));
  CHECK(again.reset(1) == obs);
}

TEST_CASE_FIXTURE(Fixture, "configuration and ordering errors") {
  EnvConfig bad = small_config(2);
  bad.interval = 7;
  CHECK_THROWS_AS(Environment(J, d, bad), std::invalid_argument);
  Environment env(J, d, small_config(2));
  std::vector<int> hold(2, 1);
  CHECK_THROWS_AS(env.step(hold), std::logic_error);
  env.reset(3);
  CHECK_THROWS_AS(env.step(std::vector<int>{1}), std::invalid_argument);
  CHECK_THROWS_AS(env.step(std::vector<int>{1, 3}), std::invalid_argument);
  Leaderboard board(2);
  Engine rng(1);
  CHECK_THROWS_AS(env.finalize(board, rng), std::logic_error);
  while (!env.done()) env.step(hold);
  CHECK_THROWS_AS(env.step(hold), std::logic_error);
}

TEST_CASE_FIXTURE(Fixture, "episodes last exactly N/m steps with exact elapsed time") {
  for (Index m : {1, 10, 25}) {
    EnvConfig cfg = small_config(3);
    cfg.interval = m;
    Environment env(J, d, cfg);
    env.reset(2);
    std::vector<int> acts{0, 1, 2};
    Index steps = 0;
    while (!env.done()) {
      const Eigen::MatrixXd obs = env.step(acts);
      ++steps;
      CHECK((obs.row(20).array() == double(steps * m) / 1000.0).all());
    }
    CHECK(steps == 1000 / m);
    CHECK(env.iteration() == 1000);
  }
}

TEST_CASE_FIXTURE(Fixture, "hold actions reproduce the linear anchors") {
  Environment env(J, d, small_config(2));
  env.reset(4);
  std::vector<int> hold(2, static_cast<int>(Action::hold));
  while (!env.done()) env.step(hold);
  const auto& a = env.anchors();
  REQUIRE(a.rows() == 101);
  for (Index k = 0; k <= 100; ++k) {
    CHECK(a(k, 0) == linear_pbar(k * 10, 1000));
    CHECK(a(k, 1) == a(k, 0));
  }
  CHECK(a(100, 0) == 0.0);
  CHECK(a(1, 0) == doctest::Approx(0.99));

  std::ostringstream csv;
  env.write_anchor_trace(csv);
  CHECK(csv.str().rfind("episode,step,pbar\n0,0,1\n", 0) == 0);
}

TEST_CASE_FIXTURE(Fixture, "actions move the anchor and the observed pbar") {
  Environment env(J, d, small_config(3));
  env.reset(4);
  const Eigen::MatrixXd obs = env.step(std::vector<int>{0, 1, 2});
  CHECK(obs(21, 0) == doctest::Approx(0.95));
  CHECK(obs(21, 1) == doctest::Approx(0.99));
  CHECK(obs(21, 2) == doctest::Approx(1.03));
}

TEST_CASE_FIXTURE(Fixture, "noise-free episodes with equal actions are identical") {
  Environment env(J, d, small_config(3, 0.0));
  env.reset(9);
  std::vector<int> acts(3, 2);
  Eigen::MatrixXd obs;
  while (!env.done()) obs = env.step(acts);
  CHECK(obs.col(0) == obs.col(1));
  CHECK(obs.col(1) == obs.col(2));
}

TEST_CASE("eigen-amplitude observations ignore node labels") {
  // relabeling nodes permutes c and the rows of Q together, so e = Q^T c is
  // unchanged as long as the eigenvector sign rule picks the same signs
  const Index n = 15;
  const auto J = generate_erdos_renyi<double>(n, 0.4, WeightMode::signed_unit, 12);
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
  for (Index i = 0; i < n; ++i) P.indices()[i] = int(perm[i]);
  const CouplingMatrix<double> JP(P * J.values() * P.transpose());
  const auto d = eigendecompose(J), dp = eigendecompose(JP);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  auto s = BatchState<double>::zeros(n, 2);
  for (Index i = 0; i < n; ++i)
    for (Index b = 0; b < 2; ++b) s.amplitudes(i, b) = u(rng);
  auto sp = s;
  sp.amplitudes = P * s.amplitudes;

  SimCimConfig cfg;
  cfg.noise = 0.0;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.05;
  NoiseSource noise(0, 2), noise_p(0, 2);
  StepWorkspace<double> ws, wsp;
  for (Index t = 0; t < 200; ++t) {
    const double pbar = interpolate(1.0, 0.0, t, 200);
    step(J, s, denormalize_regularization(pbar, d), cfg, noise, ws);
    step(JP, sp, denormalize_regularization(pbar, dp), cfg, noise_p, wsp);
    if (t % 20 == 19)
      REQUIRE((to_eigenbasis(d, s.amplitudes) - to_eigenbasis(dp, sp.amplitudes))
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
  }
}

TEST_CASE_FIXTURE(Fixture, "finalize computes cuts and ranked rewards") {
  Environment env(J, d, small_config(8));
  env.reset(6);
  std::vector<int> hold(8, 1);
  while (!env.done()) env.step(hold);
  Leaderboard board(8);
  Engine rng(0);
  const auto out = env.finalize(board, rng);
  REQUIRE(out.cuts.size() == 8);
  const auto spins = spins_from_amplitudes(env.state().amplitudes);
  for (Index b = 0; b < 8; ++b)
    CHECK(out.cuts[b] == cut_value(J, Eigen::VectorXi(spins.col(b))));
  CHECK(board.size() == 8);
  CHECK(std::abs(out.terminal_rewards.mean()) < 1e-12);
  CHECK(out.threshold == percentile(board, 99));
}

TEST_CASE_FIXTURE(Fixture, "single episode on a fresh board ties with itself") {
  Environment env(J, d, small_config(1));
  env.reset(6);
  while (!env.done()) env.step(std::vector<int>{1});
  Leaderboard board(5);
  Engine rng(0);
  const auto out = env.finalize(board, rng);
  CHECK(out.terminal_rewards[0] == 0.0);
  CHECK(out.counts.tied == 1);
}

TEST_CASE_FIXTURE(Fixture, "identical cuts on a fresh board all get zero") {
  // an empty graph cuts nothing, whatever the spins
  const auto empty = CouplingMatrix<double>::zero(6);
  const auto de = eigendecompose(empty);
  Environment env(empty, de, small_config(16));
  env.reset(6);
  while (!env.done()) env.step(std::vector<int>(16, 2));
  Leaderboard board(16);
  Engine rng(0);
  const auto out = env.finalize(board, rng);
  CHECK(out.terminal_rewards.isZero());
}

TEST_CASE_FIXTURE(Fixture, "a cut above every prior entry earns +q/100") {
  Environment env(J, d, small_config(1));
  env.reset(6);
  while (!env.done()) env.step(std::vector<int>{1});
  Leaderboard board(100);
  for (int i = 0; i < 99; ++i) board.push(-1.0);  // below any unit-graph cut
  Engine rng(0);
  const auto out = env.finalize(board, rng);
  CHECK(out.terminal_rewards[0] == doctest::Approx(0.99));
}

TEST_CASE_FIXTURE(Fixture, "R2 rewards are plus or minus one") {
  EnvConfig cfg = small_config(8);
  cfg.reward.scheme = RewardScheme::r2;
  Environment env(J, d, cfg);
  env.reset(6);
  while (!env.done()) env.step(std::vector<int>(8, 1));
  Leaderboard board(8);
  Engine rng(0);
  const auto out = env.finalize(board, rng);
  for (Index b = 0; b < 8; ++b) CHECK(std::abs(out.terminal_rewards[b]) == 1.0);
}
