#include "simcim/network.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace simcim;

namespace {

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

}  // namespace

TEST_CASE("layout covers every block exactly once") {
  const NetworkShape shape{10, 16, 8, true, 3};
  const ParameterLayout layout(shape);
  Index expected = 16 * 10 + 16 + 16 * 16 + 16 + 3 * 16 + 3     // actor
                   + 2 * (16 * 8 + 16)                          // film
                   + 16 * 10 + 16 + 16 * 16 + 16 + 16 + 1;      // critic
  CHECK(layout.size() == expected);
  Index offset = 0;
  for (const auto& b : layout.blocks()) {
    CHECK(b.offset == offset);
    offset += b.rows * b.cols;
  }
  const ParameterLayout plain({10, 16, 8, false, 3});
  CHECK(plain.size() == expected - 2 * (16 * 8 + 16));
  CHECK_THROWS_AS(layout["nope"], std::out_of_range);
}

TEST_CASE("initialization: orthogonal layers, small heads, identity FiLM") {
  const NetworkShape shape{62, 256, 60, true, 3};
  const auto p = initialize_network(shape, 7);
  const Eigen::MatrixXd w1 = p.block("actor.w1");
  CHECK((w1.transpose() * w1 - 2.0 * Eigen::MatrixXd::Identity(62, 62)).cwiseAbs().maxCoeff() <
        1e-10);
  const Eigen::MatrixXd w2 = p.block("critic.w2");
  CHECK((w2 * w2.transpose() - 2.0 * Eigen::MatrixXd::Identity(256, 256)).cwiseAbs().maxCoeff() <
        1e-10);
  const Eigen::MatrixXd head = p.block("actor.w3");
  CHECK((head * head.transpose() - 1e-4 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(p.block("film.scale_w").isZero());
  CHECK((p.block("film.scale_b").array() == 1.0).all());
  CHECK(p.block("film.shift_w").isZero());
  CHECK(p.block("film.shift_b").isZero());
  CHECK(p.block("actor.b1").isZero());
  CHECK(initialize_network(shape, 7).values() == p.values());
  CHECK(initialize_network(shape, 8).values() != p.values());

  // near-uniform initial policy
  const auto out = actor_forward(p, random_matrix(62, 5, 1), random_matrix(60, 1, 2).col(0));
  CHECK((out.probs.array() - 1.0 / 3.0).abs().maxCoeff() < 0.05);
}

TEST_CASE("identity FiLM matches a network without FiLM") {
  const NetworkShape with{6, 8, 4, true, 3}, without{6, 8, 4, false, 3};
  auto a = initialize_network(with, 3);
  a.values() += random_matrix(a.values().size(), 1, 4, 0.1).col(0);
  a.block("film.scale_w").setZero();
  a.block("film.scale_b").setOnes();
  a.block("film.shift_w").setZero();
  a.block("film.shift_b").setZero();
  NetworkParameters b(without);
  for (const auto& blk : b.layout().blocks()) b.block(blk.name) = a.block(blk.name);
  const Eigen::MatrixXd obs = random_matrix(6, 9, 5);
  const Eigen::VectorXd phi = random_matrix(4, 1, 6).col(0);
  CHECK(actor_forward(a, obs, phi).logits == actor_forward(b, obs, phi).logits);
}

TEST_CASE("policy is a distribution and logits stay finite") {
  const NetworkShape shape{12, 32, 10, true, 3};
  auto p = initialize_network(shape, 1);
  p.values() += random_matrix(p.values().size(), 1, 2, 0.5).col(0);
  for (double scale : {1e-3, 1.0, 50.0}) {
    const auto out = actor_forward(p, random_matrix(12, 20, 3, scale), random_matrix(10, 1, 4).col(0));
    CHECK(out.logits.allFinite());
    CHECK((out.probs.array() > 0.0).all());
    CHECK((out.probs.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("zero weights: uniform policy and zero value") {
  NetworkParameters p({6, 8, 4, true, 3});
  const Eigen::MatrixXd obs = random_matrix(6, 4, 1);
  const auto out = actor_forward(p, obs, random_matrix(4, 1, 2).col(0));
  CHECK((out.probs.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  CHECK(critic_forward(p, obs).isZero());
}

TEST_CASE("critic is finite and column-wise") {
  auto p = initialize_network({6, 8, 4, true, 3}, 2);
  Eigen::MatrixXd obs(6, 3);
  obs.colwise() = random_matrix(6, 1, 1).col(0);
  const auto v = critic_forward(p, obs);
  CHECK(v.allFinite());
  CHECK(v[0] == v[1]);
  CHECK(v[1] == v[2]);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto p = initialize_network({6, 8, 4, true, 3}, 2);
  CHECK_THROWS_AS(actor_forward(p, Eigen::MatrixXd::Zero(5, 2), Eigen::VectorXd::Zero(4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(actor_forward(p, Eigen::MatrixXd::Zero(6, 2), Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(critic_forward(p, Eigen::MatrixXd::Zero(7, 2)), std::invalid_argument);
  CHECK_THROWS_AS(NetworkParameters({0, 8, 4, true, 3}), std::invalid_argument);
}

TEST_CASE("checkpoints round trip bit for bit and detect tampering") {
  auto p = initialize_network({6, 8, 4, true, 3}, 9);
  p.values() += random_matrix(p.values().size(), 1, 3, 1e-3).col(0);
  std::stringstream buf;
  save_checkpoint(p, buf);
  const std::string text = buf.str();
  std::istringstream in(text);
  const auto q = load_checkpoint(in);
  CHECK(q.shape() == p.shape());
  CHECK(q.values() == p.values());

  std::string tampered = text;
  const auto pos = tampered.rfind("0x");
  tampered[pos + 2] = tampered[pos + 2] == '1' ? '2' : '1';
  std::istringstream bad(tampered);
  CHECK_THROWS_WITH_AS(load_checkpoint(bad), "checkpoint: hash mismatch", std::runtime_error);

  std::string reshaped = text;
  reshaped.replace(reshaped.find("hidden 8"), 8, "hidden 9");
  std::istringstream wrong(reshaped);
  CHECK_THROWS_AS(load_checkpoint(wrong), std::runtime_error);
}
