#include "simcim/network.hpp"
#include "simcim/random.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace simcim {

ParameterLayout::ParameterLayout(const NetworkShape& shape) {
  if (shape.input < 1 || shape.hidden < 1 || shape.actions < 1)
    throw std::invalid_argument("network shape must be positive");
  if (shape.film && shape.features < 1)
    throw std::invalid_argument("FiLM needs a positive feature count");
  const Index in = shape.input, h = shape.hidden, f = shape.features, a = shape.actions;
  auto add = [&](std::string name, Index rows, Index cols) {
    blocks_.push_back({std::move(name), rows, cols, size_});
    size_ += rows * cols;
  };
  add("actor.w1", h, in);
  add("actor.b1", h, 1);
  add("actor.w2", h, h);
  add("actor.b2", h, 1);
  add("actor.w3", a, h);
  add("actor.b3", a, 1);
  if (shape.film) {
    add("film.scale_w", h, f);
    add("film.scale_b", h, 1);
    add("film.shift_w", h, f);
    add("film.shift_b", h, 1);
  }
  add("critic.w1", h, in);
  add("critic.b1", h, 1);
  add("critic.w2", h, h);
  add("critic.b2", h, 1);
  add("critic.w3", 1, h);
  add("critic.b3", 1, 1);
}

const ParameterBlock& ParameterLayout::operator[](const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw std::out_of_range("no parameter block named " + name);
}

NetworkParameters::NetworkParameters(const NetworkShape& shape)
    : shape_(shape), layout_(shape), values_(Eigen::VectorXd::Zero(layout_.size())) {}

Eigen::Map<Eigen::MatrixXd> NetworkParameters::block(const std::string& name) {
  const auto& b = layout_[name];
  return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> NetworkParameters::block(const std::string& name) const {
  const auto& b = layout_[name];
  return {values_.data() + b.offset, b.rows, b.cols};
}

namespace {

void orthogonal(Eigen::Map<Eigen::MatrixXd> w, double gain, Engine& rng) {
  std::normal_distribution<double> normal;
  const Index rows = w.rows(), cols = w.cols();
  const Index big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd g(big, small);
  for (Index j = 0; j < small; ++j)
    for (Index i = 0; i < big; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // sign fix makes the distribution uniform over orthogonal matrices
  const Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (Index j = 0; j < small; ++j)
    if (d[j] < 0) q.col(j) *= -1.0;
  if (rows >= cols)
    w = gain * q;
  else
    w = gain * q.transpose();
}

inline Eigen::MatrixXd tanh_layer(const Eigen::Map<const Eigen::MatrixXd>& w,
                                  const Eigen::Map<const Eigen::MatrixXd>& b,
                                  const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = w * x;
  z.colwise() += b.col(0);
  return z.array().tanh().matrix();
}

}  // namespace

NetworkParameters initialize_network(const NetworkShape& shape, std::uint64_t seed) {
  NetworkParameters p(shape);
  Engine rng(split_seed(seed, {stream::init}));
  const double root2 = std::sqrt(2.0);
  orthogonal(p.block("actor.w1"), root2, rng);
  orthogonal(p.block("actor.w2"), root2, rng);
  orthogonal(p.block("actor.w3"), 0.01, rng);
  orthogonal(p.block("critic.w1"), root2, rng);
  orthogonal(p.block("critic.w2"), root2, rng);
  orthogonal(p.block("critic.w3"), 1.0, rng);
  if (shape.film) p.block("film.scale_b").setOnes();
  return p;
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out = logits.rowwise() - logits.colwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().rowwise() /= out.colwise().sum().array();
  return out;
}

ActorCache actor_forward_cached(const NetworkParameters& params,
                                const Eigen::MatrixXd& observations, const Eigen::VectorXd& phi) {
  const auto& shape = params.shape();
  if (observations.rows() != shape.input)
    throw std::invalid_argument("actor: observation size " + std::to_string(observations.rows()) +
                                " does not match network input " + std::to_string(shape.input));
  if (shape.film && phi.size() != shape.features)
    throw std::invalid_argument("actor: feature size " + std::to_string(phi.size()) +
                                " does not match FiLM input " + std::to_string(shape.features));
  ActorCache c;
  c.h1 = tanh_layer(params.block("actor.w1"), params.block("actor.b1"), observations);
  c.h2 = tanh_layer(params.block("actor.w2"), params.block("actor.b2"), c.h1);
  if (shape.film) {
    c.gamma = params.block("film.scale_w") * phi + params.block("film.scale_b").col(0);
    c.beta = params.block("film.shift_w") * phi + params.block("film.shift_b").col(0);
    c.h2_film = (c.h2.array().colwise() * c.gamma.array()).matrix();
    c.h2_film.colwise() += c.beta;
  } else {
    c.h2_film = c.h2;
  }
  c.out.logits = params.block("actor.w3") * c.h2_film;
  c.out.logits.colwise() += params.block("actor.b3").col(0);
  c.out.probs = softmax(c.out.logits);
  return c;
}

ActorOutput actor_forward(const NetworkParameters& params, const Eigen::MatrixXd& observations,
                          const Eigen::VectorXd& phi) {
  return actor_forward_cached(params, observations, phi).out;
}

void actor_backward(const NetworkParameters& params, const ActorCache& cache,
                    const Eigen::MatrixXd& observations, const Eigen::VectorXd& phi,
                    const Eigen::MatrixXd& dlogits, NetworkParameters& grad) {
  const auto& shape = params.shape();
  grad.block("actor.w3").noalias() += dlogits * cache.h2_film.transpose();
  grad.block("actor.b3").col(0) += dlogits.rowwise().sum();
  const Eigen::MatrixXd dfilm = params.block("actor.w3").transpose() * dlogits;

  Eigen::MatrixXd dh2;
  if (shape.film) {
    const Eigen::VectorXd dgamma = dfilm.cwiseProduct(cache.h2).rowwise().sum();
    const Eigen::VectorXd dbeta = dfilm.rowwise().sum();
    grad.block("film.scale_w").noalias() += dgamma * phi.transpose();
    grad.block("film.scale_b").col(0) += dgamma;
    grad.block("film.shift_w").noalias() += dbeta * phi.transpose();
    grad.block("film.shift_b").col(0) += dbeta;
    dh2 = (dfilm.array().colwise() * cache.gamma.array()).matrix();
  } else {
    dh2 = dfilm;
  }
  const Eigen::MatrixXd dz2 = dh2.cwiseProduct((1.0 - cache.h2.array().square()).matrix());
  grad.block("actor.w2").noalias() += dz2 * cache.h1.transpose();
  grad.block("actor.b2").col(0) += dz2.rowwise().sum();
  const Eigen::MatrixXd dh1 = params.block("actor.w2").transpose() * dz2;
  const Eigen::MatrixXd dz1 = dh1.cwiseProduct((1.0 - cache.h1.array().square()).matrix());
  grad.block("actor.w1").noalias() += dz1 * observations.transpose();
  grad.block("actor.b1").col(0) += dz1.rowwise().sum();
}

CriticCache critic_forward_cached(const NetworkParameters& params,
                                  const Eigen::MatrixXd& observations) {
  if (observations.rows() != params.shape().input)
    throw std::invalid_argument("critic: observation size " + std::to_string(observations.rows()) +
                                " does not match network input " +
                                std::to_string(params.shape().input));
  CriticCache c;
  c.h1 = tanh_layer(params.block("critic.w1"), params.block("critic.b1"), observations);
  c.h2 = tanh_layer(params.block("critic.w2"), params.block("critic.b2"), c.h1);
  c.values = params.block("critic.w3") * c.h2;
  c.values.array() += params.block("critic.b3")(0, 0);
  return c;
}

Eigen::RowVectorXd critic_forward(const NetworkParameters& params,
                                  const Eigen::MatrixXd& observations) {
  return critic_forward_cached(params, observations).values;
}

void critic_backward(const NetworkParameters& params, const CriticCache& cache,
                     const Eigen::MatrixXd& observations, const Eigen::RowVectorXd& dvalues,
                     NetworkParameters& grad) {
  grad.block("critic.w3").noalias() += dvalues * cache.h2.transpose();
  grad.block("critic.b3")(0, 0) += dvalues.sum();
  const Eigen::MatrixXd dh2 = params.block("critic.w3").transpose() * dvalues;
  const Eigen::MatrixXd dz2 = dh2.cwiseProduct((1.0 - cache.h2.array().square()).matrix());
  grad.block("critic.w2").noalias() += dz2 * cache.h1.transpose();
  grad.block("critic.b2").col(0) += dz2.rowwise().sum();
  const Eigen::MatrixXd dh1 = params.block("critic.w2").transpose() * dz2;
  const Eigen::MatrixXd dz1 = dh1.cwiseProduct((1.0 - cache.h1.array().square()).matrix());
  grad.block("critic.w1").noalias() += dz1 * observations.transpose();
  grad.block("critic.b1").col(0) += dz1.rowwise().sum();
}

namespace {

std::string sha256_hex(const Eigen::VectorXd& values) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx.get(), values.data(), sizeof(double) * std::size_t(values.size()));
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream out;
  out << std::hex;
  for (unsigned int i = 0; i < len; ++i) {
    out.width(2);
    out.fill('0');
    out << static_cast<int>(digest[i]);
  }
  return out.str();
}

constexpr const char* kCheckpointMagic = "simcim-agent-checkpoint";

}  // namespace

void save_checkpoint(const NetworkParameters& params, std::ostream& out) {
  const auto& s = params.shape();
  out << kCheckpointMagic << " 1\n"
      << "input " << s.input << '\n'
      << "hidden " << s.hidden << '\n'
      << "features " << s.features << '\n'
      << "film " << (s.film ? 1 : 0) << '\n'
      << "actions " << s.actions << '\n'
      << "blocks " << params.layout().blocks().size() << '\n';
  for (const auto& b : params.layout().blocks())
    out << "block " << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
  out << "sha256 " << sha256_hex(params.values()) << '\n'
      << "values " << params.values().size() << '\n';
  char buf[64];
  for (Index i = 0; i < params.values().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%a\n", params.values()[i]);
    out << buf;
  }
}

NetworkParameters load_checkpoint(std::istream& in) {
  auto expect = [&](const std::string& key) {
    std::string got;
    if (!(in >> got) || got != key)
      throw std::runtime_error("checkpoint: expected '" + key + "', found '" + got + "'");
  };
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kCheckpointMagic || version != 1)
    throw std::runtime_error("checkpoint: unrecognized header");
  NetworkShape shape;
  int film = 0;
  std::size_t block_count = 0;
  expect("input");
  in >> shape.input;
  expect("hidden");
  in >> shape.hidden;
  expect("features");
  in >> shape.features;
  expect("film");
  in >> film;
  shape.film = film != 0;
  expect("actions");
  in >> shape.actions;
  expect("blocks");
  in >> block_count;
  NetworkParameters params(shape);
  if (block_count != params.layout().blocks().size())
    throw std::runtime_error("checkpoint: block count does not match shape");
  for (const auto& b : params.layout().blocks()) {
    std::string name;
    Index rows = 0, cols = 0;
    expect("block");
    in >> name >> rows >> cols;
    if (name != b.name || rows != b.rows || cols != b.cols)
      throw std::runtime_error("checkpoint: block " + name + " does not match the declared shape");
  }
  std::string hash;
  Index count = 0;
  expect("sha256");
  in >> hash;
  expect("values");
  in >> count;
  if (count != params.values().size()) throw std::runtime_error("checkpoint: value count mismatch");
  std::string token;
  for (Index i = 0; i < count; ++i) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated values");
    params.values()[i] = std::strtod(token.c_str(), nullptr);
  }
  if (sha256_hex(params.values()) != hash) throw std::runtime_error("checkpoint: hash mismatch");
  return params;
}

void save_checkpoint(const NetworkParameters& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  save_checkpoint(params, out);
}

NetworkParameters load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace simcim
