#pragma once

// Actor and critic MLPs over a single flat parameter vector.
//
//   actor:  x -> tanh(W1 x + b1) -> tanh(W2 h1 + b2) = h2
//           h2' = gamma(phi) * h2 + beta(phi)     (FiLM, elementwise)
//           logits = W3 h2' + b3                  (3 actions)
//   film:   gamma = Wg phi + bg,  beta = Wb phi + bb
//   critic: x -> tanh -> tanh -> scalar value     (no FiLM)

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace simcim {

using Index = Eigen::Index;

struct NetworkShape {
  Index input = 0;     // n + 2
  Index hidden = 256;
  Index features = 0;  // length of phi
  bool film = true;
  Index actions = 3;

  bool operator==(const NetworkShape&) const = default;
};

struct ParameterBlock {
  std::string name;
  Index rows;
  Index cols;
  Index offset;
};

class ParameterLayout {
 public:
  explicit ParameterLayout(const NetworkShape& shape);
  const std::vector<ParameterBlock>& blocks() const noexcept { return blocks_; }
  const ParameterBlock& operator[](const std::string& name) const;
  Index size() const noexcept { return size_; }

 private:
  std::vector<ParameterBlock> blocks_;
  Index size_ = 0;
};

/// Parameter vector plus its layout. Gradients use the same type.
class NetworkParameters {
 public:
  explicit NetworkParameters(const NetworkShape& shape);

  const NetworkShape& shape() const noexcept { return shape_; }
  const ParameterLayout& layout() const noexcept { return layout_; }
  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  Eigen::Map<Eigen::MatrixXd> block(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const;

  void set_zero() { values_.setZero(); }
  bool all_finite() const { return values_.allFinite(); }

 private:
  NetworkShape shape_;
  ParameterLayout layout_;
  Eigen::VectorXd values_;
};

/// Orthogonal hidden layers (gain sqrt 2), actor head gain 0.01, critic head
/// gain 1, zero biases, identity FiLM (gamma = 1, beta = 0).
NetworkParameters initialize_network(const NetworkShape& shape, std::uint64_t seed);

struct ActorOutput {
  Eigen::MatrixXd logits;  // actions x B
  Eigen::MatrixXd probs;   // actions x B
};

/// Intermediate activations kept for the backward pass.
struct ActorCache {
  Eigen::MatrixXd h1, h2, h2_film;
  Eigen::VectorXd gamma, beta;
  ActorOutput out;
};

struct CriticCache {
  Eigen::MatrixXd h1, h2;
  Eigen::RowVectorXd values;
};

ActorOutput actor_forward(const NetworkParameters& params, const Eigen::MatrixXd& observations,
                          const Eigen::VectorXd& phi);
ActorCache actor_forward_cached(const NetworkParameters& params,
                                const Eigen::MatrixXd& observations, const Eigen::VectorXd& phi);
/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
void actor_backward(const NetworkParameters& params, const ActorCache& cache,
                    const Eigen::MatrixXd& observations, const Eigen::VectorXd& phi,
                    const Eigen::MatrixXd& dlogits, NetworkParameters& grad);

Eigen::RowVectorXd critic_forward(const NetworkParameters& params,
                                  const Eigen::MatrixXd& observations);
CriticCache critic_forward_cached(const NetworkParameters& params,
                                  const Eigen::MatrixXd& observations);
void critic_backward(const NetworkParameters& params, const CriticCache& cache,
                     const Eigen::MatrixXd& observations, const Eigen::RowVectorXd& dvalues,
                     NetworkParameters& grad);

/// Column-wise softmax with max subtraction.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

/// Text checkpoint: shape header, block table, SHA-256 of the values, then one
/// hexfloat per line. Loading checks shape consistency and the hash.
void save_checkpoint(const NetworkParameters& params, std::ostream& out);
NetworkParameters load_checkpoint(std::istream& in);
void save_checkpoint(const NetworkParameters& params, const std::string& path);
NetworkParameters load_checkpoint(const std::string& path);

}  // namespace simcim
