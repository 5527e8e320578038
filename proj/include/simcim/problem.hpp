#pragma once

// Ising / Max-Cut problem representation.
//
// Sign convention: a Gset file stores the Max-Cut adjacency W. The coupling
// matrix used everywhere in this library is J = -W, so that
//
//   cut(J, x)    = 1/4 (x^T J x - sum_ij J_ij)
//   energy(J, x) = -x^T J x
//
// and maximizing the cut is the same as minimizing the Ising energy.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simcim {

using Index = Eigen::Index;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Spins are stored as +1 / -1 integers.
using SpinVector = Eigen::VectorXi;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Dense symmetric coupling matrix with zero diagonal. Immutable after
/// construction.
template <class Scalar = double>
class CouplingMatrix {
 public:
  CouplingMatrix() = default;

  explicit CouplingMatrix(Matrix<Scalar> values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols())
      throw std::invalid_argument("coupling matrix must be square");
    if (values_.rows() < 1) throw std::invalid_argument("coupling matrix must be non-empty");
    for (Index j = 0; j < values_.cols(); ++j) {
      if (values_(j, j) != Scalar(0))
        throw std::invalid_argument("coupling matrix diagonal must be zero (node " +
                                    std::to_string(j) + ")");
      for (Index i = 0; i < j; ++i)
        if (values_(i, j) != values_(j, i))
          throw std::invalid_argument("coupling matrix must be symmetric");
    }
  }

  static CouplingMatrix zero(Index n) { return CouplingMatrix(Matrix<Scalar>::Zero(n, n)); }

  Index size() const noexcept { return values_.rows(); }
  const Matrix<Scalar>& values() const noexcept { return values_; }
  Scalar operator()(Index i, Index j) const { return values_(i, j); }

  Scalar total() const { return values_.sum(); }

  /// Number of nonzero couplings i < j.
  Index edge_count() const {
    Index count = 0;
    for (Index j = 0; j < size(); ++j)
      for (Index i = 0; i < j; ++i)
        if (values_(i, j) != Scalar(0)) ++count;
    return count;
  }

  /// max_i sum_j |J_ij|
  Scalar row_sum_norm() const { return values_.cwiseAbs().rowwise().sum().maxCoeff(); }

  template <class Other>
  CouplingMatrix<Other> cast() const {
    return CouplingMatrix<Other>(values_.template cast<Other>());
  }

 private:
  Matrix<Scalar> values_;
};

template <class Scalar = double>
struct GsetInstance {
  std::string name;
  CouplingMatrix<Scalar> matrix;
  std::optional<long long> best_known_cut;
};

namespace detail {

template <class Derived>
void check_spins(const Eigen::MatrixBase<Derived>& x, Index n) {
  if (x.rows() != n)
    throw std::invalid_argument("spin configuration has length " + std::to_string(x.rows()) +
                                ", expected " + std::to_string(n));
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      const auto v = x(i, j);
      if (v != 1 && v != -1) throw std::invalid_argument("spin values must be +1 or -1");
    }
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  if constexpr (std::is_integral_v<T>) {
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end;
  } else {
    // from_chars for floating point is not reliable on every libstdc++ we
    // target; strtod handles the Gset weight column fine.
    std::string buf(token);
    char* end = nullptr;
    out = static_cast<T>(std::strtod(buf.c_str(), &end));
    return end == buf.c_str() + buf.size() && std::isfinite(static_cast<double>(out));
  }
}

}  // namespace detail

/// Parse a Gset file: header "n m", then m lines "i j w" with 1-based
/// indices. Weights are negated on load (J = -W).
template <class Scalar = double>
GsetInstance<Scalar> parse_gset(std::string_view text, std::string name = {}) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  long long n = 0, m = 0, seen = 0;
  Matrix<Scalar> values;
  std::set<std::pair<long long, long long>> edges;

  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = detail::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto tok = detail::split_ws(line);

    if (!have_header) {
      if (tok.size() != 2 || !detail::parse_number(tok[0], n) || !detail::parse_number(tok[1], m))
        throw ParseError(line_no, "expected header \"n m\"");
      if (n < 1) throw ParseError(line_no, "node count must be positive");
      if (m < 0) throw ParseError(line_no, "edge count must be non-negative");
      values = Matrix<Scalar>::Zero(n, n);
      have_header = true;
      continue;
    }

    long long i = 0, j = 0;
    Scalar w{};
    if (tok.size() != 3 || !detail::parse_number(tok[0], i) || !detail::parse_number(tok[1], j) ||
        !detail::parse_number(tok[2], w))
      throw ParseError(line_no, "expected edge \"i j w\"");
    if (i < 1 || i > n || j < 1 || j > n)
      throw ParseError(line_no, "node index out of range [1, " + std::to_string(n) + "]");
    if (i == j) throw ParseError(line_no, "self-loop on node " + std::to_string(i));
    if (!edges.emplace(std::min(i, j), std::max(i, j)).second)
      throw ParseError(line_no, "duplicate edge " + std::to_string(i) + " " + std::to_string(j));
    if (++seen > m) throw ParseError(line_no, "more edges than declared in header");
    values(i - 1, j - 1) = -w;
    values(j - 1, i - 1) = -w;
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  if (seen != m)
    throw ParseError(line_no, "header declares " + std::to_string(m) + " edges, found " +
                                  std::to_string(seen));
  return {std::move(name), CouplingMatrix<Scalar>(std::move(values)), std::nullopt};
}

/// Inverse of parse_gset: emits "n m" then one "i j w" line per edge (i < j,
/// row-major order) with w = -J_ij.
template <class Scalar>
std::string to_gset(const CouplingMatrix<Scalar>& matrix) {
  std::ostringstream out;
  out.precision(17);
  const auto& J = matrix.values();
  out << matrix.size() << ' ' << matrix.edge_count() << '\n';
  for (Index i = 0; i < matrix.size(); ++i)
    for (Index j = i + 1; j < matrix.size(); ++j) {
      if (J(i, j) == Scalar(0)) continue;
      const double w = -static_cast<double>(J(i, j));
      out << (i + 1) << ' ' << (j + 1) << ' ';
      if (w == std::round(w) && std::abs(w) < 1e15)
        out << static_cast<long long>(w);
      else
        out << w;
      out << '\n';
    }
  return out.str();
}

/// cut(J, x) = 1/4 (x^T J x - sum J)
template <class Scalar, class Derived>
Scalar cut_value(const CouplingMatrix<Scalar>& matrix, const Eigen::MatrixBase<Derived>& x) {
  detail::check_spins(x, matrix.size());
  const Vector<Scalar> s = x.template cast<Scalar>();
  return Scalar(0.25) * (s.dot(matrix.values() * s) - matrix.total());
}

/// -x^T J x
template <class Scalar, class Derived>
Scalar ising_energy(const CouplingMatrix<Scalar>& matrix, const Eigen::MatrixBase<Derived>& x) {
  detail::check_spins(x, matrix.size());
  const Vector<Scalar> s = x.template cast<Scalar>();
  return -s.dot(matrix.values() * s);
}

/// Cut values for every column of an n x B matrix of +1/-1 entries.
template <class Scalar, class Derived>
RowVector<Scalar> cut_values(const CouplingMatrix<Scalar>& matrix,
                             const Eigen::MatrixBase<Derived>& spins) {
  if (spins.rows() != matrix.size()) throw std::invalid_argument("spin batch has wrong row count");
  const Matrix<Scalar> s = spins.template cast<Scalar>();
  const Matrix<Scalar> js = matrix.values() * s;
  RowVector<Scalar> cuts = (s.cwiseProduct(js)).colwise().sum();
  cuts.array() -= matrix.total();
  cuts *= Scalar(0.25);
  return cuts;
}

enum class WeightMode { unit, signed_unit };

/// Erdős–Rényi G(n, p). Unit mode: every edge has W = 1. Signed mode: W = +/-1
/// with equal probability. Returned as J = -W.
template <class Scalar = double>
CouplingMatrix<Scalar> generate_erdos_renyi(Index n, double connect_prob, WeightMode mode,
                                            std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_erdos_renyi: n must be at least 2");
  if (!(connect_prob >= 0.0 && connect_prob <= 1.0))
    throw std::invalid_argument("generate_erdos_renyi: connection probability must be in [0, 1]");
  std::mt19937_64 engine(seed);
  std::bernoulli_distribution connect(connect_prob);
  std::bernoulli_distribution negative(0.5);
  Matrix<Scalar> J = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (!connect(engine)) continue;
      Scalar w = 1;
      if (mode == WeightMode::signed_unit && negative(engine)) w = -1;
      J(i, j) = J(j, i) = -w;
    }
  return CouplingMatrix<Scalar>(std::move(J));
}

template <class Scalar>
struct MaxCutSolution {
  SpinVector spins;
  Scalar cut;
};

inline constexpr Index kBruteForceLimit = 24;

/// Exhaustive maximum cut over 2^(n-1) sign patterns (the last spin is pinned
/// to +1, since x and -x give the same cut). Walks patterns in Gray-code
/// order with an incremental local field.
template <class Scalar>
MaxCutSolution<Scalar> brute_force_max_cut(const CouplingMatrix<Scalar>& matrix) {
  const Index n = matrix.size();
  if (n > kBruteForceLimit)
    throw std::invalid_argument("brute_force_max_cut: n = " + std::to_string(n) +
                                " exceeds the limit of " + std::to_string(kBruteForceLimit));
  const Matrix<double> J = matrix.values().template cast<double>();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd field = J * x;
  double quad = x.dot(field);
  double best_quad = quad;
  Eigen::VectorXd best = x;

  const std::uint64_t patterns = std::uint64_t{1} << (n - 1);
  for (std::uint64_t k = 1; k < patterns; ++k) {
    const Index flip = std::countr_zero(k);
    // x^T J x changes by -4 x_f (J x)_f when x_f flips (J_ff = 0).
    quad -= 4.0 * x[flip] * field[flip];
    x[flip] = -x[flip];
    field += 2.0 * x[flip] * J.col(flip);
    if (quad > best_quad) {
      best_quad = quad;
      best = x;
    }
  }
  SpinVector spins = best.cast<int>();
  return {spins, cut_value(matrix, spins)};
}

}  // namespace simcim
