#pragma once

// Eigendecomposition of the coupling matrix and the quantities derived from it:
// eigenbasis amplitudes, per-eigenvector problem features, and the mapping
// from normalized regularization to the absolute coefficient p.

#include "simcim/problem.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>
#include <stdexcept>

namespace simcim {

template <class Scalar = double>
struct SpectralDecomposition {
  Matrix<Scalar> vectors;  // columns are eigenvectors
  Vector<Scalar> values;   // sorted in decreasing order

  Index size() const noexcept { return values.size(); }
  Scalar max_value() const { return values(0); }
  Scalar min_value() const { return values(values.size() - 1); }
};

class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A = Q diag(values) Q^T for any symmetric A, eigenvalues decreasing. Each
/// eigenvector is oriented so that its largest-magnitude component is positive.
template <class Derived>
SpectralDecomposition<typename Derived::Scalar> eigendecompose(
    const Eigen::MatrixBase<Derived>& symmetric) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> J = symmetric;
  if (J.rows() != J.cols()) throw std::invalid_argument("eigendecompose: matrix must be square");
  const Index n = J.rows();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(J, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    const Matrix<Scalar>& Q = solver.eigenvectors();
    Matrix<Scalar> d = Q.transpose() * J * Q;
    d.diagonal().setZero();
    std::ostringstream msg;
    msg << "eigendecomposition did not converge; off-diagonal norm " << d.norm();
    throw EigenSolverError(msg.str());
  }

  SpectralDecomposition<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < n; ++j) {
    Index arg = 0;
    out.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, j) < Scalar(0)) out.vectors.col(j) *= Scalar(-1);
  }
  return out;
}

template <class Scalar>
SpectralDecomposition<Scalar> eigendecompose(const CouplingMatrix<Scalar>& matrix) {
  return eigendecompose(matrix.values());
}

/// e = Q^T c. Works on a single vector or on an n x B batch.
template <class Scalar, class Derived>
Matrix<Scalar> to_eigenbasis(const SpectralDecomposition<Scalar>& decomp,
                             const Eigen::MatrixBase<Derived>& c) {
  if (c.rows() != decomp.size())
    throw std::invalid_argument("to_eigenbasis: amplitude length " + std::to_string(c.rows()) +
                                " does not match n = " + std::to_string(decomp.size()));
  return decomp.vectors.transpose() * c;
}

/// phi_j = (1/n) sum_i |Q_ij|
template <class Scalar>
Vector<Scalar> problem_features(const SpectralDecomposition<Scalar>& decomp) {
  const auto n = static_cast<Scalar>(decomp.size());
  return decomp.vectors.cwiseAbs().colwise().sum().transpose() / n;
}

/// p = pbar (max lambda - min lambda) + min lambda
template <class Scalar>
Scalar denormalize_regularization(Scalar pbar, const SpectralDecomposition<Scalar>& decomp) {
  if (decomp.size() < 1) throw std::invalid_argument("empty decomposition");
  return pbar * (decomp.max_value() - decomp.min_value()) + decomp.min_value();
}

/// Reconstruction residual ||Q L Q^T - J||_F / ||J||_F (absolute when J = 0).
template <class Scalar>
Scalar reconstruction_error(const SpectralDecomposition<Scalar>& decomp,
                            const CouplingMatrix<Scalar>& matrix) {
  const Matrix<Scalar> rebuilt =
      decomp.vectors * decomp.values.asDiagonal() * decomp.vectors.transpose();
  const Scalar scale = matrix.values().norm();
  const Scalar diff = (rebuilt - matrix.values()).norm();
  return scale > Scalar(0) ? diff / scale : diff;
}

/// max |Q^T Q - I|
template <class Scalar>
Scalar orthogonality_error(const SpectralDecomposition<Scalar>& decomp) {
  const Index n = decomp.size();
  return (decomp.vectors.transpose() * decomp.vectors - Matrix<Scalar>::Identity(n, n))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace simcim
