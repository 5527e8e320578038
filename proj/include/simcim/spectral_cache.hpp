#pragma once

#include "simcim/spectral.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace simcim {

/// Hex SHA-256 of the matrix dimension and entries.
std::string content_hash(const CouplingMatrix<double>& matrix);

/// On-disk cache of eigendecompositions, one file per matrix hash:
///   magic "SCEIG1\0\0", n (int64), values (n doubles), vectors (n*n doubles, column-major)
class SpectralCache {
 public:
  explicit SpectralCache(std::filesystem::path directory);

  std::optional<SpectralDecomposition<double>> load(const std::string& hash) const;
  void store(const std::string& hash, const SpectralDecomposition<double>& decomp) const;

  /// Loads from the cache or computes and stores.
  SpectralDecomposition<double> get(const CouplingMatrix<double>& matrix) const;

  std::filesystem::path path_for(const std::string& hash) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace simcim
