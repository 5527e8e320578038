#include "simcim/spectral_cache.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace simcim {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'C', 'E', 'I', 'G', '1', '\0', '\0'};

}  // namespace

std::string content_hash(const CouplingMatrix<double>& matrix) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 init failed");
  const std::int64_t n = matrix.size();
  EVP_DigestUpdate(ctx.get(), &n, sizeof n);
  EVP_DigestUpdate(ctx.get(), matrix.values().data(),
                   sizeof(double) * static_cast<std::size_t>(matrix.values().size()));
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

SpectralCache::SpectralCache(std::filesystem::path directory) : dir_(std::move(directory)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SpectralCache::path_for(const std::string& hash) const {
  return dir_ / (hash + ".eig");
}

std::optional<SpectralDecomposition<double>> SpectralCache::load(const std::string& hash) const {
  std::ifstream in(path_for(hash), std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  std::int64_t n = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || magic != kMagic || n < 1) return std::nullopt;
  SpectralDecomposition<double> d;
  d.values.resize(n);
  d.vectors.resize(n, n);
  in.read(reinterpret_cast<char*>(d.values.data()), sizeof(double) * n);
  in.read(reinterpret_cast<char*>(d.vectors.data()), sizeof(double) * n * n);
  if (!in) return std::nullopt;
  return d;
}

void SpectralCache::store(const std::string& hash,
                          const SpectralDecomposition<double>& decomp) const {
  const auto target = path_for(hash);
  const auto tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write spectral cache file " + tmp);
    const std::int64_t n = decomp.size();
    out.write(kMagic.data(), kMagic.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(decomp.values.data()), sizeof(double) * n);
    out.write(reinterpret_cast<const char*>(decomp.vectors.data()), sizeof(double) * n * n);
  }
  std::filesystem::rename(tmp, target);
}

SpectralDecomposition<double> SpectralCache::get(const CouplingMatrix<double>& matrix) const {
  const auto hash = content_hash(matrix);
  if (auto hit = load(hash); hit && hit->size() == matrix.size()) return *hit;
  auto decomp = eigendecompose(matrix);
  store(hash, decomp);
  return decomp;
}

}  // namespace simcim
