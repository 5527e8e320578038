#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace simcim {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed and a counter, so parallel work never shares an engine.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `path` below `master`. Each element of the path descends
/// one level, e.g. split_seed(master, {component, instance, column}).
constexpr std::uint64_t split_seed(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix_seed(master);
  for (auto p : path) s = mix_seed(s ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// Well-known component tags for split_seed.
namespace stream {
inline constexpr std::uint64_t generator = 1;
inline constexpr std::uint64_t simcim = 2;
inline constexpr std::uint64_t lr_test = 3;
inline constexpr std::uint64_t policy = 4;
inline constexpr std::uint64_t ppo = 5;
inline constexpr std::uint64_t rewards = 6;
inline constexpr std::uint64_t cmaes = 7;
inline constexpr std::uint64_t init = 8;
inline constexpr std::uint64_t evaluation = 9;
}  // namespace stream

}  // namespace simcim
