#pragma once

#include <cstdint>
#include <random>

namespace deconvrf {

/// Independent generator streams used by one simulation.
enum class StreamRole : std::uint64_t
{
  innovations = 1,
  noise = 2,
};

/// SplitMix64 finaliser; a bijective mixer on 64-bit words.
constexpr std::uint64_t
splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Keyed seed derivation: the key (base, counter) is hashed so that distinct
/// counters give unrelated seeds. Used for per-replicate and per-role streams.
constexpr std::uint64_t
derive_seed(std::uint64_t base, std::uint64_t counter) noexcept
{
  return splitmix64(splitmix64(base) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine
make_engine(std::uint64_t seed, StreamRole role)
{
  return Engine(derive_seed(seed, static_cast<std::uint64_t>(role)));
}

} // namespace deconvrf
