#pragma once

#include <cstdint>

namespace pvdaq {

// splitmix64, used as a stateless hash noise source so simulator traces are
// bit-identical across platforms (std:: distributions are not).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// deterministic value noise in [0, 1), keyed by (seed, stream, index)
inline double unit_noise(std::uint64_t seed, std::uint64_t stream, std::int64_t index) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(stream));
  h = splitmix64(h ^ static_cast<std::uint64_t>(index));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace pvdaq
