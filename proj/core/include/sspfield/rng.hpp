#pragma once

#include <cstdint>

namespace sspfield {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform value in [0, 1) keyed by a counter tuple. Dropout masks are drawn
/// from this so a re-run (or a finite-difference re-forward) at the same keys
/// sees the exact same mask.
inline double unit_from_key(std::uint64_t seed, std::uint64_t step,
                            std::uint64_t site, std::uint64_t elem) {
  std::uint64_t h = splitmix64(splitmix64(splitmix64(seed ^ 0x5350464c44ULL) ^
                                          step) ^
                               splitmix64(site * 0x9e3779b97f4a7c15ULL + elem));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace sspfield
