#include "cmas/rng.hpp"

namespace cmas {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream rng_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t view) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(step + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ splitmix64(view + 0x85157AF5ULL));
  return RngStream(h);
}

}  // namespace cmas
