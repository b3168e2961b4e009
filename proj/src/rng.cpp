#include "odm/rng.hpp"

namespace odm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

Rng make_rng(std::uint64_t seed, std::string_view stream) {
  std::seed_seq seq{splitmix64(seed ^ fnv1a64(stream)), splitmix64(seed + 1) ^ fnv1a64(stream)};
  return Rng(seq);
}

}  // namespace odm
