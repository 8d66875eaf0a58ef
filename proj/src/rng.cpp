#include "tapspin/rng.hpp"

namespace tapspin {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, Stream tag) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ cell);
  return splitmix64(s ^ static_cast<std::uint64_t>(tag));
}

std::uint64_t derive_seed(std::uint64_t seed, Stream tag) {
  return derive_seed(seed, 0, tag);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tapspin
