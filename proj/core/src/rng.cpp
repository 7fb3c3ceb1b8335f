#include "dasein/rng.hpp"

namespace dasein {

namespace {

// splitmix64 finalizer, used as a stateless mixing function.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = mix(root);
  s = mix(s ^ fnv1a(label));
  s = mix(s ^ a);
  s = mix(s ^ b);
  s = mix(s ^ c);
  return s;
}

}  // namespace dasein
