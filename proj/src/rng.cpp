#include "scatlab/rng.hpp"

namespace scatlab {

std::uint64_t split_seed(std::uint64_t root, std::uint64_t counter) {
  std::uint64_t z = root + (counter + 1) * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace scatlab
