#ifndef SCATLAB_RNG_HPP
#define SCATLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace scatlab {

/// Derives an independent stream seed from a root seed and a counter
/// (SplitMix64 finalizer), so pipeline stages can be re-run in isolation.
std::uint64_t split_seed(std::uint64_t root, std::uint64_t counter);

/// Stage counters used with split_seed.
enum class Stage : std::uint64_t {
  training_samples = 1,
  train_split = 2,
  weight_init = 3,
  epoch_shuffle = 4,
  synthetic_calibration = 5,
  noise = 6,
};

inline std::mt19937_64 stage_engine(std::uint64_t root, Stage stage, std::uint64_t counter = 0) {
  return std::mt19937_64(split_seed(split_seed(root, std::uint64_t(stage)), counter));
}

}  // namespace scatlab

#endif  // SCATLAB_RNG_HPP
