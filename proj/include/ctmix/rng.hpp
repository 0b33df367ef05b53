#ifndef CTMIX_RNG_HPP
#define CTMIX_RNG_HPP

#include <cstdint>

namespace ctmix {

// Splittable uniform stream: path k of a run seeds its own splitmix64 state
// from (seed, k), so a dataset is reproducible no matter how paths are
// scheduled across threads.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t path_index)
      : seed_(seed), path_index_(path_index),
        state_(mix(mix(seed) + 0x9E3779B97F4A7C15ULL * (path_index + 1))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }
  std::uint64_t draws() const { return count_; }

  std::uint64_t next_u64() {
    ++count_;
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// uniform on [0,1), 53-bit resolution
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// uniform on (0,1): rejects the (2^-53 probability) zero draw
  double next_uniform_open() {
    double u;
    do {
      u = next_uniform();
    } while (u == 0.0);
    return u;
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t path_index_;
  std::uint64_t state_;
  std::uint64_t count_ = 0;
};

} // namespace ctmix

#endif
