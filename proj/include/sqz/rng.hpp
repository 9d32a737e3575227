#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace sqz::rng {

// Identifier written into stream-file headers. Anyone re-implementing the
// generator from this contract reproduces the same draws:
//   - chunk seeds: splitmix64 applied twice to
//         master_seed + 0x9E3779B97F4A7C15 * (stream_id + 1)
//                     + 0xBF58476D1CE4E5B9 * (chunk_index + 1)
//   - core generator: xoshiro256++, state from four splitmix64 outputs
//   - uniforms: (next() >> 11) * 2^-53, shifted into (0,1]
//   - normals: Box-Muller pairs, second value cached within a chunk only
//   - chunk length: 4096 values; chunk k covers samples [4096k, 4096(k+1))
inline constexpr std::string_view kAlgorithmId =
    "sqz-rng/1:splitmix64-chunks+xoshiro256++/box-muller/4096";

inline constexpr std::size_t kChunkSize = 4096;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in (0,1]: 53 random bits, zero excluded so that
  // log(u) below is always finite.
  double uniform01() {
    constexpr double kScale = 0x1.0p-53;
    return static_cast<double>((next() >> 11) + 1) * kScale;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

inline std::uint64_t chunk_seed(std::uint64_t master_seed, std::uint64_t stream_id,
                                std::uint64_t chunk_index) {
  std::uint64_t s = master_seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1) +
                    0xBF58476D1CE4E5B9ULL * (chunk_index + 1);
  splitmix64_next(s);
  return splitmix64_next(s);
}

// Standard-normal source over one chunk. The Box-Muller cache never crosses
// a chunk boundary, so chunks are generated independently of one another.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double next();

 private:
  Xoshiro256pp rng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Fills `out` with standard normals for the given (master seed, stream id).
// Sample i always comes from chunk i / kChunkSize, position i % kChunkSize,
// so the result is identical for any thread count.
void fill_standard_normals(std::uint64_t master_seed, std::uint64_t stream_id,
                           std::span<double> out, int n_threads = 1);

}  // namespace sqz::rng
