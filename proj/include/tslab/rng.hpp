#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace tslab {

using Rng = std::mt19937_64;

/// Independent purposes a single run draws randomness for. Each role gets its
/// own stream so that agents sharing a run index see the same true parameter
/// and context sequence.
enum class StreamRole : std::uint32_t {
  param = 0,
  contexts = 1,
  rewards = 2,
  sampling = 3,
};

inline Rng make_stream(std::uint64_t base_seed, std::uint64_t run_index, StreamRole role) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed),
                    static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(run_index),
                    static_cast<std::uint32_t>(run_index >> 32),
                    static_cast<std::uint32_t>(role),
                    0x74736c62u};
  return Rng(seq);
}

// 53 random mantissa bits, strictly below 1.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_categorical: empty distribution");
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // u landed in the rounding gap above the accumulated mass
  return last_positive;
}

}  // namespace tslab
