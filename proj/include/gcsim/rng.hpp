#pragma once

#include <cstdint>
#include <random>

namespace gcsim {

using Rng = std::mt19937_64;

// Independent stream families derived from one master seed.
enum class StreamTag : std::uint32_t {
  noise = 1,       // noise draw j of a repetition pool
  hypotheses = 2,  // hypothesis sample of repetition i
  sweep_point = 3, // per-point seed of a CLI sweep
  inner = 4,       // inner draws of the correlated estimator
};

// Seed of substream (tag, index) under `master`. Pure function of its
// arguments, so a task computes its own seed regardless of which worker runs it.
inline std::uint64_t substream_seed(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline Rng make_substream(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  return Rng{substream_seed(master, tag, index)};
}

}  // namespace gcsim
