#pragma once

#include <cstdint>
#include <random>

namespace leea {

using Rng = std::mt19937_64;

/// Independent purposes inside one run. Each gets its own family of streams so
/// that e.g. changing the batch size does not perturb initialization draws.
enum class StreamPurpose : std::uint64_t {
  kInit = 1,
  kBatch = 2,
  kSelection = 3,
  kCrossover = 4,
  kMutation = 5,
  kSelfAdaptation = 6,
  kSplit = 7,
  kShuffle = 8,
  kSynthetic = 9,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ c);
}

/// Deterministic stream factory for one run. A stream is addressed by
/// (purpose, major, minor), typically (purpose, generation, offspring slot),
/// so draws never depend on the order in which workers pick up tasks.
class RunStreams {
 public:
  explicit RunStreams(std::uint64_t run_seed) : run_seed_(run_seed) {}

  std::uint64_t run_seed() const noexcept { return run_seed_; }

  std::uint64_t seed_for(StreamPurpose purpose, std::uint64_t major = 0,
                         std::uint64_t minor = 0) const noexcept {
    return derive_seed(run_seed_, static_cast<std::uint64_t>(purpose), major, minor);
  }

  Rng make(StreamPurpose purpose, std::uint64_t major = 0, std::uint64_t minor = 0) const {
    return Rng(seed_for(purpose, major, minor));
  }

 private:
  std::uint64_t run_seed_;
};

}  // namespace leea
