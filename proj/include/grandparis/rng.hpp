#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace grandparis {

/// Identifies one independent random stream: a run seed plus a path of tags
/// (dataset, step, particle, purpose, ...). Children are derived by hashing,
/// so the stream a particle uses never depends on scheduling.
class StreamKey {
 public:
  constexpr StreamKey() = default;
  constexpr explicit StreamKey(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {}

  StreamKey child(std::uint64_t tag) const;
  StreamKey child(std::initializer_list<std::uint64_t> tags) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

/// Purpose tags used when deriving per-particle streams.
enum class StreamTag : std::uint64_t {
  data = 0x64617461,
  init = 0x696e6974,
  propagate = 0x70726f70,
  weight = 0x77656967,
  backward = 0x6261636b,
  functional = 0x66756e63,
  fixed_lag = 0x666c6167,
  reference = 0x72656665,
  grand_paris = 0x67706172,
};

constexpr std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

/// xoshiro256++ seeded through splitmix64 from (seed, stream_id).
/// Satisfies UniformRandomBitGenerator; owns a cached normal sampler.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);
  explicit RngStream(const StreamKey& key) : RngStream(key.seed(), key.stream_id()) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(*this); }
  double normal(double mean, double sd) { return mean + sd * normal_(*this); }
  /// Poisson count; a zero mean returns 0 without consuming randomness.
  long poisson(double mean);

 private:
  std::uint64_t s_[4];
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace grandparis
