#include "grandparis/rng.hpp"

#include <cmath>

#include "grandparis/errors.hpp"

namespace grandparis {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  std::uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

StreamKey StreamKey::child(std::uint64_t t) const { return StreamKey(seed_, mix(stream_id_, t)); }

StreamKey StreamKey::child(std::initializer_list<std::uint64_t> tags) const {
  StreamKey k = *this;
  for (auto t : tags) k = k.child(t);
  return k;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t state = mix(mix(0x243f6a8885a308d3ULL, seed), stream_id);
  for (auto& w : s_) w = splitmix64(state);
}

RngStream::result_type RngStream::operator()() noexcept {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

long RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  std::poisson_distribution<long> dist(mean);
  return dist(*this);
}

}  // namespace grandparis
