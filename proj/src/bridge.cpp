#include "grandparis/bridge.hpp"

#include <algorithm>
#include <cmath>

#include "grandparis/errors.hpp"

namespace grandparis {
namespace {

void check_duration(double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw DomainError("bridge duration must be finite and > 0");
}

}  // namespace

BridgeSkeleton::BridgeSkeleton(double start, double end, double duration)
    : start_(start), end_(end), duration_(duration) {
  check_duration(duration);
}

BridgeSkeleton BridgeSkeleton::with_minimum(double start, double end, double duration,
                                            double min_value, double min_time) {
  BridgeSkeleton s(start, end, duration);
  s.reset_with_minimum(start, end, duration, min_value, min_time);
  return s;
}

void BridgeSkeleton::reset(double start, double end, double duration) {
  check_duration(duration);
  start_ = start;
  end_ = end;
  duration_ = duration;
  has_min_ = false;
  nodes_.clear();
}

void BridgeSkeleton::reset_with_minimum(double start, double end, double duration,
                                        double min_value, double min_time) {
  reset(start, end, duration);
  if (!(min_time > 0.0 && min_time < duration))
    throw DomainError("bridge minimum time must lie strictly inside (0, duration)");
  if (!(min_value <= std::min(start, end)))
    throw DomainError("bridge minimum must not exceed the endpoints");
  has_min_ = true;
  min_value_ = min_value;
  min_time_ = min_time;
  nodes_.push_back({min_time, min_value, {0.0, 0.0, 0.0}});
}

std::optional<double> BridgeSkeleton::min_value() const {
  if (!has_min_) return std::nullopt;
  return min_value_;
}

std::optional<double> BridgeSkeleton::min_time() const {
  if (!has_min_) return std::nullopt;
  return min_time_;
}

std::vector<BridgePoint> BridgeSkeleton::known_points() const {
  std::vector<BridgePoint> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back({n.time, n.value});
  return out;
}

BridgeSkeleton::Node BridgeSkeleton::left_end() const {
  return {0.0, start_, {start_ - (has_min_ ? min_value_ : 0.0), 0.0, 0.0}};
}

BridgeSkeleton::Node BridgeSkeleton::right_end() const {
  return {duration_, end_, {end_ - (has_min_ ? min_value_ : 0.0), 0.0, 0.0}};
}

std::size_t BridgeSkeleton::upper_index(double t) const {
  // Sequential reveals append at the back, so test that first.
  if (nodes_.empty() || nodes_.back().time < t) return nodes_.size();
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t,
                             [](const Node& n, double v) { return n.time < v; });
  return static_cast<std::size_t>(it - nodes_.begin());
}

PoissonTimes sample_poisson_times(double intensity, double duration, RngStream& rng) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity))
    throw DomainError("sample_poisson_times: intensity must be finite and >= 0");
  check_duration(duration);
  PoissonTimes out;
  out.count = rng.poisson(intensity);
  out.times.resize(static_cast<std::size_t>(out.count));
  for (auto& t : out.times) t = duration * rng.uniform();
  return out;
}

double bridge_interpolate(BridgeSkeleton& s, double t, RngStream& rng) {
  if (s.has_min_)
    throw PreconditionError("bridge_interpolate: skeleton is conditioned on its minimum");
  if (!(t >= 0.0 && t <= s.duration_)) throw DomainError("bridge_interpolate: t outside [0, duration]");
  if (t == 0.0) return s.start_;
  if (t == s.duration_) return s.end_;

  const std::size_t hi = s.upper_index(t);
  if (hi < s.nodes_.size() && s.nodes_[hi].time == t) return s.nodes_[hi].value;
  const auto left = hi == 0 ? s.left_end() : s.nodes_[hi - 1];
  const auto right = hi == s.nodes_.size() ? s.right_end() : s.nodes_[hi];

  const double span = right.time - left.time;
  const double w = (t - left.time) / span;
  const double mean = left.value + w * (right.value - left.value);
  const double var = (t - left.time) * (right.time - t) / span;
  const double value = mean + std::sqrt(var) * rng.normal();
  s.nodes_.insert(s.nodes_.begin() + static_cast<std::ptrdiff_t>(hi), {t, value, {0.0, 0.0, 0.0}});
  return value;
}

double sample_inverse_gaussian(double mean, double shape, RngStream& rng) {
  const double nu = rng.normal();
  const double r = mean * nu * nu / (2.0 * shape);
  // mean * (1 + r - sqrt(r^2 + 2r)), written to avoid cancellation.
  const double x = mean / (1.0 + r + std::sqrt(r * r + 2.0 * r));
  if (rng.uniform() * (mean + x) <= mean) return x;
  return mean * mean / x;
}

BridgeMinimum sample_bridge_minimum(double x, double y, double duration, RngStream& rng) {
  check_duration(duration);
  const double low = std::min(x, y);
  const double gap = std::abs(x - y);
  for (;;) {
    // P(min < m) = exp(-2 (x - m)(y - m) / duration), inverted in stable form.
    const double log_u = std::log(rng.uniform_open());
    const double root = std::sqrt(gap * gap - 2.0 * duration * log_u);
    const double m = low + duration * log_u / (root + gap);
    const double a = x - m;
    const double b = y - m;
    if (!(a > 0.0 && b > 0.0)) continue;

    // Given m, Z = (duration - t_min) / t_min has density proportional to
    // (1 + Z) Z^{-3/2} exp(-c1 Z - c2 / Z): a two-component inverse Gaussian mixture.
    const double c1 = a * a / (2.0 * duration);
    const double c2 = b * b / (2.0 * duration);
    double z;
    if (rng.uniform() * (a + b) < a) {
      z = sample_inverse_gaussian(std::sqrt(c2 / c1), 2.0 * c2, rng);
    } else {
      z = 1.0 / sample_inverse_gaussian(std::sqrt(c1 / c2), 2.0 * c1, rng);
    }
    const double t_min = duration / (1.0 + z);
    if (!(t_min > 0.0 && t_min < duration) || !std::isfinite(t_min)) continue;
    return {m, t_min};
  }
}

double sample_bessel_bridge_point(BridgeSkeleton& s, double t, RngStream& rng) {
  if (!s.has_min_) throw PreconditionError("sample_bessel_bridge_point: skeleton has no recorded minimum");
  if (!(t >= 0.0 && t <= s.duration_))
    throw DomainError("sample_bessel_bridge_point: t outside [0, duration]");
  if (t == 0.0) return s.start_;
  if (t == s.duration_) return s.end_;

  const std::size_t hi = s.upper_index(t);
  if (hi < s.nodes_.size() && s.nodes_[hi].time == t) return s.nodes_[hi].value;
  // The minimum node always separates the two Bessel segments, so both
  // neighbours belong to the same segment.
  const auto left = hi == 0 ? s.left_end() : s.nodes_[hi - 1];
  const auto right = hi == s.nodes_.size() ? s.right_end() : s.nodes_[hi];

  const double span = right.time - left.time;
  const double w = (t - left.time) / span;
  const double sd = std::sqrt((t - left.time) * (right.time - t) / span);
  std::array<double, 3> c{};
  double norm2 = 0.0;
  for (int d = 0; d < 3; ++d) {
    c[d] = left.offset[d] + w * (right.offset[d] - left.offset[d]) + sd * rng.normal();
    norm2 += c[d] * c[d];
  }
  const double value = s.min_value_ + std::sqrt(norm2);
  s.nodes_.insert(s.nodes_.begin() + static_cast<std::ptrdiff_t>(hi), {t, value, c});
  return value;
}

}  // namespace grandparis
