#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "grandparis/rng.hpp"

namespace grandparis {

struct BridgePoint {
  double time;
  double value;
};

struct PoissonTimes {
  long count = 0;
  std::vector<double> times;  // unsorted
};

/// Progressively revealed Brownian bridge from `start` at 0 to `end` at
/// `duration`. Optionally conditioned on its minimum m attained at t_min, in
/// which case the path is m plus the norm of a 3-d Brownian bridge on each
/// side of t_min (a 3-d Bessel bridge) and the components are kept so that
/// later queries stay consistent with earlier ones.
class BridgeSkeleton {
 public:
  BridgeSkeleton(double start, double end, double duration);
  static BridgeSkeleton with_minimum(double start, double end, double duration, double min_value,
                                     double min_time);

  /// Clears revealed points, keeping allocated storage.
  void reset(double start, double end, double duration);
  void reset_with_minimum(double start, double end, double duration, double min_value,
                          double min_time);

  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }
  double duration() const noexcept { return duration_; }
  std::optional<double> min_value() const;
  std::optional<double> min_time() const;
  bool has_minimum() const noexcept { return has_min_; }

  /// Revealed interior points, strictly increasing in time.
  std::vector<BridgePoint> known_points() const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    double time;
    double value;
    std::array<double, 3> offset;  // Bessel components relative to the minimum
  };

  friend double bridge_interpolate(BridgeSkeleton&, double, RngStream&);
  friend double sample_bessel_bridge_point(BridgeSkeleton&, double, RngStream&);

  Node left_end() const;
  Node right_end() const;
  std::size_t upper_index(double t) const;

  double start_;
  double end_;
  double duration_;
  bool has_min_ = false;
  double min_value_ = 0.0;
  double min_time_ = 0.0;
  std::vector<Node> nodes_;
};

/// kappa ~ Poisson(intensity), then kappa i.i.d. uniform times on [0, duration].
/// `intensity` is the full Poisson mean; it is not rescaled by `duration`.
PoissonTimes sample_poisson_times(double intensity, double duration, RngStream& rng);

/// Draws the bridge at t from its law given every point revealed so far and
/// records it. The skeleton must not carry a minimum.
double bridge_interpolate(BridgeSkeleton& skeleton, double t, RngStream& rng);

struct BridgeMinimum {
  double value;
  double time;
};

/// Joint draw of the minimum of a Brownian bridge x -> y over [0, duration]
/// and the time it is attained.
BridgeMinimum sample_bridge_minimum(double x, double y, double duration, RngStream& rng);

/// Draws the bridge at t conditioned on the recorded minimum and on every
/// point revealed so far, and records it. Result is always >= the minimum.
double sample_bessel_bridge_point(BridgeSkeleton& skeleton, double t, RngStream& rng);

/// Inverse Gaussian IG(mean, shape) draw (Michael, Schucany and Haas).
double sample_inverse_gaussian(double mean, double shape, RngStream& rng);

}  // namespace grandparis
