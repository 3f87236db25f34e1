#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "affpipe/geometry.hpp"

namespace affpipe {

/// Point tracks sharing one time axis. timestamps[0] == 0, strictly
/// increasing, within [0, 1].
struct TrackSet {
  std::vector<std::vector<Point2>> tracks;
  std::vector<double> timestamps;

  std::size_t steps() const { return timestamps.size(); }
  /// Throws InvalidInput when the shape or time axis is malformed.
  void validate() const;
};

/// Rotation-plus-translation motion model
///   f(t) = x0 + a (R(theta t) - I) [cos psi, sin psi]^T + b [cos phi, sin phi]^T t.
/// theta is the signed total rotation over t in [0, 1]; a and b are lengths
/// in pixels.
struct TrajectoryParams {
  double theta = 0.0;
  double a = 0.0;
  double psi = 0.0;
  double b = 0.0;
  double phi = 0.0;
  Point2 x0;

  /// a, b >= 0 (flipping the paired direction), psi and phi in [0, 2pi);
  /// zero-length terms get zero angles.
  TrajectoryParams canonical() const;
};

Point2 eval_trajectory(const TrajectoryParams& p, double t);

/// Samples f at `samples` uniform times over [0, 1].
std::vector<Point2> sample_trajectory(const TrajectoryParams& p, int samples);

struct TrajectoryFit {
  TrajectoryParams params;
  /// Root mean squared Euclidean distance over every track point, in pixels.
  double residual = 0.0;
  bool degenerate = false;
};

/// Least-squares fit of all tracks to one motion model with x0 pinned to the
/// mean of the first points. The model is linear in (a cos psi, a sin psi,
/// b cos phi, b sin phi) for fixed theta, so theta is searched on a dense
/// grid over (-2pi, 2pi) and refined with Brent's method on the profiled
/// residual. Fits are deterministic; `seed` does not change the result.
TrajectoryFit fit_trajectory(const TrackSet& tracks, std::uint64_t seed = 0);

/// Applies per_frame[i] to the i-th point of every track.
TrackSet project_tracks(const TrackSet& raw, std::span<const Homography> per_frame);

/// (cos theta, sin theta, cos psi, sin psi, cos phi, sin phi) mapped from
/// [-1, 1] to [0, 1], then a / diag, b / diag.
struct EncodedParams {
  std::array<double, 8> values{};
};

EncodedParams encode_params(const TrajectoryParams& p, double diag);
/// Angles decode into (-pi, pi]; x0 is not part of the encoding and comes
/// back as the origin.
TrajectoryParams decode_params(const EncodedParams& e, double diag);

inline constexpr int kEvalSamples = 32;

/// Translate so the first point is the origin, then scale so the largest
/// distance from the origin is 1. Zero motion stays at the origin.
std::vector<Point2> normalize_points(std::span<const Point2> pts);

std::vector<Point2> normalize_for_eval(const TrajectoryParams& p,
                                       int samples = kEvalSamples);

/// Signed difference wrapped into (-pi, pi].
double angle_difference(double a, double b);

}  // namespace affpipe
