#pragma once

// Reference computations used to derive expected values in tests. None of
// these call into the code paths they are used to check.

#include <array>
#include <cstdint>
#include <vector>

#include "affpipe/geometry.hpp"
#include "affpipe/trajectory.hpp"

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b);
Mat3 from_homography(const affpipe::Homography& h);
/// Divides by m[2][2].
Mat3 canonical(Mat3 m);

/// Minimum over every monotone alignment path, enumerated recursively.
double brute_force_dtw(const std::vector<affpipe::Point2>& a,
                       const std::vector<affpipe::Point2>& b);

struct CurveFit {
  affpipe::TrajectoryParams params;
  double rms = 0.0;
};

/// Coarse grid over (theta, a, psi, b, phi) followed by Nelder-Mead on the
/// five raw parameters. x0 is the first point.
CurveFit grid_search_fit(const std::vector<affpipe::Point2>& pts,
                         const std::vector<double>& t);

/// RMS distance between two parameter sets' curves sampled at n times.
double curve_rms(const affpipe::TrajectoryParams& p, const affpipe::TrajectoryParams& q,
                 int n = 64);

affpipe::Point2 sample_mean(const std::vector<affpipe::Point2>& pts);

/// Random homography close to a similarity, with a mild projective part.
affpipe::Homography random_homography(std::uint64_t seed, double projective = 1e-4);

}  // namespace oracle
