#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "affpipe/error.hpp"

namespace affpipe {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
double norm(Point2 p);
double distance(Point2 a, Point2 b);
bool is_finite(Point2 p);

/// Projective 3x3 transform, kept invertible and scaled so that m(2,2) == 1.
class Homography {
 public:
  /// Identity.
  Homography();
  /// Normalizes `m`; throws DegenerateConfiguration if it cannot be
  /// canonicalized (m(2,2) ~ 0) or is singular.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography translation(double dx, double dy);
  static Homography scaling(double sx, double sy);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Homography inverse() const;
  /// Throws PointAtInfinity when the homogeneous weight vanishes.
  Point2 apply(Point2 p) const;

 private:
  Eigen::Matrix3d m_;
};

struct Correspondence {
  Point2 src;
  Point2 dst;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  int frame_src = 0;
  int frame_dst = 1;
};

enum class BoxLabel { HandLeft, HandRight, Object, Tool };

std::string_view box_label_name(BoxLabel label);
/// Accepts the canonical names plus a few detector spellings ("left_hand", ...).
std::optional<BoxLabel> parse_box_label(std::string_view name);

/// Axis-aligned box. Containment is half-open: [x_min, x_max) x [y_min, y_max).
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  BoxLabel label = BoxLabel::Object;

  bool contains(Point2 p) const {
    return p.x >= x_min && p.x < x_max && p.y >= y_min && p.y < y_max;
  }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  /// Clamps to [0, width] x [0, height].
  BBox clamped(int width, int height) const;
};

inline constexpr std::size_t kMinHomographyPairs = 4;
inline constexpr int kDefaultRansacIterations = 2000;
inline constexpr double kDefaultRansacThreshold = 3.0;

/// Drops pairs whose source point falls inside any mask box.
CorrespondenceSet filter_correspondences(const CorrespondenceSet& c,
                                         std::span<const BBox> masks);

/// Normalized direct linear transform over all pairs (least squares when
/// more than four are given).
Homography estimate_homography_dlt(std::span<const Correspondence> pairs);
inline Homography estimate_homography_dlt(const CorrespondenceSet& c) {
  return estimate_homography_dlt(c.pairs);
}

struct RansacResult {
  Homography model;
  std::vector<std::size_t> inliers;
};

/// Forward reprojection error |H(src) - dst| in pixels; +inf if src maps to
/// infinity.
double reprojection_error(const Homography& h, const Correspondence& c);

RansacResult ransac_homography(const CorrespondenceSet& c,
                               double threshold = kDefaultRansacThreshold,
                               int iterations = kDefaultRansacIterations,
                               std::uint64_t seed = 0);

/// Composes per-frame links in frame order: chain({H01, H12}) = H12 * H01.
Homography chain_homographies(std::span<const Homography> links);

std::vector<Point2> project_points(const Homography& h,
                                   std::span<const Point2> pts);

}  // namespace affpipe
