#include "affpipe/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace affpipe {

namespace {

constexpr double kDetEpsilon = 1e-12;
constexpr double kWeightEpsilon = 1e-12;

// Similarity transform taking the points to zero centroid and mean distance
// sqrt(2).
Eigen::Matrix3d conditioning_transform(std::span<const Point2> pts) {
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist <= 0.0) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "all correspondence points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

Point2 transform(const Eigen::Matrix3d& t, Point2 p) {
  const Eigen::Vector3d v = t * Eigen::Vector3d(p.x, p.y, 1.0);
  return {v.x() / v.z(), v.y() / v.z()};
}

bool nearly_collinear(Point2 a, Point2 b, Point2 c) {
  const Point2 u = b - a;
  const Point2 v = c - a;
  const double cross = u.x * v.y - u.y * v.x;
  return std::abs(cross) <= 1e-9 * (norm(u) * norm(v)) + 1e-12;
}

bool sample_is_degenerate(const std::array<Correspondence, 4>& s) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (nearly_collinear(s[i].src, s[j].src, s[k].src) ||
            nearly_collinear(s[i].dst, s[j].dst, s[k].dst)) {
          return true;
        }
      }
    }
  }
  return false;
}

}  // namespace

double norm(Point2 p) { return std::hypot(p.x, p.y); }
double distance(Point2 a, Point2 b) { return norm(a - b); }
bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

Homography::Homography() : m_(Eigen::Matrix3d::Identity()) {}

Homography::Homography(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "homography has non-finite entries");
  }
  if (std::abs(m(2, 2)) < kDetEpsilon) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "homography cannot be normalized to m22 = 1");
  }
  m_ = m / m(2, 2);
  if (std::abs(m_.determinant()) <= kDetEpsilon) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography is singular");
  }
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Homography Homography::scaling(double sx, double sy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = sx;
  m(1, 1) = sy;
  return Homography(m);
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Point2 Homography::apply(Point2 p) const {
  const double w = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
  if (std::abs(w) < kWeightEpsilon) {
    throw Error(ErrorCode::PointAtInfinity, "point maps to infinity");
  }
  return {(m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2)) / w,
          (m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2)) / w};
}

std::string_view box_label_name(BoxLabel label) {
  switch (label) {
    case BoxLabel::HandLeft: return "hand_left";
    case BoxLabel::HandRight: return "hand_right";
    case BoxLabel::Object: return "object";
    case BoxLabel::Tool: return "tool";
  }
  return "object";
}

std::optional<BoxLabel> parse_box_label(std::string_view name) {
  if (name == "hand_left" || name == "left_hand") return BoxLabel::HandLeft;
  if (name == "hand_right" || name == "right_hand") return BoxLabel::HandRight;
  if (name == "object") return BoxLabel::Object;
  if (name == "tool") return BoxLabel::Tool;
  return std::nullopt;
}

BBox BBox::clamped(int width, int height) const {
  BBox b = *this;
  b.x_min = std::clamp(b.x_min, 0.0, static_cast<double>(width));
  b.x_max = std::clamp(b.x_max, 0.0, static_cast<double>(width));
  b.y_min = std::clamp(b.y_min, 0.0, static_cast<double>(height));
  b.y_max = std::clamp(b.y_max, 0.0, static_cast<double>(height));
  return b;
}

CorrespondenceSet filter_correspondences(const CorrespondenceSet& c,
                                         std::span<const BBox> masks) {
  CorrespondenceSet out;
  out.frame_src = c.frame_src;
  out.frame_dst = c.frame_dst;
  out.pairs.reserve(c.pairs.size());
  for (const auto& pair : c.pairs) {
    const bool masked = std::any_of(masks.begin(), masks.end(),
                                    [&](const BBox& b) { return b.contains(pair.src); });
    if (!masked) out.pairs.push_back(pair);
  }
  if (out.pairs.size() < kMinHomographyPairs) {
    throw Error(ErrorCode::FilteredBelowMinimum,
                std::to_string(out.pairs.size()) +
                    " correspondences survive masking, need 4");
  }
  return out;
}

Homography estimate_homography_dlt(std::span<const Correspondence> pairs) {
  if (pairs.size() < kMinHomographyPairs) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "DLT needs at least 4 correspondences");
  }
  std::vector<Point2> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& p : pairs) {
    src.push_back(p.src);
    dst.push_back(p.dst);
  }
  const Eigen::Matrix3d ts = conditioning_transform(src);
  const Eigen::Matrix3d td = conditioning_transform(dst);

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point2 s = transform(ts, src[i]);
    const Point2 d = transform(td, dst[i]);
    a.row(2 * i) << 0, 0, 0, -s.x, -s.y, -1, d.y * s.x, d.y * s.y, d.y;
    a.row(2 * i + 1) << s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y, -d.x;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Rank 8 is required for a unique null vector.
  if (sv.size() < 8 || sv(7) <= 1e-10 * sv(0)) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "DLT design matrix is rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(td.inverse() * hn * ts);
}

double reprojection_error(const Homography& h, const Correspondence& c) {
  try {
    return distance(h.apply(c.src), c.dst);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

RansacResult ransac_homography(const CorrespondenceSet& c, double threshold,
                               int iterations, std::uint64_t seed) {
  const std::size_t n = c.pairs.size();
  if (n < kMinHomographyPairs) {
    throw Error(ErrorCode::NoConsensus,
                "RANSAC needs at least 4 correspondences, got " +
                    std::to_string(n));
  }

  auto inliers_of = [&](const Homography& h) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (reprojection_error(h, c.pairs[i]) < threshold) idx.push_back(i);
    }
    return idx;
  };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> best_inliers;

  for (int it = 0; it < iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (std::size_t k = 0; k < 4; ++k) {
      std::size_t candidate;
      do {
        candidate = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + k, candidate) !=
               idx.begin() + k);
      idx[k] = candidate;
    }
    std::array<Correspondence, 4> sample{};
    for (std::size_t k = 0; k < 4; ++k) sample[k] = c.pairs[idx[k]];
    if (sample_is_degenerate(sample)) continue;

    std::optional<Homography> model;
    try {
      model = estimate_homography_dlt(sample);
    } catch (const Error&) {
      continue;
    }
    auto inliers = inliers_of(*model);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      if (best_inliers.size() == n) break;
    }
  }

  if (best_inliers.size() < kMinHomographyPairs) {
    throw Error(ErrorCode::NoConsensus,
                "best consensus set has " + std::to_string(best_inliers.size()) +
                    " inliers");
  }

  std::vector<Correspondence> support;
  support.reserve(best_inliers.size());
  for (auto i : best_inliers) support.push_back(c.pairs[i]);
  Homography refit = estimate_homography_dlt(support);
  auto refit_inliers = inliers_of(refit);
  if (refit_inliers.size() >= best_inliers.size()) {
    return {refit, std::move(refit_inliers)};
  }
  return {refit, std::move(best_inliers)};
}

Homography chain_homographies(std::span<const Homography> links) {
  if (links.empty()) {
    throw Error(ErrorCode::EmptyChain, "cannot chain an empty homography list");
  }
  Eigen::Matrix3d acc = Eigen::Matrix3d::Identity();
  for (const auto& h : links) {
    acc = h.matrix() * acc;
    if (std::abs(acc(2, 2)) > kDetEpsilon) acc /= acc(2, 2);
  }
  return Homography(acc);
}

std::vector<Point2> project_points(const Homography& h,
                                   std::span<const Point2> pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(h.apply(p));
  return out;
}

}  // namespace affpipe
