#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "affpipe/geometry.hpp"

namespace affpipe {

/// Row-major boolean grid. Pixel (col, row) has its center at (col, row).
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int col, int row) const {
    return bits[static_cast<std::size_t>(row) * width + col] != 0;
  }
  void set(int col, int row, bool v) {
    bits[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0;
  }
  std::size_t count() const;
};

/// Row-major float grid; stored heatmaps are peak-normalized to max 1.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  Heatmap() = default;
  Heatmap(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  float at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  float& at(int col, int row) {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  /// (col, row) of the first maximum in row-major order.
  std::pair<int, int> argmax() const;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Point2> means;
  std::vector<Eigen::Matrix2d> covariances;

  std::size_t k() const { return weights.size(); }
  double log_density(Point2 p) const;
  /// Mean per-point log-likelihood.
  double mean_log_likelihood(std::span<const Point2> pts) const;
};

inline constexpr int kDefaultGmmComponents = 3;
inline constexpr int kDefaultGmmMaxIters = 100;
inline constexpr int kDefaultContactSamples = 30;
inline constexpr double kDefaultBlurSigma = 4.0;
inline constexpr double kCovarianceFloor = 1e-4;
inline constexpr double kEmTolerance = 1e-6;

/// Pixel centers that are set in `mask` and inside `box`. Throws
/// EmptyIntersection when none are.
std::vector<Point2> intersect_mask_bbox(const BinaryMask& mask, const BBox& box);

/// Projects through `h` and keeps points whose nearest pixel lies in a
/// width x height frame.
std::vector<Point2> project_region(std::span<const Point2> pts,
                                   const Homography& h, int width, int height);

struct GmmFit {
  GaussianMixture mixture;
  /// Mean log-likelihood after initialization and after every EM step.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

/// EM with k-means++ seeding. Covariances get kCovarianceFloor * I added
/// after every M-step.
GmmFit fit_gmm_traced(std::span<const Point2> pts, int k,
                      int max_iters = kDefaultGmmMaxIters, std::uint64_t seed = 0);

inline GaussianMixture fit_gmm(std::span<const Point2> pts, int k,
                               int max_iters = kDefaultGmmMaxIters,
                               std::uint64_t seed = 0) {
  return fit_gmm_traced(pts, k, max_iters, seed).mixture;
}

std::vector<Point2> sample_contact_points(const GaussianMixture& g, int n,
                                          std::uint64_t seed = 0);

/// Sum of isotropic Gaussians truncated at 3 sigma, peak-normalized.
Heatmap rasterize_heatmap(std::span<const Point2> pts, int width, int height,
                          double sigma = kDefaultBlurSigma);

}  // namespace affpipe
