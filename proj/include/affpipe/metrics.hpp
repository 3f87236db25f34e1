#pragma once

#include <optional>
#include <span>
#include <vector>

#include "affpipe/contact.hpp"
#include "affpipe/geometry.hpp"

namespace affpipe {

/// Ground-truth contact keypoints for AUC-Judd.
struct FixationSet {
  std::vector<Point2> points;
  int width = 0;
  int height = 0;
};

struct MetricReport {
  std::optional<double> sim;
  std::optional<double> cc;
  std::optional<double> auc_j;
  std::optional<double> ade;
  std::optional<double> dtw;
  /// dtw divided by the number of cells on the optimal warping path.
  std::optional<double> dtw_normalized;
};

/// Histogram intersection after normalizing both maps to unit mass.
double sim(const Heatmap& pred, const Heatmap& gt);

/// Pearson correlation of the flattened maps.
double cc(const Heatmap& pred, const Heatmap& gt);

/// AUC-Judd. Fixations are rounded to their pixel and deduplicated;
/// thresholds are the distinct predicted values at those pixels, with the
/// ROC closed by (0, 0) and (1, 1).
double auc_judd(const Heatmap& pred, const FixationSet& fix);

double ade(std::span<const Point2> a, std::span<const Point2> b);

struct DtwResult {
  double cost = 0.0;
  std::size_t path_length = 0;
};

/// Unconstrained DTW with Euclidean local cost.
DtwResult dtw_path(std::span<const Point2> a, std::span<const Point2> b);
inline double dtw(std::span<const Point2> a, std::span<const Point2> b) {
  return dtw_path(a, b).cost;
}

/// Linear interpolation at n uniformly spaced index positions; endpoints are
/// kept.
std::vector<Point2> resample_uniform(std::span<const Point2> pts, int n);

}  // namespace affpipe
