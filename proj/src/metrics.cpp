#include "affpipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

namespace affpipe {

namespace {

void check_same_shape(const Heatmap& a, const Heatmap& b) {
  if (a.width != b.width || a.height != b.height ||
      a.values.size() != b.values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "heatmaps differ in size");
  }
}

double mass(const Heatmap& h) {
  double s = 0.0;
  for (float v : h.values) s += v;
  return s;
}

}  // namespace

double sim(const Heatmap& pred, const Heatmap& gt) {
  check_same_shape(pred, gt);
  const double mp = mass(pred);
  const double mg = mass(gt);
  if (!(mp > 0.0) || !(mg > 0.0)) {
    throw Error(ErrorCode::ZeroMassMap, "Sim needs maps with positive mass");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    s += std::min(pred.values[i] / mp, gt.values[i] / mg);
  }
  return std::min(s, 1.0);
}

double cc(const Heatmap& pred, const Heatmap& gt) {
  check_same_shape(pred, gt);
  const auto n = static_cast<double>(pred.values.size());
  const double mp = mass(pred) / n;
  const double mg = mass(gt) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double dx = pred.values[i] - mp;
    const double dy = gt.values[i] - mg;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::ZeroVarianceMap, "CC needs maps with nonzero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double auc_judd(const Heatmap& pred, const FixationSet& fix) {
  if (fix.points.empty()) throw Error(ErrorCode::EmptyFixations, "no fixations");
  std::set<std::size_t> pixels;
  for (const auto& p : fix.points) {
    const long col = std::lround(p.x);
    const long row = std::lround(p.y);
    if (col < 0 || row < 0 || col >= pred.width || row >= pred.height) {
      throw Error(ErrorCode::OutOfRange, "fixation outside the predicted map");
    }
    pixels.insert(static_cast<std::size_t>(row) * pred.width + static_cast<std::size_t>(col));
  }

  std::vector<double> fix_values;
  std::vector<double> other_values;
  fix_values.reserve(pixels.size());
  other_values.reserve(pred.values.size() - pixels.size());
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    (pixels.count(i) ? fix_values : other_values).push_back(pred.values[i]);
  }
  std::sort(fix_values.begin(), fix_values.end(), std::greater<>());
  std::sort(other_values.begin(), other_values.end(), std::greater<>());

  std::vector<double> thresholds = fix_values;
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto nf = static_cast<double>(fix_values.size());
  const auto no = static_cast<double>(other_values.size());
  auto at_or_above = [](const std::vector<double>& desc, double th) {
    // desc is sorted descending.
    return static_cast<double>(
        std::upper_bound(desc.begin(), desc.end(), th, std::greater<>()) - desc.begin());
  };

  double area = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  auto step_to = [&](double fpr, double tpr) {
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
  };
  for (double th : thresholds) {
    const double tpr = at_or_above(fix_values, th) / nf;
    const double fpr = no > 0.0 ? at_or_above(other_values, th) / no : 0.0;
    step_to(fpr, tpr);
  }
  step_to(1.0, 1.0);
  return area;
}

double ade(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "ADE needs sequences of equal length");
  }
  if (a.empty()) throw Error(ErrorCode::EmptySequence, "ADE of empty sequences");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += distance(a[i], b[i]);
  return s / static_cast<double>(a.size());
}

DtwResult dtw_path(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::EmptySequence, "DTW needs nonempty sequences");
  }
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost((n + 1) * (m + 1), inf);
  std::vector<std::size_t> len((n + 1) * (m + 1), 0);
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  cost[at(0, 0)] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      // Diagonal first so ties keep the shortest path.
      std::size_t from = at(i - 1, j - 1);
      if (cost[at(i - 1, j)] < cost[from]) from = at(i - 1, j);
      if (cost[at(i, j - 1)] < cost[from]) from = at(i, j - 1);
      cost[at(i, j)] = cost[from] + distance(a[i - 1], b[j - 1]);
      len[at(i, j)] = len[from] + 1;
    }
  }
  return {cost[at(n, m)], len[at(n, m)]};
}

std::vector<Point2> resample_uniform(std::span<const Point2> pts, int n) {
  if (pts.empty()) throw Error(ErrorCode::EmptySequence, "cannot resample nothing");
  if (n < 2) throw Error(ErrorCode::InvalidInput, "resample to at least 2 points");
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n));
  const double last = static_cast<double>(pts.size() - 1);
  for (int i = 0; i < n; ++i) {
    const double u = last * i / (n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(u));
    const std::size_t hi = std::min(lo + 1, pts.size() - 1);
    const double f = u - static_cast<double>(lo);
    out.push_back({pts[lo].x + f * (pts[hi].x - pts[lo].x),
                   pts[lo].y + f * (pts[hi].y - pts[lo].y)});
  }
  return out;
}

}  // namespace affpipe
